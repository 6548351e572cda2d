#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "hencky/cell.hpp"
#include "hencky/optimize.hpp"

using namespace hencky;

namespace {

SymTensor m2(double a, double b, double c) {
  const double u[] = {a, b, c};
  return SymTensor::from_upper(2, u);
}

DisplacementField random_field(int dim, CellSpec spec, std::uint64_t seed, double amp = 0.1) {
  DisplacementField phi(dim, spec);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amp);
  for (double& v : phi.values()) v = g(rng);
  phi.enforce_boundary();
  return phi;
}

// Two-phase laminate in x1 with b |P| + a (tr)^2 per phase: the optimal periodic
// field has a constant displacement gradient g (x) e1 in each phase, so the cell
// problem reduces to a minimization over g in R^2. Brute-force pattern search.
double laminate_reference(double a1, double a2, double theta, const SymTensor& X) {
  auto phase = [](double a, const SymTensor& Z) {
    const double t = Z.trace();
    return Z.dev().norm() + a * t * t;
  };
  auto energy = [&](double g1, double g2) {
    const SymTensor G = m2(g1, 0.5 * g2, 0.0);
    return theta * phase(a1, X + G) + (1 - theta) * phase(a2, X - (theta / (1 - theta)) * G);
  };
  double b1 = 0.0, b2 = 0.0, best = energy(0, 0);
  for (double step = 1.0; step > 1e-12; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          const double v = energy(b1 + i * step, b2 + j * step);
          if (v < best - 1e-15) {
            best = v;
            b1 += i * step;
            b2 += j * step;
            moved = true;
          }
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("discrete_sym_gradient") {
  for (int dim : {2, 3}) {
    const CellSpec spec{1, 6, Boundary::dirichlet};
    const DisplacementField zero(dim, spec);
    for (const auto& E : discrete_sym_gradient(zero)) CHECK(E == SymTensor::zero(dim));

    // affine field: Q1 reproduces sym(A) on cells away from the pinned boundary
    const double A[3][3] = {{0.3, -1.2, 0.5}, {0.7, 0.1, -0.4}, {0.2, 0.9, -0.6}};
    auto affine = [&](const Point& x) {
      Vec3 v{};
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(i)] += A[i][j] * x[static_cast<std::size_t>(j)];
      return v;
    };
    const auto phi = DisplacementField::from_function(dim, spec, affine);
    const auto E = discrete_sym_gradient(phi);
    const int N = spec.nodes_per_side();
    int interior = 0;
    for (std::size_t c = 0; c < E.size(); ++c) {
      std::size_t rest = c;
      bool inside = true;
      for (int j = 0; j < dim; ++j) {
        const int cj = static_cast<int>(rest % static_cast<std::size_t>(N));
        rest /= static_cast<std::size_t>(N);
        inside = inside && cj >= 1 && cj <= N - 2;
      }
      if (!inside) continue;
      ++interior;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) CHECK(std::abs(E[c](i, j) - 0.5 * (A[i][j] + A[j][i])) < 1e-12);
    }
    CHECK(interior == static_cast<int>(std::pow(N - 2, dim)));

    // discrete divergence theorem: zero-boundary (or periodic) fields have zero mean strain
    for (Boundary b : {Boundary::dirichlet, Boundary::periodic}) {
      const auto r = random_field(dim, {2, 4, b}, 13);
      SymTensor mean(dim);
      for (const auto& S : discrete_sym_gradient(r)) mean += S;
      CHECK(mean.norm() < 1e-12);
    }
  }
}

TEST_CASE("adjoint of the symmetric gradient") {
  for (int dim : {2, 3}) {
    for (Boundary b : {Boundary::dirichlet, Boundary::periodic}) {
      const CellSpec spec{1, 5, b};
      const auto u = random_field(dim, spec, 3);
      std::mt19937_64 rng(8);
      std::normal_distribution<double> g(0.0, 1.0);
      StrainField S(u.cell_count(), SymTensor(dim));
      for (auto& s : S) {
        std::array<double, 6> c{};
        for (auto& v : c) v = g(rng);
        s = SymTensor::from_upper(dim, std::span<const double>(c.data(), sym_size(dim)));
      }
      double lhs = 0.0;
      const auto E = discrete_sym_gradient(u);
      for (std::size_t c = 0; c < E.size(); ++c) lhs += S[c].dot(E[c]);
      std::vector<double> out(u.values().size());
      sym_gradient_adjoint(dim, spec, S, out);
      double rhs = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) rhs += out[i] * u.values()[i];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("assemble_energy") {
  const auto iso = make_builtin("isotropic-convex", {1.0});
  const SymTensor X = m2(0.4, -0.3, 0.1);
  const DisplacementField zero(2, {2, 4, Boundary::dirichlet});
  CHECK(assemble_energy(iso, X, zero) == doctest::Approx(iso({}, X)).epsilon(1e-15));

  const auto lam = make_builtin("laminate-two-phase", {1.0, 4.0, 0.25});
  const double t = X.trace();
  const double expected = X.dev().norm() + (0.25 * 1.0 + 0.75 * 4.0) * t * t;
  CHECK(assemble_energy(lam, X, DisplacementField(2, {1, 8})) == doctest::Approx(expected).epsilon(1e-14));

  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto phi = random_field(2, {1, 6}, s, 0.3);
    CHECK(assemble_energy(iso, X, phi) >= iso({}, X) - 1e-12);
  }
}

TEST_CASE("minimize_cell on convex homogeneous densities") {
  const auto iso = make_builtin("isotropic-convex", {1.0});
  const auto area = make_builtin("smooth-area-type", {});
  SolverConfig cfg;
  for (const auto& X : {m2(0.4, -0.3, 0.1), SymTensor::identity(2), m2(2, 1, -3)}) {
    for (const auto* f : {&iso, &area}) {
      const auto r = minimize_cell(*f, X, {4, 4}, cfg);
      CHECK(std::abs(r.value - (*f)({}, X)) < 1e-6);
      CHECK(r.value >= (*f)({}, X) - 1e-9);
      double umax = 0.0;
      for (double v : r.minimizer.values()) umax = std::max(umax, std::abs(v));
      CHECK(umax < 1e-6);
      CHECK((r.converged || r.hit_max_iters || r.stalled));
    }
  }
}

TEST_CASE("laminate cell values approach the layered reference") {
  const auto lam = make_builtin("laminate-two-phase", {1.0, 4.0, 0.5});
  const double ref = laminate_reference(1.0, 4.0, 0.5, SymTensor::identity(2));
  CHECK(ref == doctest::Approx(7.1985281374).epsilon(1e-9));
  SolverConfig cfg;
  double previous = std::numeric_limits<double>::infinity();
  for (int m : {8, 16, 32}) {
    const auto per = minimize_cell(lam, SymTensor::identity(2), {1, m, Boundary::periodic}, cfg);
    CHECK(std::abs(per.value - ref) <= 0.02 * ref);
    const auto dir = minimize_cell(lam, SymTensor::identity(2), {1, m, Boundary::dirichlet}, cfg);
    // zero boundary values add a boundary layer on top of the layered optimum
    CHECK(dir.value >= ref - 1e-9);
    CHECK(dir.value <= previous + 1e-9);
    previous = dir.value;
  }
}

TEST_CASE("multi-start on the two-well density") {
  const auto wells = make_builtin("two-well-dev", {1.0});
  SolverConfig single;
  SolverConfig multi;
  multi.restarts = 8;
  const CellSpec spec{1, 8};
  const auto a = minimize_cell(wells, SymTensor::zero(2), spec, single);
  const auto b = minimize_cell(wells, SymTensor::zero(2), spec, multi);
  CHECK(a.value <= wells({}, SymTensor::zero(2)) + 1e-12);
  CHECK(b.value < a.value - 1e-3);
  CHECK(b.restarts_used == 8);
  // growth lower bound of the relaxed density: f_hom(0) = d
  CHECK(b.value >= 1.0 - 1e-9);
}

TEST_CASE("homogenize") {
  const auto iso = make_builtin("isotropic-convex", {1.0});
  const SymTensor X = m2(0.5, 0.2, -0.1);
  const int ks[] = {1, 2, 4};
  const auto h = homogenize(iso, X, ks, {1, 4}, SolverConfig{});
  REQUIRE(h.per_k.size() == 3);
  for (const auto& r : h.per_k) CHECK(std::abs(r.value - iso({}, X)) < 1e-6);
  CHECK(std::abs(h.estimate - iso({}, X)) < 1e-6);

  const auto lam = make_builtin("laminate-two-phase", {1.0, 4.0, 0.5});
  SolverConfig cfg;
  cfg.restarts = 2;
  cfg.seed = 77;
  const auto a = homogenize(lam, X, ks, {1, 4}, cfg);
  const auto b = homogenize(harden(lam, 0.0), X, ks, {1, 4}, cfg);
  CHECK(a.estimate == b.estimate);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.per_k[i].value == b.per_k[i].value);
    CHECK(a.per_k[i].gradient_norm == b.per_k[i].gradient_norm);
  }
  // larger cells contain the smaller ones' fields (zero extension), up to solver noise
  for (std::size_t i = 1; i < 3; ++i) CHECK(a.per_k[i].value <= a.per_k[i - 1].value + 1e-6);

  const int bad[] = {2, 1};
  CHECK_THROWS_AS(homogenize(iso, X, bad, {1, 4}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(homogenize(iso, X, std::span<const int>{}, {1, 4}, cfg), std::invalid_argument);
}

TEST_CASE("determinism and translation invariance") {
  const auto lam = make_builtin("laminate-two-phase", {1.0, 4.0, 0.5});
  SolverConfig cfg;
  cfg.restarts = 3;
  cfg.seed = 5;
  const SymTensor X = m2(0.3, 0.4, 0.2);
  const auto a = minimize_cell(lam, X, {2, 4}, cfg);
  const auto b = minimize_cell(lam, X, {2, 4}, cfg);
  CHECK(a.value == b.value);
  CHECK(a.energy_history == b.energy_history);
  CHECK(std::equal(a.minimizer.values().begin(), a.minimizer.values().end(), b.minimizer.values().begin()));

  MicroDensity shifted(
      2, "shifted", [lam](const Point& x, const SymTensor& Y, double eps) {
        return lam.smoothed({x[0] + 1.0, x[1] - 2.0, 0.0}, Y, eps);
      },
      lam.growth(), lam.traits(),
      [lam](const Point& x, const SymTensor& Y, double eps) { return lam.gradient({x[0] + 1.0, x[1] - 2.0, 0.0}, Y, eps); });
  const auto c = minimize_cell(shifted, X, {2, 4}, cfg);
  CHECK(std::abs(c.value - a.value) < 1e-9);
}

TEST_CASE("config validation") {
  SolverConfig cfg;
  cfg.tolerance = 0.0;
  const auto iso = make_builtin("isotropic-convex", {1.0});
  CHECK_THROWS_AS(minimize_cell(iso, SymTensor::zero(2), {1, 4}, cfg), std::invalid_argument);
  cfg = SolverConfig{};
  cfg.restarts = 0;
  CHECK_THROWS_AS(minimize_cell(iso, SymTensor::zero(2), {1, 4}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(minimize_cell(iso, SymTensor::zero(2), {1, 1}, SolverConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(minimize_cell(iso, SymTensor::zero(2), {0, 4}, SolverConfig{}), std::invalid_argument);
  MicroDensity broken(2, "nan", [](const Point&, const SymTensor&, double) { return std::nan(""); }, {1, 1});
  CHECK_THROWS_AS(minimize_cell(broken, SymTensor::zero(2), {1, 4}, SolverConfig{}), NonFiniteEnergy);
}

TEST_CASE("conjugate_pointwise") {
  const auto iso = make_builtin("isotropic-convex", {1.0});
  CHECK(conjugate_pointwise(iso, {}, SymTensor::zero(2), 3.0, 21) == 0.0);
  CHECK(std::isinf(conjugate_pointwise(iso, {}, m2(1.0, 0.0, -1.0), 3.0, 21)));
  for (double y : {-1.5, -0.3, 0.4, 2.0}) {
    // c(X) = |X_dev| + (tr X)^2 and Y = y I: sup_s 2 y s - 4 s^2 ... = (tr Y)^2 / (4 n^2)
    const SymTensor Y = y * SymTensor::identity(2);
    const double expected = Y.trace() * Y.trace() / 16.0;
    CHECK(conjugate_pointwise(iso, {}, Y, 4.0, 21) == doctest::Approx(expected).epsilon(1e-9));
  }
  const SymTensor Y = m2(0.8, 0.2, 0.1);
  const double expected = Y.trace() * Y.trace() / 16.0;
  CHECK(Y.dev().norm() < 1.0);
  CHECK(conjugate_pointwise(iso, {}, Y, 4.0, 21) == doctest::Approx(expected).epsilon(1e-8));
  const auto iso3 = make_builtin("isotropic-convex", {2.0}, 3);
  const SymTensor Y3 = 0.9 * SymTensor::identity(3);
  CHECK(conjugate_pointwise(iso3, {}, Y3, 2.0, 9) ==
        doctest::Approx(Y3.trace() * Y3.trace() / (4 * 2.0 * 9)).epsilon(1e-8));
  CHECK_THROWS_AS(conjugate_pointwise(make_builtin("two-well-dev", {1.0}), {}, Y, 1.0, 9),
                  std::invalid_argument);
}

TEST_CASE("dual_cell") {
  const auto iso = make_builtin("isotropic-convex", {1.0});
  const auto lam = make_builtin("laminate-two-phase", {1.0, 4.0, 0.5});
  SolverConfig cfg;
  const CellSpec spec{1, 8};

  const auto zero = dual_cell(lam, SymTensor::zero(2), spec, cfg);
  CHECK(zero.feasible);
  CHECK(zero.value == doctest::Approx(0.0));

  const SymTensor Y = m2(0.4, 0.1, 0.2);
  const auto d = dual_cell(iso, Y, spec, cfg);
  CHECK(d.feasible);
  CHECK(d.value == doctest::Approx(conjugate_pointwise(iso, {}, Y, 4.0, 21)).epsilon(1e-6));
  for (const auto& Z : d.field) CHECK((Z - Y).norm() < 1e-6);

  SolverConfig quick;
  quick.max_iters = 500;
  const auto infeasible = dual_cell(iso, m2(2.0, 0.1, -2.0), spec, quick);
  CHECK_FALSE(infeasible.feasible);
  CHECK(std::isinf(infeasible.value));

  // Fenchel: equality at the stress of a primal minimizer, inequality elsewhere
  for (Boundary b : {Boundary::periodic, Boundary::dirichlet}) {
    const CellSpec s{1, 8, b};
    const SymTensor X = m2(0.3, 0.2, -0.1);
    const auto p = minimize_cell(lam, X, s, cfg);
    const SymTensor Ystar = mean_stress(lam, X, p.minimizer);
    const auto q = dual_cell(lam, Ystar, s, cfg);
    REQUIRE(q.feasible);
    CHECK(std::abs(p.value + q.value - X.dot(Ystar)) <= 1e-6 * (1 + std::abs(X.dot(Ystar))));
    const SymTensor Yoff = Ystar + m2(0.1, -0.05, 0.2);
    const auto r = dual_cell(lam, Yoff, s, cfg);
    if (r.feasible) CHECK(p.value + r.value >= X.dot(Yoff) - 1e-7);
  }
  CHECK_THROWS_AS(dual_cell(make_builtin("two-well-dev", {1.0}), Y, spec, cfg), std::invalid_argument);
}
