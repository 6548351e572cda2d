#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hencky/density.hpp"

using namespace hencky;

namespace {

SymTensor m2(double a, double b, double c) {
  const double u[] = {a, b, c};
  return SymTensor::from_upper(2, u);
}

SymTensor random_sym(int dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  std::array<double, 6> u{};
  for (auto& v : u) v = g(rng);
  return SymTensor::from_upper(dim, std::span<const double>(u.data(), sym_size(dim)));
}

// Hand-written reference formulas, independent of the catalog code.
double ref_isotropic(double a, const SymTensor& X) {
  const double t = X.trace();
  return a * (X.dev().norm() + t * t);
}

double ref_two_well(double d, const SymTensor& X) {
  // A = d diag(1,-1)/sqrt(2) in 2D
  const double s = d / std::sqrt(2.0);
  const double t = X.trace();
  const double p11 = X(0, 0) - t / 2, p22 = X(1, 1) - t / 2, p12 = X(0, 1);
  const double m = std::sqrt((p11 - s) * (p11 - s) + (p22 + s) * (p22 + s) + 2 * p12 * p12);
  const double p = std::sqrt((p11 + s) * (p11 + s) + (p22 - s) * (p22 - s) + 2 * p12 * p12);
  return std::min(m, p) + t * t + d;
}

}  // namespace

TEST_CASE("make_builtin catalog values") {
  std::mt19937_64 rng(3);
  const auto iso = make_builtin("isotropic-convex", {1.0});
  const auto iso3 = make_builtin("isotropic-convex", {2.5}, 3);
  const auto area = make_builtin("smooth-area-type", {});
  const auto wells = make_builtin("two-well-dev", {1.5});
  for (int i = 0; i < 200; ++i) {
    const SymTensor X = random_sym(2, rng, 3.0);
    const Point x{0.3, 0.7, 0.0};
    CHECK(iso(x, X) == doctest::Approx(ref_isotropic(1.0, X)).epsilon(1e-14));
    const double t = X.trace();
    CHECK(area(x, X) == doctest::Approx(std::sqrt(1 + X.dev().norm_squared()) + t * t).epsilon(1e-14));
    CHECK(wells(x, X) == doctest::Approx(ref_two_well(1.5, X)).epsilon(1e-13));
    const SymTensor Y = random_sym(3, rng, 3.0);
    CHECK(iso3(x, Y) == doctest::Approx(ref_isotropic(2.5, Y)).epsilon(1e-14));
  }
  CHECK(two_well_matrix(1.5, 2).norm() == doctest::Approx(1.5));
  CHECK(two_well_matrix(1.5, 3).trace() == 0.0);
  CHECK(iso.declared_convex());
  CHECK_FALSE(wells.declared_convex());

  CHECK_THROWS_AS(make_builtin("nope", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_builtin("isotropic-convex", {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_builtin("isotropic-convex", {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_builtin("two-well-dev", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_builtin("laminate-two-phase", {1.0, 4.0, 1.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_builtin("isotropic-convex", {1.0}, 4), std::invalid_argument);
}

TEST_CASE("laminate phases and periodicity") {
  const auto lam = make_builtin("laminate-two-phase", {1.0, 4.0, 0.5});
  const SymTensor X = SymTensor::identity(2) + m2(0.5, 0.25, -0.5);
  const double t = X.trace();
  const double pn = X.dev().norm();
  CHECK(lam({0.25, 0.1, 0}, X) == doctest::Approx(pn + 1.0 * t * t));
  CHECK(lam({0.75, 0.1, 0}, X) == doctest::Approx(pn + 4.0 * t * t));
  CHECK(lam({-0.25, 3.2, 0}, X) == lam({0.75, 0.2, 0}, X));
  CHECK(lam({7.25, -1.0, 0}, X) == lam({0.25, 0.0, 0}, X));
  CHECK_FALSE(lam.x_independent());
  REQUIRE(lam.traits().laminate.has_value());
  CHECK(lam.traits().laminate->theta == 0.5);
  CHECK(lam.growth().alpha == 1.0);
  CHECK(lam.growth().beta == 4.0);

  const Point r = reduce_periodic({-0.25, 1.0, 2.5}, 3);
  CHECK(r[0] == 0.75);
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 0.5);
}

TEST_CASE("analytic gradients agree with central differences") {
  std::mt19937_64 rng(11);
  const std::vector<MicroDensity> all = {
      make_builtin("isotropic-convex", {2.0}), make_builtin("smooth-area-type", {}),
      make_builtin("two-well-dev", {1.0}), make_builtin("laminate-two-phase", {1.0, 3.0, 0.4, 2.0, 0.5}),
      harden(make_builtin("two-well-dev", {1.0}), 0.3)};
  for (const auto& f : all) {
    REQUIRE(f.has_analytic_gradient());
    for (int i = 0; i < 50; ++i) {
      const SymTensor X = random_sym(2, rng, 1.0);
      const Point x{0.17 * i, 0.3, 0};
      const SymTensor ga = f.gradient(x, X, 1e-8);
      const SymTensor gf = f.gradient(x, X, 1e-8, GradientMode::finite_difference);
      CHECK((ga - gf).norm() < 1e-5 * (1.0 + ga.norm()));
    }
  }
}

TEST_CASE("harden") {
  const auto f = make_builtin("isotropic-convex", {1.0});
  const auto f1 = harden(f, 1.0);
  const SymTensor X = m2(1, 0, -1);
  CHECK(f1({}, X) == doctest::Approx(std::sqrt(2.0) + 2.0).epsilon(1e-15));
  CHECK(f1.declared_convex());
  CHECK_FALSE(harden(make_builtin("two-well-dev", {1.0}), 0.5).declared_convex());
  CHECK_THROWS_AS(harden(f, -0.1), std::invalid_argument);

  std::mt19937_64 rng(5);
  const auto w = make_builtin("two-well-dev", {2.0});
  const auto w0 = harden(w, 0.0);
  const auto wa = harden(w, 0.01);
  const auto wb = harden(w, 0.1);
  for (int i = 0; i < 500; ++i) {
    const SymTensor Y = random_sym(2, rng, 5.0);
    const Point x{0.1 * i, 0.2, 0};
    CHECK(w0(x, Y) == w(x, Y));
    CHECK(wa(x, Y) <= wb(x, Y));
    CHECK(w(x, Y) <= wa(x, Y));
    const SymTensor T = Y.trace() * SymTensor::identity(2);
    CHECK(wb(x, T) == w(x, T));
  }
}

TEST_CASE("check_growth") {
  for (const auto& name : builtin_names()) {
    const std::vector<double> params =
        name == "two-well-dev"         ? std::vector<double>{2.0}
        : name == "laminate-two-phase" ? std::vector<double>{1.0, 4.0, 0.5}
        : name == "isotropic-convex"   ? std::vector<double>{1.0}
                                       : std::vector<double>{};
    for (int dim : {2, 3}) {
      const auto f = make_builtin(name, params, dim);
      const auto report = check_growth(f, 20000, 42);
      CHECK_MESSAGE(report.ok(), name);
      CHECK(report.samples == 20000);
    }
  }
  const auto iso = make_builtin("isotropic-convex", {1.0});
  CHECK(check_growth(iso, 1000, 1).worst_lower_margin == doctest::Approx(0.0).epsilon(1e-9));

  // |X_dev| alone fails the lower bound along the trace ray, e.g. at X = I.
  MicroDensity dev_only(2, "dev-only", [](const Point&, const SymTensor& X, double) { return X.dev().norm(); },
                        {1.0, 1.0});
  const auto bad = check_growth(dev_only, 1000, 9);
  CHECK_FALSE(bad.ok());
  bool saw_lower = false;
  for (const auto& v : bad.violations) saw_lower = saw_lower || v.lower;
  CHECK(saw_lower);
  CHECK(dev_only({}, SymTensor::identity(2)) < std::pow(SymTensor::identity(2).trace(), 2));
  CHECK_THROWS_AS(check_growth(iso, 0, 1), std::invalid_argument);

  // Two-well constants: worst sampled ratios stay inside the registered sandwich.
  const auto wells = make_builtin("two-well-dev", {3.0});
  CHECK(wells.growth().alpha == 1.0);
  CHECK(wells.growth().beta == 6.0);
}

TEST_CASE("asymptotic convexity certificates") {
  for (const auto& [name, params] :
       std::vector<std::pair<std::string, std::vector<double>>>{{"isotropic-convex", {1.0}},
                                                                {"smooth-area-type", {}},
                                                                {"two-well-dev", {2.0}},
                                                                {"laminate-two-phase", {1.0, 4.0, 0.5}}}) {
    const auto f = make_builtin(name, params);
    const auto cert = registered_certificate(name, params);
    REQUIRE(cert.comparison);
    CHECK(cert.comparison->declared_convex());
    CHECK(cert.beta_eta > 0.0);
    const auto report = check_certificate(f, cert, 100000, 17);
    CHECK_MESSAGE(report.ok(), name);
  }
}

TEST_CASE("truncations") {
  const auto f = make_builtin("smooth-area-type", {});
  const TruncationSpec spec{2, 3, f.growth().beta};
  const auto hat = truncate_hat(f, spec);
  const auto check = truncate_check(f, spec);

  const SymTensor traceless = m2(4, 1, -4);
  CHECK(hat({}, traceless) == f({}, traceless));
  CHECK(check({}, traceless) == f({}, traceless));

  // |X_dev| = 0 and (tr X)^2 >= (M+1)^2 gives zeta = 0.
  const SymTensor big = 1.6 * SymTensor::identity(2);
  CHECK(hat({}, big) == 0.0);
  CHECK(check({}, big) - f({}, big) == doctest::Approx(spec.beta * 9 * (3.2 * 3.2 - 4)).epsilon(1e-14));

  // Level s = 6.25 halfway-ish between M^2 = 4 and (M+1)^2 = 9.
  const SymTensor mid = 1.25 * SymTensor::identity(2);
  const double zeta = (9.0 - 6.25) / 5.0;
  CHECK(truncation_cutoff(mid, spec) == doctest::Approx(zeta));
  CHECK(hat({}, mid) == doctest::Approx(zeta * f({}, mid)));
  CHECK(hat({}, mid) >= 0.0);
  CHECK(hat({}, mid) <= f({}, mid));

  std::mt19937_64 rng(23);
  for (int i = 0; i < 5000; ++i) {
    const SymTensor X = random_sym(2, rng, 2.0);
    const double fv = f({}, X);
    CHECK(hat({}, X) <= fv);
    CHECK(fv <= check({}, X));
    const double dn = X.dev().norm();
    CHECK(hat({}, X) <= spec.beta * (1 + 2 * dn + 9) + 1e-12);
  }
  CHECK_THROWS_AS(truncate_hat(f, {0, 1, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(truncate_check(f, {1, 0, 1.0}), std::invalid_argument);
}

TEST_CASE("asymptotic_fn") {
  const auto area = make_builtin("smooth-area-type", {});
  const auto iso = make_builtin("isotropic-convex", {1.0});
  const auto sched = geometric_schedule(1.0, 1e6);
  CHECK(sched.size() == 7);

  const auto a = asymptotic_fn(area, {}, m2(1, 0, -1), sched);
  CHECK_FALSE(a.infinite);
  CHECK(std::abs(a.value - std::sqrt(2.0)) < 1e-6);

  const auto b = asymptotic_fn(iso, {}, SymTensor::identity(2), sched);
  CHECK(b.infinite);
  CHECK(std::isinf(b.value));

  const SymTensor P = m2(0.3, -0.7, -0.3);
  const auto c = asymptotic_fn(iso, {}, P, sched);
  for (double r : c.ratios) CHECK(r == doctest::Approx(P.norm()).epsilon(1e-14));
  CHECK(c.value == doctest::Approx(P.norm()).epsilon(1e-14));

  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const SymTensor Q = random_sym(2, rng, 1.0).dev();
    const double s = 0.1 + 5.0 * i / 50.0;
    for (const auto* f : {&area, &iso}) {
      const double e1 = asymptotic_fn(*f, {}, Q, sched).value;
      const double es = asymptotic_fn(*f, {}, s * Q, sched).value;
      CHECK(std::abs(es - s * e1) <= 1e-6 * std::abs(s * e1));
    }
  }
  const double two[] = {1.0, 10.0};
  CHECK_THROWS_AS(asymptotic_fn(iso, {}, P, two), std::invalid_argument);
  const double dec[] = {10.0, 1.0, 100.0};
  CHECK_THROWS_AS(asymptotic_fn(iso, {}, P, dec), std::invalid_argument);
}

TEST_CASE("trace_lipschitz_check") {
  const auto iso = make_builtin("isotropic-convex", {1.0});
  const auto zero = trace_lipschitz_check(iso, m2(1, 0, -1), 0.0, 1.0, 1.0);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.ok);

  const auto one = trace_lipschitz_check(iso, m2(1, 0, -1), 1.0, 1.0, 1.0);
  CHECK(one.lhs == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(one.rhs == doctest::Approx(14.0 * 2.0 * (std::pow(2.0, 0.25) + 1.0)).epsilon(1e-14));
  CHECK(one.ok);

  CHECK_THROWS_AS(trace_lipschitz_check(iso, m2(1, 0, -1), 3.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(trace_lipschitz_check(iso, SymTensor::identity(2), 0.1, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(trace_lipschitz_check(make_builtin("two-well-dev", {1.0}), m2(1, 0, -1), 0.1, 1, 1),
                  std::invalid_argument);

  const auto area = make_builtin("smooth-area-type", {});
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const SymTensor P = random_sym(2, rng, std::pow(10.0, 3.0 * u(rng) - 1.0)).dev();
    const double kappa = 1.0 + 9.0 * u(rng);
    const double M = 1.0 + 4.0 * u(rng);
    const double bound = std::sqrt(kappa * (P.norm() + M * M));
    const double rho = (2.0 * u(rng) - 1.0) * bound;
    if (!trace_lipschitz_check(area, P, rho, kappa, M).ok) ++failures;
  }
  CHECK(failures == 0);
}
