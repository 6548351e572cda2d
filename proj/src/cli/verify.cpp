#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "hencky/cli.hpp"

namespace hencky {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

json to_json(const SymTensor& X) {
  return json{{"dim", X.dim()}, {"upper", std::vector<double>(X.upper().begin(), X.upper().end())}};
}

json to_json(const Point& x, int dim) { return std::vector<double>(x.begin(), x.begin() + dim); }

SymTensor gaussian_sym(int dim, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::array<double, kMaxSymSize> u{};
  for (std::size_t i = 0; i < sym_size(dim); ++i) u[i] = scale * g(rng);
  return SymTensor::from_upper(dim, std::span<const double>(u.data(), sym_size(dim)));
}

Point uniform_point(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x{};
  for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = u(rng);
  return x;
}

PropertyResult skipped(std::string name, const std::string& why) {
  PropertyResult r;
  r.name = std::move(name);
  r.skipped = true;
  r.witness = json{{"skipped", why}}.dump();
  return r;
}

/// Contract "measured <= limit" reported with margin limit - measured.
PropertyResult contract(std::string name, int samples, double measured, double limit) {
  PropertyResult r;
  r.name = std::move(name);
  r.samples = samples;
  r.worst_margin = limit - measured;
  r.ok = measured <= limit;
  if (!r.ok) r.witness = json{{"measured", measured}, {"limit", limit}}.dump();
  return r;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

CellScalar sample_cells(int dim, const CellSpec& spec, double (*g)(const Point&)) {
  const GridField probe(dim, spec);
  CellScalar out(probe.cell_count());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = g(probe.cell_centroid(c));
  return out;
}

double osc2(const Point& x) { return std::sin(2 * kPi * x[0]) * std::sin(2 * kPi * x[1]) + std::cos(2 * kPi * x[0]); }
double osc3(const Point& x) { return std::sin(2 * kPi * x[0]) * std::cos(2 * kPi * x[2]) + std::cos(4 * kPi * x[1]); }
double sinsin(const Point& x) { return std::sin(2 * kPi * x[0]) * std::sin(2 * kPi * x[1]); }

/// Largest deviation of the projection of an affine rigid field from its exact parameters.
double rigid_error(int dim, int m) {
  const CellSpec spec{1, m, Boundary::dirichlet};
  const Point x0{0.5, 0.45, 0.5};
  std::array<std::array<double, 3>, 3> W{};
  W[0][1] = 0.8;
  W[1][0] = -0.8;
  if (dim == 3) {
    W[0][2] = -0.3;
    W[2][0] = 0.3;
    W[1][2] = 0.5;
    W[2][1] = -0.5;
  }
  const Vec3 c{0.1, 0.2, 0.3};
  const GridField u = GridField::from_function(dim, spec, false, [&](const Point& x) {
    Vec3 v = c;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) v[i] += W[i][j] * (x[j] - x0[j]);
    }
    return v;
  });
  const RigidMotion R = rigid_project(u, x0, 0.4);
  double err = R.rotation_asymmetry();
  for (std::size_t i = 0; i < static_cast<std::size_t>(dim); ++i) {
    err = std::max(err, std::abs(R.translation[i] - c[i]));
    for (std::size_t j = 0; j < static_cast<std::size_t>(dim); ++j) err = std::max(err, std::abs(R.rotation[i][j] - W[i][j]));
  }
  return err;
}

}  // namespace

PropertyResult verify_growth(const MicroDensity& f, int samples, std::uint64_t seed) {
  const GrowthReport g = check_growth(f, samples, seed);
  PropertyResult r;
  r.name = "growth";
  r.samples = g.samples;
  r.worst_margin = std::min(g.worst_lower_margin, g.worst_upper_margin);
  r.ok = g.ok();
  if (!r.ok) {
    const GrowthViolation& v = g.violations.front();
    r.witness = json{{"property", "growth"},
                     {"bound", v.lower ? "lower" : "upper"},
                     {"alpha", f.growth().alpha},
                     {"beta", f.growth().beta},
                     {"x", to_json(v.x, f.dim())},
                     {"X", to_json(v.X)},
                     {"value", f(v.x, v.X)},
                     {"margin", v.margin},
                     {"violations", g.violations.size()}}
                    .dump();
  }
  return r;
}

PropertyResult verify_lipschitz(const MicroDensity& f, int samples, std::uint64_t seed) {
  if (!f.declared_convex()) return skipped("lipschitz-hencky", "density is not declared convex");
  const int n = f.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PropertyResult r;
  r.name = "lipschitz-hencky";
  r.samples = samples;
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const SymTensor P = gaussian_sym(n, rng, std::pow(10.0, 3.0 * u(rng) - 1.0)).dev();
    const double kappa = 1.0 + 9.0 * u(rng);
    const double M = 1.0 + 4.0 * u(rng);
    const double rho = (2.0 * u(rng) - 1.0) * std::sqrt(kappa * (P.norm() + M * M));
    const Point x = uniform_point(n, rng);
    const LipschitzCheck c = trace_lipschitz_check(f, P, rho, kappa, M, x);
    const double margin = (c.rhs - c.lhs) / (1.0 + c.rhs);
    r.worst_margin = std::min(r.worst_margin, margin);
    if (!c.ok && r.ok) {
      r.ok = false;
      r.witness = json{{"property", "lipschitz-hencky"}, {"x", to_json(x, n)}, {"P", to_json(P)}, {"rho", rho},
                       {"kappa", kappa}, {"M", M}, {"lhs", c.lhs}, {"rhs", c.rhs}}
                      .dump();
    }
  }
  return r;
}

PropertyResult verify_bkk(const MicroDensity& f, int samples, std::uint64_t seed) {
  if (!f.declared_convex()) return skipped("bkk", "density is not declared convex");
  const int n = f.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  PropertyResult r;
  r.name = "bkk";
  r.samples = samples;
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const Point x = uniform_point(n, rng);
    // f(x, sym A) is convex in the full matrix A whenever f(x, .) is convex
    const MatrixFunction fa = [&f, &x, n](const Eigen::MatrixXd& A) {
      SymTensor S(n);
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) S.at(a, b) = 0.5 * (A(a, b) + A(b, a));
      }
      return f(x, S);
    };
    Eigen::MatrixXd X0(n, n);
    const double scale = std::pow(10.0, 2.0 * u(rng) - 1.0);
    for (Eigen::Index k = 0; k < X0.size(); ++k) X0.data()[k] = scale * g(rng);
    const double radius = std::pow(10.0, 2.0 * u(rng) - 2.0);
    const BkkResult b = bkk_check(fa, X0, radius, 16, seed + static_cast<std::uint64_t>(i));
    r.worst_margin = std::min(r.worst_margin, (b.bound - b.lip_est) / (1.0 + b.bound));
    if (!b.ok && r.ok) {
      r.ok = false;
      r.witness = json{{"property", "bkk"}, {"x", to_json(x, n)},
                       {"X0", std::vector<double>(X0.data(), X0.data() + X0.size())},
                       {"r", radius}, {"lip_est", b.lip_est}, {"bound", b.bound}}
                      .dump();
    }
  }
  return r;
}

PropertyResult verify_rank_one(const MicroDensity& f, int samples, std::uint64_t seed) {
  if (!f.declared_convex()) return skipped("rank-one-convexity", "density is not declared convex");
  const auto violations = rank_one_scan(f, samples, seed);
  PropertyResult r;
  r.name = "rank-one-convexity";
  r.samples = samples;
  r.ok = violations.empty();
  r.worst_margin = 0.0;
  for (const auto& v : violations) r.worst_margin = std::min(r.worst_margin, -v.margin);
  if (!r.ok) {
    const auto& v = violations.front();
    const auto n = static_cast<std::size_t>(f.dim());
    r.witness = json{{"property", "rank-one-convexity"}, {"x", to_json(v.x, f.dim())}, {"X", to_json(v.X)},
                     {"a", std::vector<double>(v.a.begin(), v.a.begin() + static_cast<std::ptrdiff_t>(n))},
                     {"b", std::vector<double>(v.b.begin(), v.b.begin() + static_cast<std::ptrdiff_t>(n))},
                     {"t", v.t}, {"margin", v.margin}, {"violations", violations.size()}}
                    .dump();
  }
  return r;
}

FenchelSummary verify_fenchel(const MicroDensity& f, int points, const CellSpec& spec,
                              const SolverConfig& solver, int jobs) {
  FenchelSummary out;
  out.inequality.name = "fenchel-inequality";
  out.gap.name = "fenchel-gap";
  if (!f.declared_convex()) {
    out.inequality = skipped("fenchel-inequality", "dual cell solver needs a convex density");
    out.gap = skipped("fenchel-gap", "dual cell solver needs a convex density");
    return out;
  }
  const auto Xs = strain_panel(f.dim(), points, 0);
  struct Primal {
    double value;
    SymTensor Y;
  };
  const auto primal = run_jobs<Primal>(Xs.size(), jobs, [&](std::size_t i) {
    const HomResult r = minimize_cell(f, Xs[i], spec, solver);
    return Primal{r.value, mean_stress(f, Xs[i], r.minimizer)};
  });
  const auto dual = run_jobs<DualResult>(primal.size(), jobs, [&](std::size_t j) {
    return dual_cell(f, primal[j].Y, spec, solver);
  });

  const auto pairs = static_cast<int>(Xs.size() * dual.size());
  out.inequality.samples = pairs;
  out.gap.samples = static_cast<int>(Xs.size());
  out.inequality.worst_margin = std::numeric_limits<double>::infinity();
  out.gap.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dual.size(); ++j) {
      if (!dual[j].feasible) continue;  // (c_hom)* = +inf: the inequality holds trivially
      const double pairing = Xs[i].dot(dual[j].Y);
      const double excess = primal[i].value + dual[j].value - pairing;
      const double margin = excess / (1.0 + std::abs(pairing));
      out.inequality.worst_margin = std::min(out.inequality.worst_margin, margin);
      if (margin < -1e-6 && out.inequality.ok) {
        out.inequality.ok = false;
        out.inequality.witness = json{{"property", "fenchel-inequality"}, {"X", to_json(Xs[i])},
                                      {"Y", to_json(dual[j].Y)}, {"f_hom", primal[i].value},
                                      {"dual", dual[j].value}, {"pairing", pairing}}
                                     .dump();
      }
      best = std::min(best, excess);
    }
    const double relative = best / (1.0 + std::abs(primal[i].value));
    out.gap.worst_margin = std::min(out.gap.worst_margin, 0.03 - relative);
    if (!(relative <= 0.03) && out.gap.ok) {
      out.gap.ok = false;
      out.gap.witness = json{{"property", "fenchel-gap"}, {"X", to_json(Xs[i])}, {"f_hom", primal[i].value},
                             {"best_gap", best}, {"relative", relative}}
                            .dump();
    }
  }
  return out;
}

std::vector<PropertyResult> verify_kernels() {
  std::vector<PropertyResult> out;
  out.push_back(contract("kernel:J_r(n=2,r=1)=pi/4", 1, std::abs(ball_second_moment(2, 1.0) - kPi / 4.0), 1e-12));

  double residual = 0.0;
  int count = 0;
  for (int dim : {2, 3}) {
    const CellSpec spec{1, dim == 2 ? 16 : 8, Boundary::dirichlet};
    const CellScalar g = sample_cells(dim, spec, dim == 2 ? osc2 : osc3);
    for (double q : {1.5, 2.0, 4.0}) {
      residual = std::max(residual, bogovskii(g, dim, spec, q).residual);
      ++count;
    }
  }
  out.push_back(contract("kernel:bogovskii-residual", count, residual, 1e-10));

  double drift = 0.0;
  count = 0;
  for (double q : {1.5, 2.0, 3.0}) {
    const CellSpec unit{1, 16, Boundary::dirichlet};
    const CellSpec wide{2, 8, Boundary::dirichlet};
    const CellSpec fine{1, 32, Boundary::dirichlet};
    const CellScalar g = sample_cells(2, unit, sinsin);
    const double base = bogovskii(g, 2, unit, q).ratio;
    drift = std::max(drift, std::abs(bogovskii(g, 2, wide, q).ratio / base - 1.0));
    drift = std::max(drift, std::abs(bogovskii(sample_cells(2, fine, sinsin), 2, fine, q).ratio / base - 1.0));
    count += 2;
  }
  out.push_back(contract("kernel:bogovskii-ratio-stability", count, drift, 0.10));

  double reconstruction = 0.0, orthogonality = 0.0;
  count = 0;
  for (int dim : {2, 3}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const CellSpec spec{1, dim == 2 ? 24 : 8, Boundary::dirichlet};
      const GridField u = make_test_field({"random", seed}, dim, spec);
      const HelmholtzResult r = helmholtz_decompose(u);
      const GridField grad = nodal_gradient(r.phi, dim, spec);
      std::vector<double> diff(u.values().size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = u.values()[i] - r.v.values()[i] - grad.values()[i];
      reconstruction = std::max(reconstruction, max_abs(diff));
      orthogonality = std::max(orthogonality, r.orthogonality);
      ++count;
    }
  }
  out.push_back(contract("kernel:helmholtz-reconstruction", count, reconstruction, 1e-12));
  out.push_back(contract("kernel:helmholtz-orthogonality", count, orthogonality, 1e-8));

  // error measured in units of h: 10 h allowed
  const double rigid = std::max(rigid_error(2, 32) * 32.0, rigid_error(3, 16) * 16.0);
  out.push_back(contract("kernel:rigid-project-fixes-rigid(h units)", 2, rigid, 10.0));
  return out;
}

bool VerifyReport::ok() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.skipped || p.ok; });
}

std::string VerifyReport::render() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-42s %8s %14s  %s\n", "property", "samples", "worst_margin", "status");
  os << line;
  for (const auto& p : properties) {
    const char* status = p.skipped ? "SKIP" : p.ok ? "PASS" : "FAIL";
    std::snprintf(line, sizeof line, "%-42s %8d %14.6g  %s\n", p.name.c_str(), p.samples, p.worst_margin, status);
    os << line;
  }
  for (const auto& p : properties) {
    if (!p.skipped && !p.ok) os << "witness " << p.name << ": " << p.witness << "\n";
  }
  os << (ok() ? "verify: all properties hold\n" : "verify: FAILED\n");
  return os.str();
}

VerifyReport cmd_verify(const RunConfig& cfg, const CommandOptions& opt) {
  const MicroDensity f = cfg.make_density();
  const int samples = cfg.verify.samples;
  const std::uint64_t seed = cfg.solver.seed;
  using Group = std::vector<PropertyResult>;
  const std::vector<std::function<Group()>> tasks{
      [&] { return Group{verify_growth(f, samples, seed)}; },
      [&] { return Group{verify_lipschitz(f, samples, seed + 1)}; },
      [&] { return Group{verify_bkk(f, samples, seed + 2)}; },
      [&] { return Group{verify_rank_one(f, samples, seed + 3)}; },
      [&] {
        const FenchelSummary s = verify_fenchel(f, cfg.verify.dual_points, cfg.cell_spec(), cfg.solver, 1);
        return Group{s.inequality, s.gap};
      },
      [] { return verify_kernels(); },
  };
  const auto groups = run_jobs<Group>(tasks.size(), opt.jobs, [&](std::size_t i) { return tasks[i](); });
  VerifyReport report;
  for (const auto& g : groups) report.properties.insert(report.properties.end(), g.begin(), g.end());
  return report;
}

}  // namespace hencky
