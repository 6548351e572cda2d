#include "hencky/density.hpp"

#include "hencky/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace hencky {

namespace {

double tol_rel(double v) { return 1e-12 * (1.0 + std::abs(v)); }

}  // namespace

Point reduce_periodic(const Point& x, int dim) {
  Point r{};
  for (int i = 0; i < dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    double v = x[k] - std::floor(x[k]);
    if (v >= 1.0) v = 0.0;  // floor rounding for tiny negative inputs
    r[k] = v;
  }
  return r;
}

MicroDensity::MicroDensity(int dim, std::string name, Evaluator eval, Growth growth,
                           DensityTraits traits, GradientFn gradient)
    : dim_(dim),
      name_(std::move(name)),
      eval_(std::move(eval)),
      gradient_(std::move(gradient)),
      growth_(growth),
      traits_(traits) {
  require_dim(dim);
  if (!eval_) throw std::invalid_argument("density '" + name_ + "' has no evaluator");
  if (!(growth_.alpha > 0.0)) throw std::invalid_argument("growth constant alpha must be > 0");
  if (!(growth_.beta >= growth_.alpha)) {
    throw std::invalid_argument("growth constant beta must be >= alpha");
  }
  if (traits_.laminate && !(traits_.laminate->theta > 0.0 && traits_.laminate->theta < 1.0)) {
    throw std::invalid_argument("laminate volume fraction must lie in (0, 1)");
  }
}

double MicroDensity::smoothed(const Point& x, const SymTensor& X, double eps) const {
  if (X.dim() != dim_) throw std::invalid_argument("strain dimension does not match density");
  return eval_(reduce_periodic(x, dim_), X, eps);
}

SymTensor MicroDensity::gradient(const Point& x, const SymTensor& X, double eps,
                                 GradientMode mode) const {
  if (X.dim() != dim_) throw std::invalid_argument("strain dimension does not match density");
  const Point xr = reduce_periodic(x, dim_);
  if (mode == GradientMode::analytic && gradient_) return gradient_(xr, X, eps);

  const auto c = X.coords();
  const std::size_t d = X.size();
  const double step = 1e-6 * (1.0 + X.norm());
  std::array<double, kMaxSymSize> g{};
  for (std::size_t b = 0; b < d; ++b) {
    auto cp = c;
    auto cm = c;
    cp[b] += step;
    cm[b] -= step;
    const double fp = eval_(xr, SymTensor::from_coords(dim_, cp), eps);
    const double fm = eval_(xr, SymTensor::from_coords(dim_, cm), eps);
    g[b] = (fp - fm) / (2.0 * step);
  }
  return SymTensor::from_coords(dim_, g);
}

SymTensor MicroDensity::prox(const Point& x, const SymTensor& W, double tau) const {
  if (W.dim() != dim_) throw std::invalid_argument("strain dimension does not match density");
  if (!(tau > 0.0)) throw std::invalid_argument("prox step must be > 0");
  const Point xr = reduce_periodic(x, dim_);
  if (prox_) return prox_(xr, W, tau);

  const std::size_t d = W.size();
  const auto w = W.coords();
  std::vector<double> c(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
  const double eps = 1e-12;
  Objective obj = [&](std::span<const double> v, std::span<double> g) {
    const SymTensor X = SymTensor::from_coords(dim_, v);
    double r = 0.0;
    for (std::size_t i = 0; i < d; ++i) r += 0.5 * (v[i] - w[i]) * (v[i] - w[i]);
    if (!g.empty()) {
      const auto gc = gradient(xr, X, eps).coords();
      for (std::size_t i = 0; i < d; ++i) g[i] = tau * gc[i] + (v[i] - w[i]);
    }
    return tau * eval_(xr, X, eps) + r;
  };
  LbfgsOptions opts;
  opts.max_iters = 500;
  opts.gradient_tolerance = 1e-13;
  minimize_lbfgs(obj, c, opts);
  return SymTensor::from_coords(dim_, c);
}

MicroDensity MicroDensity::with_prox(ProxFn prox) const {
  MicroDensity copy = *this;
  copy.prox_ = std::move(prox);
  return copy;
}

MicroDensity MicroDensity::with_growth(Growth growth) const {
  MicroDensity copy = *this;
  if (!(growth.alpha > 0.0) || !(growth.beta >= growth.alpha)) {
    throw std::invalid_argument("growth constants must satisfy 0 < alpha <= beta");
  }
  copy.growth_ = growth;
  return copy;
}

MicroDensity MicroDensity::with_name(std::string name) const {
  MicroDensity copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"isotropic-convex", "two-well-dev",
                                                 "laminate-two-phase", "smooth-area-type"};
  return names;
}

SymTensor two_well_matrix(double d, int dim) {
  SymTensor a(dim);
  a.at(0, 0) = d / std::numbers::sqrt2;
  a.at(1, 1) = -d / std::numbers::sqrt2;
  return a;
}

namespace {

void require_params(const std::string& name, const std::vector<double>& params,
                    std::initializer_list<std::size_t> allowed) {
  if (std::find(allowed.begin(), allowed.end(), params.size()) == allowed.end()) {
    throw std::invalid_argument("density '" + name + "': unexpected number of parameters (" +
                                std::to_string(params.size()) + ")");
  }
}

void require_positive(const std::string& name, const char* what, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument("density '" + name + "': parameter " + what +
                                " must be positive (alpha > 0)");
  }
}

// prox of b |X_dev| + a (tr X)^2: shrink the deviator, scale the trace.
SymTensor hencky_prox(const SymTensor& W, double tau, double b, double a) {
  const int n = W.dim();
  const SymTensor P = W.dev();
  const double pn = P.norm();
  const double shrink = pn > tau * b ? 1.0 - tau * b / pn : 0.0;
  const double tr = W.trace() / (1.0 + 2.0 * tau * a * n);
  return shrink * P + (tr / n) * SymTensor::identity(n);
}

MicroDensity make_isotropic(const std::vector<double>& params, int dim) {
  const std::string name = "isotropic-convex";
  require_params(name, params, {0, 1});
  const double a = params.empty() ? 1.0 : params[0];
  require_positive(name, "a", a);
  auto eval = [a](const Point&, const SymTensor& X, double eps) {
    const double t = X.trace();
    return a * (smoothed_norm(X.dev(), eps) + t * t);
  };
  auto grad = [a](const Point&, const SymTensor& X, double eps) {
    const int n = X.dim();
    return a * (smoothed_norm_gradient(X.dev(), eps) + (2.0 * X.trace()) * SymTensor::identity(n));
  };
  MicroDensity f{dim, name, eval, {a, a}, {.convex = true, .x_independent = true, .laminate = std::nullopt}, grad};
  return f.with_prox([a](const Point&, const SymTensor& W, double tau) { return hencky_prox(W, tau, a, a); });
}

MicroDensity make_smooth_area(const std::vector<double>& params, int dim) {
  const std::string name = "smooth-area-type";
  require_params(name, params, {0});
  auto eval = [](const Point&, const SymTensor& X, double) {
    const double t = X.trace();
    return area_integrand(X.dev()) + t * t;
  };
  auto grad = [](const Point&, const SymTensor& X, double) {
    const SymTensor P = X.dev();
    return P / area_integrand(P) + (2.0 * X.trace()) * SymTensor::identity(X.dim());
  };
  return {dim, name, eval, {1.0, 1.0}, {.convex = true, .x_independent = true, .laminate = std::nullopt}, grad};
}

MicroDensity make_two_well(const std::vector<double>& params, int dim) {
  const std::string name = "two-well-dev";
  require_params(name, params, {1});
  const double d = params[0];
  require_positive(name, "d", d);
  const SymTensor A = two_well_matrix(d, dim);
  auto eval = [A, d](const Point&, const SymTensor& X, double eps) {
    const SymTensor P = X.dev();
    const double t = X.trace();
    return std::min(smoothed_norm(P - A, eps), smoothed_norm(P + A, eps)) + t * t + d;
  };
  auto grad = [A](const Point&, const SymTensor& X, double eps) {
    const SymTensor P = X.dev();
    const double minus = smoothed_norm(P - A, eps);
    const double plus = smoothed_norm(P + A, eps);
    const SymTensor branch =
        minus <= plus ? smoothed_norm_gradient(P - A, eps) : smoothed_norm_gradient(P + A, eps);
    return branch + (2.0 * X.trace()) * SymTensor::identity(X.dim());
  };
  // min(|P-A|, |P+A|) lies in [|P| - d, |P| + d]
  return {dim, name, eval, {1.0, std::max(1.0, 2.0 * d)}, {.convex = false, .x_independent = true, .laminate = std::nullopt},
          grad};
}

MicroDensity make_laminate(const std::vector<double>& params, int dim) {
  const std::string name = "laminate-two-phase";
  require_params(name, params, {3, 5});
  const double a1 = params[0];
  const double a2 = params[1];
  const double theta = params[2];
  const double b1 = params.size() == 5 ? params[3] : 1.0;
  const double b2 = params.size() == 5 ? params[4] : 1.0;
  require_positive(name, "a1", a1);
  require_positive(name, "a2", a2);
  require_positive(name, "b1", b1);
  require_positive(name, "b2", b2);
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("density '" + name + "': volume fraction must lie in (0, 1)");
  }
  auto eval = [=](const Point& x, const SymTensor& X, double eps) {
    const bool first = x[0] < theta;
    const double t = X.trace();
    return (first ? b1 : b2) * smoothed_norm(X.dev(), eps) + (first ? a1 : a2) * t * t;
  };
  auto grad = [=](const Point& x, const SymTensor& X, double eps) {
    const bool first = x[0] < theta;
    return (first ? b1 : b2) * smoothed_norm_gradient(X.dev(), eps) +
           (2.0 * (first ? a1 : a2) * X.trace()) * SymTensor::identity(X.dim());
  };
  const double alpha = std::min({a1, a2, b1, b2});
  const double beta = std::max({a1, a2, b1, b2});
  MicroDensity f{dim,
                 name,
                 eval,
                 {alpha, beta},
                 {.convex = true, .x_independent = false, .laminate = LaminateLayout{theta}},
                 grad};
  return f.with_prox([=](const Point& x, const SymTensor& W, double tau) {
    const bool first = x[0] < theta;
    return hencky_prox(W, tau, first ? b1 : b2, first ? a1 : a2);
  });
}

}  // namespace

MicroDensity make_builtin(const std::string& name, const std::vector<double>& params, int dim) {
  require_dim(dim);
  if (name == "isotropic-convex") return make_isotropic(params, dim);
  if (name == "smooth-area-type") return make_smooth_area(params, dim);
  if (name == "two-well-dev") return make_two_well(params, dim);
  if (name == "laminate-two-phase") return make_laminate(params, dim);
  throw std::invalid_argument("unknown density '" + name + "'");
}

MicroDensity harden(const MicroDensity& f, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("hardening parameter must be >= 0");
  }
  if (delta == 0.0) return f;
  auto eval = [f, delta](const Point& x, const SymTensor& X, double eps) {
    return f.smoothed(x, X, eps) + delta * X.dev().norm_squared();
  };
  GradientFn grad;
  if (f.has_analytic_gradient()) {
    grad = [f, delta](const Point& x, const SymTensor& X, double eps) {
      return f.gradient(x, X, eps) + (2.0 * delta) * X.dev();
    };
  }
  return {f.dim(), f.name() + "+hardening", eval, f.growth(), f.traits(), grad};
}

namespace {

SymTensor random_direction(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, kMaxSymSize> c{};
  const std::size_t d = sym_size(dim);
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    c[i] = normal(rng);
    s += c[i] * c[i];
  }
  s = std::sqrt(s);
  for (std::size_t i = 0; i < d; ++i) c[i] /= s;
  return SymTensor::from_coords(dim, c);
}

/// Sample i of the growth/certificate panels: every fifth sample lies on a
/// pure-trace or pure-deviatoric ray, the rest are generic; |X| spans [1e-3, 1e3].
SymTensor sample_strain(int dim, int i, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double magnitude = std::pow(10.0, -3.0 + 6.0 * unit(rng));
  SymTensor dir = random_direction(dim, rng);
  if (i % 5 == 1) dir = SymTensor::identity(dim) / std::sqrt(static_cast<double>(dim));
  if (i % 5 == 2) {
    const SymTensor p = dir.dev();
    if (p.norm() > 0.0) dir = p / p.norm();
  }
  if (i == 0) return SymTensor::zero(dim);
  return (unit(rng) < 0.5 ? 1.0 : -1.0) * magnitude * dir;
}

Point sample_point(int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Point x{};
  for (int i = 0; i < dim; ++i) x[static_cast<std::size_t>(i)] = unit(rng);
  return x;
}

}  // namespace

GrowthReport check_growth(const MicroDensity& f, int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("check_growth needs at least one sample");
  GrowthReport report;
  report.samples = samples;
  std::mt19937_64 rng(seed);
  const auto [alpha, beta] = f.growth();
  for (int i = 0; i < samples; ++i) {
    const Point x = sample_point(f.dim(), rng);
    const SymTensor X = sample_strain(f.dim(), i, rng);
    const auto [dev_norm, trace] = hencky_pair(X);
    const double core = dev_norm + trace * trace;
    const double value = f(x, X);
    const double lower_margin = value - alpha * core;
    const double upper_margin = beta * (core + 1.0) - value;
    report.worst_lower_margin = std::min(report.worst_lower_margin, lower_margin);
    report.worst_upper_margin = std::min(report.worst_upper_margin, upper_margin);
    if (lower_margin < -tol_rel(value)) report.violations.push_back({x, X, true, lower_margin});
    if (upper_margin < -tol_rel(value)) report.violations.push_back({x, X, false, upper_margin});
  }
  return report;
}

AsymptoticConvexityCertificate registered_certificate(const std::string& name,
                                                      const std::vector<double>& params, int dim,
                                                      double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("certificate eta must be > 0");
  AsymptoticConvexityCertificate cert;
  cert.eta = eta;
  if (name == "isotropic-convex" || name == "laminate-two-phase") {
    cert.beta_eta = eta;
    cert.comparison = std::make_shared<MicroDensity>(make_builtin(name, params, dim));
  } else if (name == "smooth-area-type") {
    // 0 <= sqrt(1 + s^2) - s <= 1
    cert.beta_eta = 1.0;
    cert.comparison = std::make_shared<MicroDensity>(make_builtin("isotropic-convex", {1.0}, dim));
  } else if (name == "two-well-dev") {
    // | min(|P - A|, |P + A|) - |P| | <= |A| = d
    const double d = params.at(0);
    cert.beta_eta = d;
    const auto base = make_builtin("isotropic-convex", {1.0}, dim);
    auto eval = [base, d](const Point& x, const SymTensor& X, double eps) {
      return base.smoothed(x, X, eps) + d;
    };
    cert.comparison = std::make_shared<MicroDensity>(
        dim, "two-well-dev-comparison", eval, Growth{1.0, 1.0 + d},
        DensityTraits{.convex = true, .x_independent = true, .laminate = std::nullopt});
  } else {
    throw std::invalid_argument("no registered certificate for density '" + name + "'");
  }
  return cert;
}

CertificateReport check_certificate(const MicroDensity& f,
                                    const AsymptoticConvexityCertificate& cert, int samples,
                                    std::uint64_t seed) {
  if (!cert.comparison) throw std::invalid_argument("certificate has no comparison density");
  if (!cert.comparison->declared_convex()) {
    throw std::invalid_argument("certificate comparison density is not declared convex");
  }
  CertificateReport report;
  report.samples = samples;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) {
    const Point x = sample_point(f.dim(), rng);
    const SymTensor X = sample_strain(f.dim(), i, rng);
    const auto [dev_norm, trace] = hencky_pair(X);
    const double fv = f(x, X);
    const double margin =
        cert.eta * (dev_norm + trace * trace) + cert.beta_eta - std::abs(fv - (*cert.comparison)(x, X));
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < -tol_rel(fv)) ++report.violations;
  }
  return report;
}

void TruncationSpec::validate() const {
  if (M < 1 || K < 1) throw std::invalid_argument("truncation requires M >= 1 and K >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("truncation beta must be > 0");
}

double truncation_cutoff(const SymTensor& X, const TruncationSpec& spec) {
  const auto [dev_norm, trace] = hencky_pair(X);
  const double level = trace * trace - dev_norm / spec.K;
  const double outer = (spec.M + 1.0) * (spec.M + 1.0);
  const double inner = static_cast<double>(spec.M) * spec.M;
  return std::clamp((outer - level) / (outer - inner), 0.0, 1.0);
}

MicroDensity truncate_hat(const MicroDensity& f, const TruncationSpec& spec) {
  spec.validate();
  auto eval = [f, spec](const Point& x, const SymTensor& X, double eps) {
    const double zeta = truncation_cutoff(X, spec);
    return zeta == 0.0 ? 0.0 : zeta * f.smoothed(x, X, eps);
  };
  DensityTraits traits = f.traits();
  traits.convex = false;
  return {f.dim(), f.name() + "-hat", eval, f.growth(), traits};
}

MicroDensity truncate_check(const MicroDensity& f, const TruncationSpec& spec) {
  spec.validate();
  auto eval = [f, spec](const Point& x, const SymTensor& X, double eps) {
    const auto [dev_norm, trace] = hencky_pair(X);
    const double K = spec.K;
    const double excess = trace * trace - static_cast<double>(spec.M) * spec.M - dev_norm / K;
    return f.smoothed(x, X, eps) + spec.beta * K * K * std::max(excess, 0.0);
  };
  DensityTraits traits = f.traits();
  traits.convex = false;
  return {f.dim(), f.name() + "-check", eval, f.growth(), traits};
}

AsymptoticEstimate extrapolate_ray(std::span<const double> t, std::span<const double> ratios) {
  if (t.size() != ratios.size() || t.size() < 3) {
    throw std::invalid_argument("ray extrapolation needs at least three samples");
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1]) || !(t[0] > 0.0)) {
      throw std::invalid_argument("t schedule must be positive and strictly increasing");
    }
  }
  AsymptoticEstimate est;
  est.ratios.assign(ratios.begin(), ratios.end());
  const std::size_t n = t.size();
  const double r1 = ratios[n - 3];
  const double r2 = ratios[n - 2];
  const double r3 = ratios[n - 1];
  est.last = r3;

  // growth factor per decade between consecutive samples
  auto per_decade = [&](std::size_t i) {
    const double decades = std::log10(t[i + 1] / t[i]);
    if (!(ratios[i] > 0.0) || !(ratios[i + 1] > 0.0)) return 0.0;
    return std::pow(ratios[i + 1] / ratios[i], 1.0 / decades);
  };
  if (per_decade(n - 3) >= 2.0 && per_decade(n - 2) >= 2.0) {
    est.infinite = true;
    est.value = std::numeric_limits<double>::infinity();
    est.extrapolated = est.value;
  } else {
    const double d1 = r2 - r1;
    const double d2 = r3 - r2;
    double limit = r3;
    if (std::abs(d2) > 1e-15 * std::abs(r3) && d1 * d2 > 0.0 && std::abs(d2) < std::abs(d1)) {
      const double q = d2 / d1;
      limit = r3 + d2 * q / (1.0 - q);
    }
    est.extrapolated = limit;
    est.value = std::max(limit, r3);
  }
  if (r2 > 0.0 && r3 > 0.0) {
    est.tail_slope = std::log(r3 / r2) / std::log(t[n - 1] / t[n - 2]);
  }
  return est;
}

AsymptoticEstimate asymptotic_fn(const MicroDensity& f, const Point& x, const SymTensor& X,
                                 std::span<const double> t_schedule) {
  std::vector<double> ratios;
  ratios.reserve(t_schedule.size());
  for (double t : t_schedule) ratios.push_back(f(x, t * X) / t);
  return extrapolate_ray(t_schedule, ratios);
}

std::vector<double> geometric_schedule(double first, double last, double ratio) {
  if (!(first > 0.0) || !(last >= first) || !(ratio > 1.0)) {
    throw std::invalid_argument("invalid geometric schedule");
  }
  std::vector<double> out;
  for (double t = first; t <= last * (1.0 + 1e-12); t *= ratio) out.push_back(t);
  return out;
}

LipschitzCheck trace_lipschitz_check(const MicroDensity& f, const SymTensor& P, double rho,
                                     double kappa, double M, const Point& x) {
  if (!f.declared_convex()) {
    throw std::invalid_argument("trace Lipschitz check requires a rank-one convex density");
  }
  if (std::abs(P.trace()) > 1e-12 * (1.0 + P.norm())) {
    throw std::invalid_argument("trace Lipschitz check requires a traceless P");
  }
  if (!(kappa >= 1.0) || !(M >= 1.0)) throw std::invalid_argument("kappa and M must be >= 1");
  const double pn = P.norm();
  if (rho * rho > kappa * (pn + M * M)) {
    throw std::invalid_argument("rho^2 exceeds kappa (|P| + M^2)");
  }
  const int n = f.dim();
  const SymTensor shifted = P + (rho / n) * SymTensor::identity(n);
  LipschitzCheck out;
  out.lhs = std::abs(f(x, shifted) - f(x, P));
  out.rhs = 14.0 * f.growth().beta * n * std::sqrt(kappa) * (std::sqrt(pn) + M) * std::abs(rho);
  out.ok = out.lhs <= out.rhs + tol_rel(out.rhs);
  return out;
}

}  // namespace hencky
