#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hencky/sym_tensor.hpp"

namespace hencky {

/// Energy value at (x, X). The third argument is the smoothing radius applied to
/// non-differentiable norms; zero requests the exact density.
using Evaluator = std::function<double(const Point&, const SymTensor&, double)>;
using GradientFn = std::function<SymTensor(const Point&, const SymTensor&, double)>;
/// argmin_X tau f(x, X) + |X - W|^2 / 2 for tau > 0.
using ProxFn = std::function<SymTensor(const Point&, const SymTensor&, double)>;

enum class GradientMode { analytic, finite_difference };

/// Constants of alpha (|X_dev| + (tr X)^2) <= f <= beta (|X_dev| + (tr X)^2 + 1).
struct Growth {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Two-phase layering in x_1: phase 1 on frac(x_1) < theta, phase 2 elsewhere.
struct LaminateLayout {
  double theta = 0.5;
};

struct DensityTraits {
  bool convex = false;
  bool x_independent = false;
  std::optional<LaminateLayout> laminate;
};

/**
 * A periodic Caratheodory energy density with Hencky growth.
 *
 * The point handed to the evaluator is always reduced to [0,1)^n, so
 * periodicity holds for every evaluator. Instances are immutable and safe
 * for concurrent evaluation.
 */
class MicroDensity {
 public:
  MicroDensity(int dim, std::string name, Evaluator eval, Growth growth, DensityTraits traits = {},
               GradientFn gradient = {});

  double operator()(const Point& x, const SymTensor& X) const { return smoothed(x, X, 0.0); }
  double smoothed(const Point& x, const SymTensor& X, double eps) const;

  /// Derivative with respect to X in the Frobenius pairing. Falls back to
  /// central differences when no analytic gradient exists or when requested.
  SymTensor gradient(const Point& x, const SymTensor& X, double eps,
                     GradientMode mode = GradientMode::analytic) const;

  /// Proximal point of f(x, .); solved numerically unless a closed form was attached.
  SymTensor prox(const Point& x, const SymTensor& W, double tau) const;

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  const Growth& growth() const { return growth_; }
  const DensityTraits& traits() const { return traits_; }
  bool declared_convex() const { return traits_.convex; }
  bool x_independent() const { return traits_.x_independent; }
  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }
  bool has_closed_form_prox() const { return static_cast<bool>(prox_); }

  MicroDensity with_growth(Growth growth) const;
  MicroDensity with_name(std::string name) const;
  MicroDensity with_prox(ProxFn prox) const;

 private:
  int dim_;
  std::string name_;
  Evaluator eval_;
  GradientFn gradient_;
  ProxFn prox_;
  Growth growth_;
  DensityTraits traits_;
};

/// Reduces each coordinate of x modulo 1 into [0, 1).
Point reduce_periodic(const Point& x, int dim);

/// Names accepted by make_builtin.
const std::vector<std::string>& builtin_names();

/**
 * Catalog densities:
 *   isotropic-convex   [a]                      a (|X_dev| + (tr X)^2)
 *   smooth-area-type   []                       sqrt(1 + |X_dev|^2) + (tr X)^2
 *   two-well-dev       [d]                      min(|X_dev - A|, |X_dev + A|) + (tr X)^2 + d
 *   laminate-two-phase [a1, a2, theta(, b1, b2)] b(x_1) |X_dev| + a(x_1) (tr X)^2
 * with A = d diag(1, -1, 0) / sqrt(2), so |A| = d.
 */
MicroDensity make_builtin(const std::string& name, const std::vector<double>& params, int dim = 2);

/// The fixed traceless well of two-well-dev with norm d.
SymTensor two_well_matrix(double d, int dim);

/// f^(delta) = f + delta |X_dev|^2.
MicroDensity harden(const MicroDensity& f, double delta);

struct GrowthViolation {
  Point x{};
  SymTensor X;
  bool lower = true;  ///< false: the upper bound failed
  double margin = 0.0;  ///< negative amount by which the bound failed
};

struct GrowthReport {
  int samples = 0;
  std::vector<GrowthViolation> violations;
  double worst_lower_margin = std::numeric_limits<double>::infinity();
  double worst_upper_margin = std::numeric_limits<double>::infinity();
  bool ok() const { return violations.empty(); }
};

/// Samples both growth inequalities at pseudo-random (x, X) with |X| up to 1e3.
GrowthReport check_growth(const MicroDensity& f, int samples, std::uint64_t seed);

/// |f(x,X) - c(x,X)| <= eta (|X_dev| + (tr X)^2) + beta_eta with c convex in X.
struct AsymptoticConvexityCertificate {
  double eta = 0.0;
  double beta_eta = 0.0;
  std::shared_ptr<const MicroDensity> comparison;
};

/// Registered certificate for a catalog density (comparison built for the same parameters).
AsymptoticConvexityCertificate registered_certificate(const std::string& name,
                                                      const std::vector<double>& params,
                                                      int dim = 2, double eta = 1e-3);

struct CertificateReport {
  int samples = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  bool ok() const { return violations == 0; }
};

CertificateReport check_certificate(const MicroDensity& f,
                                    const AsymptoticConvexityCertificate& cert, int samples,
                                    std::uint64_t seed);

struct TruncationSpec {
  int M = 1;
  int K = 1;
  double beta = 1.0;
  void validate() const;
};

/// Cutoff equal to 1 on C_{M,K} and 0 outside C_{M+1,K}.
double truncation_cutoff(const SymTensor& X, const TruncationSpec& spec);

/// zeta_{M,K}(X) f(x, X).
MicroDensity truncate_hat(const MicroDensity& f, const TruncationSpec& spec);

/// f(x, X) + beta K^2 max{(tr X)^2 - M^2 - |X_dev| / K, 0}.
MicroDensity truncate_check(const MicroDensity& f, const TruncationSpec& spec);

struct AsymptoticEstimate {
  double value = 0.0;  ///< +inf when the ray grows superlinearly
  bool infinite = false;
  double extrapolated = 0.0;
  double last = 0.0;
  double tail_slope = 0.0;  ///< d log(f(tX)/t) / d log t over the last two samples
  std::vector<double> ratios;
};

/// Limit estimate for a sampled ray r_i = g(t_i X) / t_i (shared by the
/// pointwise and homogenized asymptotic functions).
AsymptoticEstimate extrapolate_ray(std::span<const double> t, std::span<const double> ratios);

/// g^#(X) = limsup_{t -> inf} f(x, tX) / t along an increasing t schedule.
AsymptoticEstimate asymptotic_fn(const MicroDensity& f, const Point& x, const SymTensor& X,
                                 std::span<const double> t_schedule);

/// Geometric schedule first, first*ratio, ... up to and including last.
std::vector<double> geometric_schedule(double first, double last, double ratio = 10.0);

struct LipschitzCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

/// Compares |f(P + rho/n I) - f(P)| against 14 beta n sqrt(kappa) (sqrt|P| + M) |rho|.
LipschitzCheck trace_lipschitz_check(const MicroDensity& f, const SymTensor& P, double rho,
                                     double kappa, double M, const Point& x = {});

}  // namespace hencky
