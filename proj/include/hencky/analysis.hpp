#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hencky/cell.hpp"

namespace hencky {

/// Cell resolution, boundary and the k values minimized over by homogenize.
struct HomSetup {
  CellSpec base;
  std::vector<int> k_list{1};
};

struct SweepTable {
  SymTensor X;
  std::vector<double> deltas;
  std::vector<double> values;
  bool monotone_ok = false;
  double limit_gap = 0.0;  ///< value at the smallest delta > 0 minus the value at 0
  double relative_gap() const;
};

/// Geometric delta grid {first, first/10, ..., last, 0}.
std::vector<double> default_deltas(double first = 1.0, double last = 1e-4);

/**
 * homogenize(harden(f, delta), X) for descending deltas ending at 0. Each k
 * warm-starts from the minimizer of the previous delta, so the sweep sees the
 * monotone structure f^(delta) >= f^(delta') for delta >= delta'.
 */
SweepTable delta_sweep(const MicroDensity& f, const SymTensor& X, std::span<const double> deltas,
                       const HomSetup& setup, const SolverConfig& cfg);

struct RecessionResult {
  SymTensor P;
  std::vector<double> t;
  std::vector<double> ratios;  ///< homogenize(f, tP) / t
  AsymptoticEstimate estimate;
};

/// Asymptotic function of the homogenized density along a traceless direction.
RecessionResult recession_of_hom(const MicroDensity& f, const SymTensor& P,
                                 std::span<const double> t_schedule, const HomSetup& setup,
                                 const SolverConfig& cfg);

struct EnvelopeWindow {
  int k = 0;
  double lower = 0.0;  ///< inf of f(tP)/t over the sampled window
  double upper = 0.0;  ///< sup of f(tP)/t over the sampled window
};

struct EnvelopeResult {
  std::vector<EnvelopeWindow> windows;
  /// Window bounds extrapolated to k -> infinity by a polynomial in 1/k through
  /// the three finest windows (the window error is linear in 1/k at leading order).
  double lower = 0.0;
  double upper = 0.0;
};

/// The k-windows shrinking towards P0 used by directional_envelopes.
std::vector<int> default_windows();

/**
 * Estimates h_{f_dev} and -h_{-f_dev} at a traceless rank-one P0 from windows
 * |P - P0| < 1/k, P traceless, t = k tau for tau in `t_multipliers` (all > 1).
 * The sampling pattern scales self-similarly with 1/k.
 */
EnvelopeResult directional_envelopes(const MicroDensity& f, const SymTensor& P0, int samples,
                                     std::span<const int> windows,
                                     std::span<const double> t_multipliers, std::uint64_t seed);

/// True when P is traceless with eigenvalues (lambda, 0, ..., -lambda), i.e. a (.) b with a . b = 0.
bool is_traceless_rank_one(const SymTensor& P, double tol = 1e-10);

struct RankOneViolation {
  Point x{};
  SymTensor X;
  std::array<double, 3> a{};
  std::array<double, 3> b{};
  double t = 0.0;
  double margin = 0.0;  ///< f(X) - (f(X + t a(.)b) + f(X - t a(.)b)) / 2 > 0
};

/// Midpoint convexity along random symmetric rank-one lines.
std::vector<RankOneViolation> rank_one_scan(const MicroDensity& f, int samples, std::uint64_t seed);

using MatrixFunction = std::function<double(const Eigen::MatrixXd&)>;

struct BkkResult {
  double lip_est = 0.0;
  double bound = 0.0;
  bool ok = false;
};

/**
 * lip_est: largest difference quotient over probe pairs in B_r(X0).
 * bound: sqrt(mn) (max - min of f over probes in B_2r(X0)) / r. Besides the
 * B_r probes, the B_2r probes include X0 +- 2r along each coordinate and the two
 * points where the line through the steepest pair meets the 2r sphere.
 */
BkkResult bkk_check(const MatrixFunction& f, const Eigen::MatrixXd& X0, double r, int probes,
                    std::uint64_t seed);

struct OracleResult {
  SymTensor X;
  double value = 0.0;
  int profile_resolution = 0;
};

/// Minimum over piecewise-linear profiles u(x_1) with u(0) = u(1) = 0 for a laminate in x_1.
OracleResult laminate_oracle(const MicroDensity& f, const SymTensor& X, int resolution);

/// Deterministic strain panel: zero, identity, pure shear, uniaxial, then seeded random strains.
std::vector<SymTensor> strain_panel(int dim, int count, std::uint64_t seed, double scale = 1.0);

}  // namespace hencky
