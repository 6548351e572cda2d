#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hencky/density.hpp"

namespace hencky {

enum class Boundary { dirichlet, periodic };

/// The cell (0,k)^n split into (k m)^n squares of side h = 1/m.
struct CellSpec {
  int k = 1;
  int m = 8;
  Boundary boundary = Boundary::dirichlet;

  void validate() const;
  int nodes_per_side() const { return k * m; }
  double h() const { return 1.0 / m; }
};

using Vec3 = std::array<double, 3>;

/**
 * Nodal displacement on the cell grid.
 *
 * Nodes carry indices 0..N-1 per axis (N = k m); index N wraps to 0. Under
 * Dirichlet conditions every node with a zero index is pinned at zero, which
 * represents a field vanishing on the whole boundary of (0,k)^n. Values are
 * stored node-major: values()[node * dim + component].
 */
class DisplacementField {
 public:
  DisplacementField() : DisplacementField(2, CellSpec{}) {}
  DisplacementField(int dim, CellSpec spec);

  /// Samples u at the node positions; pinned nodes are left at zero.
  static DisplacementField from_function(int dim, CellSpec spec,
                                         const std::function<Vec3(const Point&)>& u);

  int dim() const { return dim_; }
  const CellSpec& spec() const { return spec_; }
  std::size_t node_count() const { return node_count_; }
  std::size_t cell_count() const { return node_count_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool pinned(std::size_t node) const;
  Point node_position(std::size_t node) const;
  /// Indices into values() of all unpinned components.
  std::vector<std::size_t> free_dofs() const;
  /// Zeroes pinned nodes; with periodic conditions removes the mean translation.
  void enforce_boundary();

 private:
  int dim_;
  CellSpec spec_;
  std::size_t node_count_;
  std::vector<double> values_;
};

using StrainField = std::vector<SymTensor>;

/// Centroid of grid cell `cell` in cell coordinates (not reduced mod 1).
Point cell_centroid(int dim, const CellSpec& spec, std::size_t cell);

/// Q1 symmetric gradient at every cell centroid.
StrainField discrete_sym_gradient(const DisplacementField& phi);

/**
 * Adjoint of discrete_sym_gradient: out[dof] = sum_c stress_c : d(E_c)/d(dof),
 * so that sum_c S_c : (E u)_c = out . u. Pinned components are left at zero.
 */
void sym_gradient_adjoint(int dim, const CellSpec& spec, std::span<const SymTensor> stress,
                          std::span<double> out);

/// Quadrature average of f(x_c, X + E phi(x_c)) over cell centroids.
double assemble_energy(const MicroDensity& f, const SymTensor& X, const DisplacementField& phi,
                       double eps = 0.0);

/// Cell average of the stress d f / d X at X + E phi.
SymTensor mean_stress(const MicroDensity& f, const SymTensor& X, const DisplacementField& phi,
                      double eps = 1e-10);

struct SolverConfig {
  double tolerance = 1e-6;  ///< max-norm of the stress-scaled energy gradient
  int max_iters = 5000;
  int restarts = 1;
  std::uint64_t seed = 0;
  GradientMode gradient = GradientMode::analytic;
  double smoothing = 1e-8;
  double noise_scale = 0.1;

  void validate() const;
};

struct HomResult {
  SymTensor X;
  CellSpec spec;
  double h = 0.0;
  double value = 0.0;  ///< exact (unsmoothed) cell average at the minimizer
  int restarts_used = 0;
  double gradient_norm = 0.0;
  std::vector<double> energy_history;
  int iterations = 0;
  bool converged = false;
  bool hit_max_iters = false;
  /// Neither converged nor out of budget: the line search can no longer
  /// resolve a decrease of the smoothed energy in double precision.
  bool stalled = false;
  DisplacementField minimizer;
};

/**
 * Minimizes the discrete cell energy from phi = 0, from any warm starts, and
 * from restarts - 1 random smooth perturbations, keeping the lowest exact energy.
 */
HomResult minimize_cell(const MicroDensity& f, const SymTensor& X, const CellSpec& spec,
                        const SolverConfig& cfg,
                        std::span<const DisplacementField> warm_starts = {});

struct HomogenizeResult {
  double estimate = 0.0;
  std::vector<HomResult> per_k;
};

/// Minimum of minimize_cell over k in k_list at the resolution and boundary of `base`.
HomogenizeResult homogenize(const MicroDensity& f, const SymTensor& X, std::span<const int> k_list,
                            const CellSpec& base, const SolverConfig& cfg);

/// sup over |X| <= radius of Y : X - f(x, X); +inf when the supremum sits on the search boundary.
double conjugate_pointwise(const MicroDensity& f, const Point& x, const SymTensor& Y,
                           double search_radius, int grid);

struct DualResult {
  SymTensor Y;
  double value = std::numeric_limits<double>::infinity();
  bool feasible = false;
  int iterations = 0;
  double primal_residual = 0.0;  ///< rms distance of the iterate from Y + (div-free, mean-zero)
  StrainField field;             ///< Y + Phi per cell
};

/// Splitting solver for inf over discretely div-free, mean-zero Phi of avg c*(x, Y + Phi).
DualResult dual_cell(const MicroDensity& f, const SymTensor& Y, const CellSpec& spec,
                     const SolverConfig& cfg);

}  // namespace hencky
