#pragma once

#include <array>
#include <functional>
#include <vector>

#include "hencky/cell.hpp"

namespace hencky {

/**
 * Vector field on the closed grid [0, k]^n with (k m + 1)^n nodes.
 *
 * Node (i_0, ..., i_{n-1}) sits at h * i and is stored at i_0 + (N+1) i_1 + ...
 * With the Dirichlet flag set, all boundary nodes hold zero.
 */
class GridField {
 public:
  GridField(int dim, CellSpec spec, bool dirichlet = false);

  static GridField from_function(int dim, CellSpec spec, bool dirichlet,
                                 const std::function<Vec3(const Point&)>& u);

  int dim() const { return dim_; }
  const CellSpec& spec() const { return spec_; }
  bool dirichlet() const { return dirichlet_; }
  int side() const { return spec_.nodes_per_side() + 1; }
  std::size_t node_count() const { return nodes_; }
  std::size_t cell_count() const;
  double h() const { return spec_.h(); }
  double cell_volume() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& at(std::size_t node, int comp) { return values_[node * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(comp)]; }
  double at(std::size_t node, int comp) const { return values_[node * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(comp)]; }

  bool on_boundary(std::size_t node) const;
  Point node_position(std::size_t node) const;
  Point cell_centroid(std::size_t cell) const;
  /// Q1 value at a cell centroid (mean of the corner values).
  Vec3 centroid_value(std::size_t cell) const;
  /// Q1 gradient at a cell centroid, grad[i][j] = d u_i / d x_j.
  std::array<std::array<double, 3>, 3> centroid_gradient(std::size_t cell) const;
  /// Symmetric part of centroid_gradient.
  SymTensor centroid_strain(std::size_t cell) const;

  GridField operator-(const GridField& other) const;
  void zero_boundary();

 private:
  std::size_t cell_corner(std::size_t cell, unsigned corner) const;

  int dim_;
  CellSpec spec_;
  bool dirichlet_;
  std::size_t nodes_;
  std::vector<double> values_;
};

/// Scalar nodal potential on the same closed grid (zero on the boundary).
using NodalScalar = std::vector<double>;
/// Scalar per grid cell, ordered like GridField cells.
using CellScalar = std::vector<double>;

/// Forward-difference gradient of a nodal scalar that vanishes on and beyond the boundary.
GridField nodal_gradient(const NodalScalar& phi, int dim, const CellSpec& spec);

/// Backward-difference divergence at nodes; the negative adjoint of nodal_gradient.
NodalScalar nodal_divergence(const GridField& u);

struct HelmholtzResult {
  GridField v;
  NodalScalar phi;
  double div_residual = 0.0;   ///< max |div v| over interior nodes
  double orthogonality = 0.0;  ///< |<v, grad phi>| in the discrete L2 product
};

/// u = v + grad phi with Laplace phi = div u, phi = 0 on the boundary (direct sparse solve).
HelmholtzResult helmholtz_decompose(const GridField& u);

struct BogovskiiResult {
  GridField z;
  double residual = 0.0;  ///< max |div z - g| over cells
  double ratio = 0.0;     ///< ||grad z||_q / ||g||_q
};

/// Q1 divergence at cell centroids.
CellScalar cell_divergence(const GridField& u);

/**
 * Minimum-gradient-norm solution of div z = g with z = 0 on the boundary.
 * g must have zero grid mean; components of g along the discrete divergence's
 * spurious (checkerboard) modes cannot be matched and show up in `residual`.
 */
BogovskiiResult bogovskii(const CellScalar& g, int dim, const CellSpec& spec, double q = 2.0);

/// Discrete L^q norms with cell-volume weights.
double lq_norm(const CellScalar& g, double q, double cell_volume);
double gradient_lq_norm(const GridField& z, double q);

struct RigidMotion {
  Vec3 translation{};  ///< value at the centre x0
  std::array<std::array<double, 3>, 3> rotation{};
  Point center{};
  int dim = 2;

  Vec3 operator()(const Point& x) const;
  double rotation_asymmetry() const;  ///< max |W + W^T|
};

/// J_r = integral of y_1^2 over the ball of radius r in R^n.
double ball_second_moment(int dim, double r);

/// Projection onto infinitesimal rigid motions over B_r(x0) using cells whose centroid is inside.
RigidMotion rigid_project(const GridField& u, const Point& x0, double r);

/// ||u - R u||_{L^{n/(n-1)}(B)} / ||E u||_{L^1(B)} on the ball.
double korn_ratio(const GridField& u, const Point& x0, double r);

/// ||u - v||_1 + | |Eu|(O) - |Ev|(O) | + ||div u - div v||_2.
double strict_distance(const GridField& u, const GridField& v);

/// |int <Eu> - int <Ev>| + |int <E_dev u> - int <E_dev v>| with <X> = sqrt(1 + |X|^2).
double area_strict_gap(const GridField& u, const GridField& v);

}  // namespace hencky
