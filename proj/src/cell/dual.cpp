#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hencky/cell.hpp"

namespace hencky {

namespace {

using Coords = std::array<double, kMaxSymSize>;

double coord_norm(const Coords& c, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += c[i] * c[i];
  return std::sqrt(s);
}

}  // namespace

double conjugate_pointwise(const MicroDensity& f, const Point& x, const SymTensor& Y,
                           double search_radius, int grid) {
  if (!f.declared_convex()) {
    throw std::invalid_argument("conjugate_pointwise requires a density declared convex in X");
  }
  if (!(search_radius > 0.0) || grid < 3) {
    throw std::invalid_argument("conjugate_pointwise needs radius > 0 and grid >= 3");
  }
  const int n = f.dim();
  const std::size_t d = sym_size(n);
  const double R = search_radius;
  auto objective = [&](const Coords& c) {
    const SymTensor X = SymTensor::from_coords(n, c);
    return Y.dot(X) - f(x, X);
  };

  // Coarse scan of the cube [-R, R]^d restricted to the ball.
  const int q = d > 3 ? std::min(grid, 9) : grid;
  Coords best{};
  double best_val = objective(best);
  std::vector<int> idx(d, 0);
  const double step = 2.0 * R / (q - 1);
  for (;;) {
    Coords c{};
    for (std::size_t i = 0; i < d; ++i) c[i] = -R + step * idx[i];
    if (coord_norm(c, d) <= R) {
      const double v = objective(c);
      if (v > best_val) {
        best_val = v;
        best = c;
      }
    }
    std::size_t i = 0;
    while (i < d && ++idx[i] == q) idx[i++] = 0;
    if (i == d) break;
  }

  // Zoom: local boxes around the incumbent, shrinking geometrically.
  const int local = d > 3 ? 3 : 5;
  double half = step;
  std::vector<int> li(d, 0);
  for (int round = 0; round < 120 && half > 1e-13 * (1.0 + R); ++round) {
    const Coords center = best;
    std::fill(li.begin(), li.end(), 0);
    for (;;) {
      Coords c{};
      for (std::size_t i = 0; i < d; ++i) {
        c[i] = center[i] - half + 2.0 * half * li[i] / (local - 1);
      }
      if (coord_norm(c, d) <= R) {
        const double v = objective(c);
        if (v > best_val) {
          best_val = v;
          best = c;
        }
      }
      std::size_t i = 0;
      while (i < d && ++li[i] == local) li[i++] = 0;
      if (i == d) break;
    }
    half *= 0.6;
  }

  // Still climbing at the rim: Y lies outside the domain (up to resolution).
  const double r = coord_norm(best, d);
  if (r >= 0.9 * R) {
    Coords inner = best;
    for (std::size_t i = 0; i < d; ++i) inner[i] *= 0.8;
    const double slope = (best_val - objective(inner)) / (0.2 * r);
    if (slope > 1e-6 * (1.0 + Y.norm())) return std::numeric_limits<double>::infinity();
  }
  return best_val;
}

namespace {

/// Orthogonal projector onto {Phi : E^T Phi = 0, mean Phi = 0} for per-cell tensor coordinates.
class DivFreeProjector {
 public:
  DivFreeProjector(int dim, const CellSpec& spec) : dim_(dim), d_(sym_size(dim)) {
    DisplacementField probe(dim, spec);
    cells_ = probe.cell_count();
    const auto dofs = probe.free_dofs();
    std::vector<std::ptrdiff_t> column(probe.values().size(), -1);
    for (std::size_t i = 0; i < dofs.size(); ++i) column[dofs[i]] = static_cast<std::ptrdiff_t>(i);

    // Each strain coordinate is linear in the corner values: assemble E column by column.
    std::vector<Eigen::Triplet<double>> triplets;
    const int N = spec.nodes_per_side();
    const unsigned corners = 1u << dim;
    const double w = 1.0 / (static_cast<double>(corners / 2) * spec.h());
    const double r2 = std::numbers::sqrt2;
    for (std::size_t cell = 0; cell < cells_; ++cell) {
      std::size_t rest = cell;
      std::array<int, 3> c{};
      for (int j = 0; j < dim; ++j) {
        c[static_cast<std::size_t>(j)] = static_cast<int>(rest % static_cast<std::size_t>(N));
        rest /= static_cast<std::size_t>(N);
      }
      for (unsigned s = 0; s < corners; ++s) {
        std::size_t node = 0, stride = 1;
        for (int j = 0; j < dim; ++j) {
          node += static_cast<std::size_t>((c[static_cast<std::size_t>(j)] + ((s >> j) & 1)) % N) * stride;
          stride *= static_cast<std::size_t>(N);
        }
        for (int i = 0; i < dim; ++i) {
          const std::ptrdiff_t col = column[node * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)];
          if (col < 0) continue;
          // d u_i / d x_j contributes to E_ij
          for (int j = 0; j < dim; ++j) {
            const double sign = ((s >> j) & 1u) ? w : -w;
            const std::size_t slot = coord_slot(std::min(i, j), std::max(i, j));
            const double coef = i == j ? 1.0 : 0.5 * r2;
            triplets.emplace_back(static_cast<int>(cell * d_ + slot), static_cast<int>(col), sign * coef);
          }
        }
      }
    }
    S_.resize(static_cast<Eigen::Index>(cells_ * d_), static_cast<Eigen::Index>(dofs.size()));
    S_.setFromTriplets(triplets.begin(), triplets.end());
    A_ = (S_.transpose() * S_).pruned();
    double diag = 0.0;
    for (Eigen::Index i = 0; i < A_.rows(); ++i) diag = std::max(diag, A_.coeff(i, i));
    shift_ = 1e-10 * std::max(diag, 1.0);
    Eigen::SparseMatrix<double> shifted = A_;
    for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) += shift_;
    solver_.compute(shifted);
    if (solver_.info() != Eigen::Success) throw std::runtime_error("projector factorization failed");
  }

  std::size_t cells() const { return cells_; }

  /// Removes the compatible-strain component and the cell mean from psi in place.
  void project(Eigen::VectorXd& psi) const {
    if (S_.cols() > 0) {
      const Eigen::VectorXd b = S_.transpose() * psi;
      // Shifted solves refined to the (singular, consistent) normal equations.
      Eigen::VectorXd u = solver_.solve(b);
      for (int it = 0; it < 6; ++it) {
        const Eigen::VectorXd r = b - A_ * u;
        if (r.norm() <= 1e-15 * (1.0 + b.norm())) break;
        u += solver_.solve(r);
      }
      psi -= S_ * u;
    }
    for (std::size_t s = 0; s < d_; ++s) {
      double mean = 0.0;
      for (std::size_t c = 0; c < cells_; ++c) mean += psi[static_cast<Eigen::Index>(c * d_ + s)];
      mean /= static_cast<double>(cells_);
      for (std::size_t c = 0; c < cells_; ++c) psi[static_cast<Eigen::Index>(c * d_ + s)] -= mean;
    }
  }

 private:
  // Position of (i, j), i <= j, in the upper-triangle ordering used by SymTensor::coords.
  std::size_t coord_slot(int i, int j) const {
    return static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i));
  }

  int dim_;
  std::size_t d_;
  std::size_t cells_ = 0;
  Eigen::SparseMatrix<double> S_;
  Eigen::SparseMatrix<double> A_;
  double shift_ = 0.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

}  // namespace

DualResult dual_cell(const MicroDensity& f, const SymTensor& Y, const CellSpec& spec,
                     const SolverConfig& cfg) {
  if (!f.declared_convex()) throw std::invalid_argument("dual_cell requires a convex density");
  spec.validate();
  cfg.validate();
  const int n = f.dim();
  if (Y.dim() != n) throw std::invalid_argument("stress dimension does not match density");
  const std::size_t d = sym_size(n);

  const DivFreeProjector proj(n, spec);
  const std::size_t cells = proj.cells();
  const auto total = static_cast<Eigen::Index>(cells * d);
  std::vector<Point> centroids;
  for (std::size_t c = 0; c < cells; ++c) centroids.push_back(cell_centroid(n, spec, c));

  const Coords yc = Y.coords();
  Eigen::VectorXd ybar(total);
  for (std::size_t c = 0; c < cells; ++c) {
    for (std::size_t s = 0; s < d; ++s) ybar[static_cast<Eigen::Index>(c * d + s)] = yc[s];
  }

  Eigen::VectorXd Z = ybar;
  Eigen::VectorXd Psi = ybar;
  Eigen::VectorXd U = Eigen::VectorXd::Zero(total);
  Eigen::VectorXd Xstar = Eigen::VectorXd::Zero(total);
  double rho = 1.0;
  const double scale = 1.0 + Y.norm();
  const double tol = std::clamp(cfg.tolerance * 1e-2, 1e-12, 1e-8) * scale;
  const double rms = std::sqrt(static_cast<double>(cells));

  DualResult out;
  out.Y = Y;
  double primal = 0.0;
  double dual = 0.0;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    // Z-step through the Moreau identity: prox_{c*/rho}(v) = v - prox_{rho c}(rho v) / rho.
    for (std::size_t c = 0; c < cells; ++c) {
      Coords v{};
      for (std::size_t s = 0; s < d; ++s) {
        const auto k = static_cast<Eigen::Index>(c * d + s);
        v[s] = Psi[k] - U[k];
      }
      const SymTensor V = SymTensor::from_coords(n, v);
      const SymTensor P = f.prox(centroids[c], rho * V, rho);
      const Coords pc = P.coords();
      for (std::size_t s = 0; s < d; ++s) {
        const auto k = static_cast<Eigen::Index>(c * d + s);
        Xstar[k] = pc[s];
        Z[k] = v[s] - pc[s] / rho;
      }
    }
    const Eigen::VectorXd previous = Psi;
    Eigen::VectorXd w = Z + U - ybar;
    proj.project(w);
    Psi = ybar + w;
    U += Z - Psi;

    primal = (Z - Psi).norm() / rms;
    dual = rho * (Psi - previous).norm() / rms;
    if (primal <= tol && dual <= tol) {
      ++it;
      break;
    }
    if (primal > 10.0 * dual) {
      rho *= 2.0;
      U /= 2.0;
    } else if (dual > 10.0 * primal) {
      rho /= 2.0;
      U *= 2.0;
    }
  }
  out.iterations = it;
  out.primal_residual = primal;

  // c*(Z) = Z : X* - c(X*) with X* in the subdifferential of c* at Z.
  double sum = 0.0;
  out.field.reserve(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    Coords zc{}, xc{};
    for (std::size_t s = 0; s < d; ++s) {
      const auto k = static_cast<Eigen::Index>(c * d + s);
      zc[s] = Z[k];
      xc[s] = Xstar[k];
    }
    const SymTensor Zc = SymTensor::from_coords(n, zc);
    const SymTensor Xc = SymTensor::from_coords(n, xc);
    sum += Zc.dot(Xc) - f(centroids[c], Xc);
    out.field.push_back(Zc);
  }
  out.feasible = primal <= std::max(1e-6 * scale, tol);
  out.value = out.feasible ? sum / static_cast<double>(cells) : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace hencky
