#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hencky/kernels.hpp"

namespace hencky {

namespace {

void require_same(const GridField& u, const GridField& v) {
  if (u.dim() != v.dim() || u.spec().k != v.spec().k || u.spec().m != v.spec().m) {
    throw std::invalid_argument("grid fields have different specifications");
  }
}

/// Index of every node along each axis, and the node strides.
struct Lattice {
  int dim;
  int side;
  std::array<std::size_t, 3> stride{};

  Lattice(int d, int s) : dim(d), side(s) {
    std::size_t st = 1;
    for (int j = 0; j < d; ++j) {
      stride[static_cast<std::size_t>(j)] = st;
      st *= static_cast<std::size_t>(s);
    }
  }
  int coord(std::size_t node, int j) const {
    return static_cast<int>((node / stride[static_cast<std::size_t>(j)]) % static_cast<std::size_t>(side));
  }
};

/// Sparse scalar Laplacian (-div grad, scaled by h^2) on interior nodes with zero boundary values.
Eigen::SparseMatrix<double> interior_laplacian(const GridField& probe, const std::vector<std::ptrdiff_t>& index,
                                               std::size_t count) {
  const Lattice lat(probe.dim(), probe.side());
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t node = 0; node < probe.node_count(); ++node) {
    const std::ptrdiff_t row = index[node];
    if (row < 0) continue;
    t.emplace_back(static_cast<int>(row), static_cast<int>(row), 2.0 * probe.dim());
    for (int j = 0; j < probe.dim(); ++j) {
      for (const std::size_t nb : {node + lat.stride[static_cast<std::size_t>(j)], node - lat.stride[static_cast<std::size_t>(j)]}) {
        const std::ptrdiff_t col = index[nb];
        if (col >= 0) t.emplace_back(static_cast<int>(row), static_cast<int>(col), -1.0);
      }
    }
  }
  Eigen::SparseMatrix<double> L(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

std::vector<std::ptrdiff_t> interior_index(const GridField& probe, std::size_t& count) {
  std::vector<std::ptrdiff_t> index(probe.node_count(), -1);
  count = 0;
  for (std::size_t node = 0; node < probe.node_count(); ++node) {
    if (!probe.on_boundary(node)) index[node] = static_cast<std::ptrdiff_t>(count++);
  }
  return index;
}

double vec_norm(const Vec3& v, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
  return std::sqrt(s);
}

}  // namespace

GridField nodal_gradient(const NodalScalar& phi, int dim, const CellSpec& spec) {
  GridField g(dim, spec, false);
  if (phi.size() != g.node_count()) throw std::invalid_argument("potential size does not match the grid");
  const Lattice lat(dim, g.side());
  const double h = spec.h();
  for (std::size_t node = 0; node < g.node_count(); ++node) {
    if (g.on_boundary(node) && phi[node] != 0.0) {
      throw std::invalid_argument("potential must vanish on the boundary");
    }
    for (int j = 0; j < dim; ++j) {
      const bool last = lat.coord(node, j) == g.side() - 1;
      const double up = last ? 0.0 : phi[node + lat.stride[static_cast<std::size_t>(j)]];
      g.at(node, j) = (up - phi[node]) / h;
    }
  }
  return g;
}

NodalScalar nodal_divergence(const GridField& u) {
  const Lattice lat(u.dim(), u.side());
  NodalScalar div(u.node_count(), 0.0);
  for (std::size_t node = 0; node < u.node_count(); ++node) {
    if (u.on_boundary(node)) continue;
    double s = 0.0;
    for (int j = 0; j < u.dim(); ++j) {
      s += u.at(node, j) - u.at(node - lat.stride[static_cast<std::size_t>(j)], j);
    }
    div[node] = s / u.h();
  }
  return div;
}

HelmholtzResult helmholtz_decompose(const GridField& u) {
  std::size_t count = 0;
  const auto index = interior_index(u, count);
  const double h = u.h();
  const NodalScalar div = nodal_divergence(u);

  NodalScalar phi(u.node_count(), 0.0);
  if (count > 0) {
    const Eigen::SparseMatrix<double> L = interior_laplacian(u, index, count);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() != Eigen::Success) throw std::runtime_error("Poisson factorization failed");
    // -Laplace phi = -div u, with the 5/7-point stencil scaled by h^2
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(count));
    for (std::size_t node = 0; node < u.node_count(); ++node) {
      if (index[node] >= 0) rhs[index[node]] = -h * h * div[node];
    }
    Eigen::VectorXd x = solver.solve(rhs);
    for (int it = 0; it < 3; ++it) x += solver.solve(rhs - L * x);
    if (solver.info() != Eigen::Success || !x.allFinite()) throw std::runtime_error("Poisson solve failed");
    for (std::size_t node = 0; node < u.node_count(); ++node) {
      if (index[node] >= 0) phi[node] = x[index[node]];
    }
  }

  const GridField grad = nodal_gradient(phi, u.dim(), u.spec());
  HelmholtzResult out{u - grad, phi, 0.0, 0.0};
  const NodalScalar dv = nodal_divergence(out.v);
  for (double v : dv) out.div_residual = std::max(out.div_residual, std::abs(v));
  double inner = 0.0;
  for (std::size_t i = 0; i < out.v.values().size(); ++i) inner += out.v.values()[i] * grad.values()[i];
  out.orthogonality = std::abs(inner) * std::pow(h, u.dim());
  return out;
}

CellScalar cell_divergence(const GridField& u) {
  CellScalar div(u.cell_count());
  for (std::size_t c = 0; c < div.size(); ++c) div[c] = u.centroid_strain(c).trace();
  return div;
}

double lq_norm(const CellScalar& g, double q, double cell_volume) {
  double s = 0.0;
  for (double v : g) s += std::pow(std::abs(v), q);
  return std::pow(s * cell_volume, 1.0 / q);
}

double gradient_lq_norm(const GridField& z, double q) {
  double s = 0.0;
  for (std::size_t c = 0; c < z.cell_count(); ++c) {
    const auto g = z.centroid_gradient(c);
    double f = 0.0;
    for (int i = 0; i < z.dim(); ++i) {
      for (int j = 0; j < z.dim(); ++j) f += g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    s += std::pow(std::sqrt(f), q);
  }
  return std::pow(s * z.cell_volume(), 1.0 / q);
}

BogovskiiResult bogovskii(const CellScalar& g, int dim, const CellSpec& spec, double q) {
  if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("bogovskii needs q in (1, inf)");
  GridField z(dim, spec, true);
  const std::size_t cells = z.cell_count();
  if (g.size() != cells) throw std::invalid_argument("right-hand side size does not match the grid");
  double mean = 0.0, gmax = 0.0;
  for (double v : g) {
    if (!std::isfinite(v)) throw std::invalid_argument("right-hand side is not finite");
    mean += v;
    gmax = std::max(gmax, std::abs(v));
  }
  mean /= static_cast<double>(cells);
  if (std::abs(mean) > 1e-12 * std::max(1.0, gmax)) {
    throw std::invalid_argument("bogovskii requires a right-hand side with zero mean");
  }

  std::size_t count = 0;
  const auto index = interior_index(z, count);
  if (count > 0 && gmax > 0.0) {
    // Minimise the Dirichlet energy of z subject to D z = g: z = K^-1 D^T (D K^-1 D^T)^+ g.
    const Eigen::SparseMatrix<double> K = interior_laplacian(z, index, count);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
    if (solver.info() != Eigen::Success) throw std::runtime_error("Laplacian factorization failed");

    const auto nc = static_cast<Eigen::Index>(cells);
    const auto ni = static_cast<Eigen::Index>(count);
    const unsigned corners = 1u << dim;
    const double w = 1.0 / (static_cast<double>(corners / 2) * spec.h());
    std::vector<Eigen::MatrixXd> Dt(static_cast<std::size_t>(dim), Eigen::MatrixXd::Zero(ni, nc));
    const Lattice lat(dim, z.side());
    for (std::size_t c = 0; c < cells; ++c) {
      std::size_t base = 0;
      std::size_t rest = c;
      for (int j = 0; j < dim; ++j) {
        base += (rest % static_cast<std::size_t>(spec.nodes_per_side())) * lat.stride[static_cast<std::size_t>(j)];
        rest /= static_cast<std::size_t>(spec.nodes_per_side());
      }
      for (unsigned s = 0; s < corners; ++s) {
        std::size_t node = base;
        for (int j = 0; j < dim; ++j) node += ((s >> j) & 1u) * lat.stride[static_cast<std::size_t>(j)];
        const std::ptrdiff_t col = index[node];
        if (col < 0) continue;
        for (int j = 0; j < dim; ++j) {
          Dt[static_cast<std::size_t>(j)](col, static_cast<Eigen::Index>(c)) += ((s >> j) & 1u) ? w : -w;
        }
      }
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nc, nc);
    std::vector<Eigen::MatrixXd> Y;
    for (int j = 0; j < dim; ++j) {
      Y.push_back(solver.solve(Dt[static_cast<std::size_t>(j)]));
      M.noalias() += Dt[static_cast<std::size_t>(j)].transpose() * Y.back();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    const Eigen::VectorXd& mu = eig.eigenvalues();
    const double cut = 1e-10 * mu.cwiseAbs().maxCoeff();
    const Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), nc);
    Eigen::VectorXd coef = eig.eigenvectors().transpose() * gv;
    for (Eigen::Index i = 0; i < nc; ++i) coef[i] = mu[i] > cut ? coef[i] / mu[i] : 0.0;
    const Eigen::VectorXd lambda = eig.eigenvectors() * coef;
    for (int j = 0; j < dim; ++j) {
      const Eigen::VectorXd zj = Y[static_cast<std::size_t>(j)] * lambda;
      for (std::size_t node = 0; node < z.node_count(); ++node) {
        if (index[node] >= 0) z.at(node, j) = zj[index[node]];
      }
    }
  }

  BogovskiiResult out{z, 0.0, 0.0};
  const CellScalar div = cell_divergence(out.z);
  for (std::size_t c = 0; c < cells; ++c) out.residual = std::max(out.residual, std::abs(div[c] - g[c]));
  const double gn = lq_norm(g, q, z.cell_volume());
  out.ratio = gn > 0.0 ? gradient_lq_norm(out.z, q) / gn : 0.0;
  return out;
}

Vec3 RigidMotion::operator()(const Point& x) const {
  Vec3 v = translation;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      v[static_cast<std::size_t>(i)] += rotation[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                                        (x[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)]);
    }
  }
  return v;
}

double RigidMotion::rotation_asymmetry() const {
  double m = 0.0;
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      m = std::max(m, std::abs(rotation[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                               rotation[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]));
    }
  }
  return m;
}

double ball_second_moment(int dim, double r) {
  require_dim(dim);
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be > 0");
  const double n = dim;
  const double J1 = std::pow(std::numbers::pi, n / 2.0) / ((n + 2.0) * std::tgamma(n / 2.0 + 1.0));
  return J1 * std::pow(r, n + 2.0);
}

namespace {

std::vector<std::size_t> ball_cells(const GridField& u, const Point& x0, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be > 0");
  const double L = u.spec().k;
  for (int j = 0; j < u.dim(); ++j) {
    const double c = x0[static_cast<std::size_t>(j)];
    if (c - r < -1e-12 || c + r > L + 1e-12) throw std::invalid_argument("ball is not inside the grid domain");
  }
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < u.cell_count(); ++c) {
    const Point p = u.cell_centroid(c);
    double d2 = 0.0;
    for (int j = 0; j < u.dim(); ++j) d2 += std::pow(p[static_cast<std::size_t>(j)] - x0[static_cast<std::size_t>(j)], 2);
    if (d2 < r * r) cells.push_back(c);
  }
  if (cells.empty()) throw std::invalid_argument("ball contains no grid cell centroid");
  return cells;
}

}  // namespace

RigidMotion rigid_project(const GridField& u, const Point& x0, double r) {
  const auto cells = ball_cells(u, x0, r);
  const int n = u.dim();
  const double vol = u.cell_volume();
  RigidMotion R;
  R.dim = n;
  R.center = x0;
  for (std::size_t c : cells) {
    const Vec3 v = u.centroid_value(c);
    for (int i = 0; i < n; ++i) R.translation[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
  }
  for (double& t : R.translation) t /= static_cast<double>(cells.size());
  // Moment of u - mean: equal to the moment of u on the exact ball, and exactly
  // zero for constants on the sampled one.
  std::array<std::array<double, 3>, 3> moment{};
  for (std::size_t c : cells) {
    const Vec3 v = u.centroid_value(c);
    const Point p = u.cell_centroid(c);
    for (int i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      for (int j = 0; j < n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        // (w x y)_{ij} = (w_i y_j - y_i w_j) / 2 with y = x - x0
        const double wi = v[si] - R.translation[si];
        const double wj = v[sj] - R.translation[sj];
        moment[si][sj] += 0.5 * vol * (wi * (p[sj] - x0[sj]) - (p[si] - x0[si]) * wj);
      }
    }
  }
  const double J = ball_second_moment(n, r);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) R.rotation[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = moment[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] / J;
  }
  return R;
}

double korn_ratio(const GridField& u, const Point& x0, double r) {
  const RigidMotion R = rigid_project(u, x0, r);
  const auto cells = ball_cells(u, x0, r);
  const int n = u.dim();
  const double p = n / (n - 1.0);
  double num = 0.0, den = 0.0;
  for (std::size_t c : cells) {
    const Vec3 v = u.centroid_value(c);
    const Vec3 rv = R(u.cell_centroid(c));
    Vec3 diff{};
    for (int i = 0; i < n; ++i) diff[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)] - rv[static_cast<std::size_t>(i)];
    num += std::pow(vec_norm(diff, n), p);
    den += u.centroid_strain(c).norm();
  }
  num = std::pow(num * u.cell_volume(), 1.0 / p);
  den *= u.cell_volume();
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

double strict_distance(const GridField& u, const GridField& v) {
  require_same(u, v);
  const int n = u.dim();
  double l1 = 0.0, mass_u = 0.0, mass_v = 0.0, div2 = 0.0;
  for (std::size_t c = 0; c < u.cell_count(); ++c) {
    const Vec3 a = u.centroid_value(c);
    const Vec3 b = v.centroid_value(c);
    Vec3 d{};
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
    l1 += vec_norm(d, n);
    const SymTensor Eu = u.centroid_strain(c);
    const SymTensor Ev = v.centroid_strain(c);
    mass_u += Eu.norm();
    mass_v += Ev.norm();
    div2 += std::pow(Eu.trace() - Ev.trace(), 2);
  }
  const double vol = u.cell_volume();
  return vol * l1 + vol * std::abs(mass_u - mass_v) + std::sqrt(vol * div2);
}

double area_strict_gap(const GridField& u, const GridField& v) {
  require_same(u, v);
  double full = 0.0, dev = 0.0;
  for (std::size_t c = 0; c < u.cell_count(); ++c) {
    const SymTensor Eu = u.centroid_strain(c);
    const SymTensor Ev = v.centroid_strain(c);
    full += area_integrand(Eu) - area_integrand(Ev);
    dev += area_integrand(Eu.dev()) - area_integrand(Ev.dev());
  }
  const double vol = u.cell_volume();
  return vol * (std::abs(full) + std::abs(dev));
}

}  // namespace hencky
