#include <cmath>
#include <stdexcept>

#include "hencky/kernels.hpp"

namespace hencky {

namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

std::array<int, 3> unravel(std::size_t idx, int side, int dim) {
  std::array<int, 3> c{};
  for (int j = 0; j < dim; ++j) {
    c[static_cast<std::size_t>(j)] = static_cast<int>(idx % static_cast<std::size_t>(side));
    idx /= static_cast<std::size_t>(side);
  }
  return c;
}

}  // namespace

GridField::GridField(int dim, CellSpec spec, bool dirichlet)
    : dim_(dim), spec_(spec), dirichlet_(dirichlet), nodes_(0) {
  require_dim(dim);
  spec_.validate();
  nodes_ = ipow(static_cast<std::size_t>(side()), dim);
  values_.assign(nodes_ * static_cast<std::size_t>(dim), 0.0);
}

GridField GridField::from_function(int dim, CellSpec spec, bool dirichlet,
                                   const std::function<Vec3(const Point&)>& u) {
  GridField g(dim, spec, dirichlet);
  for (std::size_t node = 0; node < g.nodes_; ++node) {
    if (dirichlet && g.on_boundary(node)) continue;
    const Vec3 v = u(g.node_position(node));
    for (int i = 0; i < dim; ++i) g.at(node, i) = v[static_cast<std::size_t>(i)];
  }
  return g;
}

std::size_t GridField::cell_count() const {
  return ipow(static_cast<std::size_t>(spec_.nodes_per_side()), dim_);
}

double GridField::cell_volume() const { return std::pow(h(), dim_); }

bool GridField::on_boundary(std::size_t node) const {
  const auto c = unravel(node, side(), dim_);
  for (int j = 0; j < dim_; ++j) {
    const int v = c[static_cast<std::size_t>(j)];
    if (v == 0 || v == side() - 1) return true;
  }
  return false;
}

Point GridField::node_position(std::size_t node) const {
  const auto c = unravel(node, side(), dim_);
  Point p{};
  for (int j = 0; j < dim_; ++j) p[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)] * h();
  return p;
}

Point GridField::cell_centroid(std::size_t cell) const {
  const auto c = unravel(cell, spec_.nodes_per_side(), dim_);
  Point p{};
  for (int j = 0; j < dim_; ++j) p[static_cast<std::size_t>(j)] = (c[static_cast<std::size_t>(j)] + 0.5) * h();
  return p;
}

std::size_t GridField::cell_corner(std::size_t cell, unsigned corner) const {
  const auto c = unravel(cell, spec_.nodes_per_side(), dim_);
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int j = 0; j < dim_; ++j) {
    idx += static_cast<std::size_t>(c[static_cast<std::size_t>(j)] + static_cast<int>((corner >> j) & 1u)) * stride;
    stride *= static_cast<std::size_t>(side());
  }
  return idx;
}

Vec3 GridField::centroid_value(std::size_t cell) const {
  Vec3 v{};
  const unsigned corners = 1u << dim_;
  for (unsigned s = 0; s < corners; ++s) {
    const std::size_t node = cell_corner(cell, s);
    for (int i = 0; i < dim_; ++i) v[static_cast<std::size_t>(i)] += at(node, i);
  }
  for (double& x : v) x /= corners;
  return v;
}

std::array<std::array<double, 3>, 3> GridField::centroid_gradient(std::size_t cell) const {
  std::array<std::array<double, 3>, 3> g{};
  const unsigned corners = 1u << dim_;
  const double w = 1.0 / (static_cast<double>(corners / 2) * h());
  for (unsigned s = 0; s < corners; ++s) {
    const std::size_t node = cell_corner(cell, s);
    for (int j = 0; j < dim_; ++j) {
      const double sign = ((s >> j) & 1u) ? w : -w;
      for (int i = 0; i < dim_; ++i) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += sign * at(node, i);
    }
  }
  return g;
}

SymTensor GridField::centroid_strain(std::size_t cell) const {
  const auto g = centroid_gradient(cell);
  SymTensor E(dim_);
  for (int i = 0; i < dim_; ++i) {
    for (int j = i; j < dim_; ++j) {
      E.at(i, j) = 0.5 * (g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                          g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
    }
  }
  return E;
}

GridField GridField::operator-(const GridField& other) const {
  if (other.dim_ != dim_ || other.spec_.k != spec_.k || other.spec_.m != spec_.m) {
    throw std::invalid_argument("grid fields have different specifications");
  }
  GridField out(dim_, spec_, dirichlet_ && other.dirichlet_);
  for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = values_[i] - other.values_[i];
  return out;
}

void GridField::zero_boundary() {
  for (std::size_t node = 0; node < nodes_; ++node) {
    if (!on_boundary(node)) continue;
    for (int i = 0; i < dim_; ++i) at(node, i) = 0.0;
  }
}

}  // namespace hencky
