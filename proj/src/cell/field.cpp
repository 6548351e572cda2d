#include <cmath>
#include <stdexcept>

#include "hencky/cell.hpp"

namespace hencky {

void CellSpec::validate() const {
  if (k < 1) throw std::invalid_argument("cell multiplicity k must be >= 1");
  if (m < 2) throw std::invalid_argument("grid subdivisions m must be >= 2");
}

namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

std::array<int, 3> unravel(std::size_t idx, int N, int dim) {
  std::array<int, 3> c{};
  for (int j = 0; j < dim; ++j) {
    c[static_cast<std::size_t>(j)] = static_cast<int>(idx % static_cast<std::size_t>(N));
    idx /= static_cast<std::size_t>(N);
  }
  return c;
}

/// Node index of corner `corner` (bit j = offset along axis j) of cell `cell`.
std::size_t corner_node(std::size_t cell, unsigned corner, int N, int dim) {
  const auto c = unravel(cell, N, dim);
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int j = 0; j < dim; ++j) {
    const int v = (c[static_cast<std::size_t>(j)] + static_cast<int>((corner >> j) & 1u)) % N;
    idx += static_cast<std::size_t>(v) * stride;
    stride *= static_cast<std::size_t>(N);
  }
  return idx;
}

}  // namespace

DisplacementField::DisplacementField(int dim, CellSpec spec)
    : dim_(dim), spec_(spec), node_count_(0) {
  require_dim(dim);
  spec_.validate();
  node_count_ = ipow(static_cast<std::size_t>(spec_.nodes_per_side()), dim);
  values_.assign(node_count_ * static_cast<std::size_t>(dim), 0.0);
}

DisplacementField DisplacementField::from_function(int dim, CellSpec spec,
                                                   const std::function<Vec3(const Point&)>& u) {
  DisplacementField phi(dim, spec);
  const auto d = static_cast<std::size_t>(dim);
  for (std::size_t node = 0; node < phi.node_count(); ++node) {
    if (phi.pinned(node)) continue;
    const Vec3 v = u(phi.node_position(node));
    for (std::size_t i = 0; i < d; ++i) phi.values_[node * d + i] = v[i];
  }
  return phi;
}

bool DisplacementField::pinned(std::size_t node) const {
  if (spec_.boundary == Boundary::periodic) return false;
  const auto c = unravel(node, spec_.nodes_per_side(), dim_);
  for (int j = 0; j < dim_; ++j) {
    if (c[static_cast<std::size_t>(j)] == 0) return true;
  }
  return false;
}

Point DisplacementField::node_position(std::size_t node) const {
  const auto c = unravel(node, spec_.nodes_per_side(), dim_);
  Point p{};
  for (int j = 0; j < dim_; ++j) {
    p[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)] * spec_.h();
  }
  return p;
}

std::vector<std::size_t> DisplacementField::free_dofs() const {
  std::vector<std::size_t> out;
  const auto d = static_cast<std::size_t>(dim_);
  for (std::size_t node = 0; node < node_count_; ++node) {
    if (pinned(node)) continue;
    for (std::size_t i = 0; i < d; ++i) out.push_back(node * d + i);
  }
  return out;
}

void DisplacementField::enforce_boundary() {
  const auto d = static_cast<std::size_t>(dim_);
  if (spec_.boundary == Boundary::dirichlet) {
    for (std::size_t node = 0; node < node_count_; ++node) {
      if (!pinned(node)) continue;
      for (std::size_t i = 0; i < d; ++i) values_[node * d + i] = 0.0;
    }
    return;
  }
  for (std::size_t i = 0; i < d; ++i) {
    double mean = 0.0;
    for (std::size_t node = 0; node < node_count_; ++node) mean += values_[node * d + i];
    mean /= static_cast<double>(node_count_);
    for (std::size_t node = 0; node < node_count_; ++node) values_[node * d + i] -= mean;
  }
}

Point cell_centroid(int dim, const CellSpec& spec, std::size_t cell) {
  const auto c = unravel(cell, spec.nodes_per_side(), dim);
  Point p{};
  for (int j = 0; j < dim; ++j) {
    p[static_cast<std::size_t>(j)] = (c[static_cast<std::size_t>(j)] + 0.5) * spec.h();
  }
  return p;
}

StrainField discrete_sym_gradient(const DisplacementField& phi) {
  const int dim = phi.dim();
  const int N = phi.spec().nodes_per_side();
  const auto d = static_cast<std::size_t>(dim);
  const unsigned corners = 1u << dim;
  // derivative weight of each corner: +-1 / (2^{n-1} h)
  const double w = 1.0 / (static_cast<double>(corners / 2) * phi.spec().h());
  const auto vals = phi.values();

  StrainField out(phi.cell_count(), SymTensor(dim));
  for (std::size_t cell = 0; cell < phi.cell_count(); ++cell) {
    double grad[3][3] = {};  // grad[i][j] = d u_i / d x_j
    for (unsigned s = 0; s < corners; ++s) {
      const std::size_t node = corner_node(cell, s, N, dim);
      for (std::size_t j = 0; j < d; ++j) {
        const double sign = ((s >> j) & 1u) ? w : -w;
        for (std::size_t i = 0; i < d; ++i) grad[i][j] += sign * vals[node * d + i];
      }
    }
    SymTensor& E = out[cell];
    for (int i = 0; i < dim; ++i) {
      for (int j = i; j < dim; ++j) E.at(i, j) = 0.5 * (grad[i][j] + grad[j][i]);
    }
  }
  return out;
}

void sym_gradient_adjoint(int dim, const CellSpec& spec, std::span<const SymTensor> stress,
                          std::span<double> out) {
  const int N = spec.nodes_per_side();
  const auto d = static_cast<std::size_t>(dim);
  const unsigned corners = 1u << dim;
  const double w = 1.0 / (static_cast<double>(corners / 2) * spec.h());
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t cell = 0; cell < stress.size(); ++cell) {
    const SymTensor& S = stress[cell];
    for (unsigned s = 0; s < corners; ++s) {
      const std::size_t node = corner_node(cell, s, N, dim);
      for (std::size_t j = 0; j < d; ++j) {
        const double sign = ((s >> j) & 1u) ? w : -w;
        for (std::size_t i = 0; i < d; ++i) {
          out[node * d + i] += sign * S(static_cast<int>(i), static_cast<int>(j));
        }
      }
    }
  }
  if (spec.boundary == Boundary::dirichlet) {
    for (std::size_t node = 0; node < stress.size(); ++node) {
      const auto c = unravel(node, N, dim);
      bool pin = false;
      for (int j = 0; j < dim; ++j) pin = pin || c[static_cast<std::size_t>(j)] == 0;
      if (!pin) continue;
      for (std::size_t i = 0; i < d; ++i) out[node * d + i] = 0.0;
    }
  }
}

}  // namespace hencky
