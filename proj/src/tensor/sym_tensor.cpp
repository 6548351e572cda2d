#include "hencky/sym_tensor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hencky {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

bool is_diagonal_slot(int dim, std::size_t s) {
  if (dim == 2) return s == 0 || s == 2;
  return s == 0 || s == 3 || s == 5;
}

}  // namespace

void require_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw std::invalid_argument("dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

SymTensor::SymTensor(int dim) : dim_(dim) { require_dim(dim); }

SymTensor SymTensor::identity(int dim) {
  SymTensor x(dim);
  for (int i = 0; i < dim; ++i) x.at(i, i) = 1.0;
  return x;
}

SymTensor SymTensor::diag(std::span<const double> d) {
  SymTensor x(static_cast<int>(d.size()));
  for (int i = 0; i < x.dim(); ++i) x.at(i, i) = d[static_cast<std::size_t>(i)];
  return x;
}

SymTensor SymTensor::from_upper(int dim, std::span<const double> upper) {
  SymTensor x(dim);
  if (upper.size() != x.size()) {
    throw std::invalid_argument("expected " + std::to_string(x.size()) +
                                " upper-triangle entries, got " + std::to_string(upper.size()));
  }
  for (std::size_t s = 0; s < x.size(); ++s) x.data_[s] = upper[s];
  return x;
}

SymTensor SymTensor::from_coords(int dim, std::span<const double> coords) {
  SymTensor x(dim);
  if (coords.size() < x.size()) throw std::invalid_argument("too few coordinates");
  for (std::size_t s = 0; s < x.size(); ++s) {
    x.data_[s] = is_diagonal_slot(dim, s) ? coords[s] : coords[s] / kSqrt2;
  }
  return x;
}

std::array<double, kMaxSymSize> SymTensor::coords() const {
  std::array<double, kMaxSymSize> c{};
  for (std::size_t s = 0; s < size(); ++s) {
    c[s] = is_diagonal_slot(dim_, s) ? data_[s] : data_[s] * kSqrt2;
  }
  return c;
}

std::size_t SymTensor::slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= dim_) throw std::out_of_range("SymTensor index out of range");
  // row-major upper triangle: row i starts at i*n - i*(i-1)/2
  return static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i));
}

double SymTensor::trace() const {
  double t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double SymTensor::norm_squared() const {
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const double w = is_diagonal_slot(dim_, k) ? 1.0 : 2.0;
    s += w * data_[k] * data_[k];
  }
  return s;
}

double SymTensor::norm() const { return std::sqrt(norm_squared()); }

SymTensor SymTensor::dev() const {
  SymTensor d = *this;
  const double mean = trace() / dim_;
  for (int i = 0; i < dim_; ++i) d.at(i, i) -= mean;
  return d;
}

double SymTensor::dot(const SymTensor& other) const {
  if (other.dim_ != dim_) throw std::invalid_argument("SymTensor dimension mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const double w = is_diagonal_slot(dim_, k) ? 1.0 : 2.0;
    s += w * data_[k] * other.data_[k];
  }
  return s;
}

SymTensor& SymTensor::operator+=(const SymTensor& other) {
  if (other.dim_ != dim_) throw std::invalid_argument("SymTensor dimension mismatch");
  for (std::size_t k = 0; k < size(); ++k) data_[k] += other.data_[k];
  return *this;
}

SymTensor& SymTensor::operator-=(const SymTensor& other) {
  if (other.dim_ != dim_) throw std::invalid_argument("SymTensor dimension mismatch");
  for (std::size_t k = 0; k < size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

SymTensor& SymTensor::operator*=(double s) {
  for (std::size_t k = 0; k < size(); ++k) data_[k] *= s;
  return *this;
}

std::string SymTensor::to_string() const {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (std::size_t k = 0; k < size(); ++k) os << (k ? " " : "") << data_[k];
  os << "]";
  return os.str();
}

HenckyPair hencky_pair(const SymTensor& x) { return {x.dev().norm(), x.trace()}; }

std::pair<SymTensor, double> dev_trace_split(const SymTensor& x) { return {x.dev(), x.trace()}; }

SymTensor sym_dyad(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("sym_dyad: vectors of length " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()));
  }
  const int n = static_cast<int>(a.size());
  SymTensor x(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      x.at(i, j) = 0.5 * (a[ui] * b[uj] + b[ui] * a[uj]);
    }
  }
  return x;
}

double area_integrand(const SymTensor& x) { return std::sqrt(1.0 + x.norm_squared()); }

double smoothed_norm(const SymTensor& x, double eps) {
  if (eps <= 0.0) return x.norm();
  return std::sqrt(eps * eps + x.norm_squared()) - eps;
}

SymTensor smoothed_norm_gradient(const SymTensor& x, double eps) {
  const double r = eps > 0.0 ? std::sqrt(eps * eps + x.norm_squared()) : x.norm();
  if (r == 0.0) return SymTensor::zero(x.dim());
  return x / r;
}

}  // namespace hencky
