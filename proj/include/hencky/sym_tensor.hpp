#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hencky {

/// Maximum number of stored coefficients (n = 3).
inline constexpr std::size_t kMaxSymSize = 6;

/// Points of the periodicity cell. Unused trailing coordinates are zero.
using Point = std::array<double, 3>;

/// Number of independent coefficients of a symmetric n x n matrix.
constexpr std::size_t sym_size(int dim) { return static_cast<std::size_t>(dim * (dim + 1) / 2); }

/// Throws std::invalid_argument unless dim is 2 or 3.
void require_dim(int dim);

/**
 * Symmetric n x n strain or stress value, n in {2, 3}.
 *
 * Only the upper triangle is stored (row-major), so symmetry holds by
 * construction. All norms and inner products are Frobenius.
 */
class SymTensor {
 public:
  SymTensor() : SymTensor(2) {}
  explicit SymTensor(int dim);

  static SymTensor zero(int dim) { return SymTensor(dim); }
  static SymTensor identity(int dim);
  static SymTensor diag(std::span<const double> d);
  /// Upper-triangle coefficients in row-major order: (11,12,22) or (11,12,13,22,23,33).
  static SymTensor from_upper(int dim, std::span<const double> upper);
  /// Coordinates in the orthonormal basis {E_ii, (E_ij + E_ji)/sqrt(2)}.
  static SymTensor from_coords(int dim, std::span<const double> coords);

  int dim() const { return dim_; }
  std::size_t size() const { return sym_size(dim_); }

  double operator()(int i, int j) const { return data_[slot(i, j)]; }
  double& at(int i, int j) { return data_[slot(i, j)]; }

  std::span<const double> upper() const { return {data_.data(), size()}; }
  std::array<double, kMaxSymSize> coords() const;

  double trace() const;
  double norm_squared() const;
  double norm() const;
  SymTensor dev() const;
  /// Frobenius inner product X : Y.
  double dot(const SymTensor& other) const;

  SymTensor& operator+=(const SymTensor& other);
  SymTensor& operator-=(const SymTensor& other);
  SymTensor& operator*=(double s);

  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
  friend SymTensor operator*(double s, SymTensor a) { return a *= s; }
  friend SymTensor operator/(SymTensor a, double s) { return a *= (1.0 / s); }
  SymTensor operator-() const { return *this * -1.0; }

  bool operator==(const SymTensor& other) const = default;

  std::string to_string() const;

 private:
  std::size_t slot(int i, int j) const;

  int dim_ = 2;
  std::array<double, kMaxSymSize> data_{};
};

/// |X_dev| and tr X, the two quantities entering the Hencky growth bounds.
struct HenckyPair {
  double dev_norm = 0.0;
  double trace = 0.0;
};

HenckyPair hencky_pair(const SymTensor& x);

/// Returns (X_dev, tr X) with X_dev = X - (tr X / n) I.
std::pair<SymTensor, double> dev_trace_split(const SymTensor& x);

/// a (.) b = (a (x) b + b (x) a) / 2. Throws on length mismatch or unsupported length.
SymTensor sym_dyad(std::span<const double> a, std::span<const double> b);

/// <X> = sqrt(1 + |X|^2).
double area_integrand(const SymTensor& x);

/// Smoothed Frobenius norm sqrt(eps^2 + |X|^2) - eps; exact norm for eps = 0.
double smoothed_norm(const SymTensor& x, double eps);

/// Derivative of smoothed_norm; zero at X = 0.
SymTensor smoothed_norm_gradient(const SymTensor& x, double eps);

}  // namespace hencky
