#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hencky/analysis.hpp"
#include "hencky/optimize.hpp"

namespace hencky {

namespace {

constexpr int kOracleRestarts = 32;

/// One piece of a profile segment lying in a single phase.
struct Piece {
  int segment = 0;
  double length = 0.0;
  Point x{};  ///< evaluation point inside the piece
};

/// Integral of f(x_1, X + sym(u' (x) e_1)) for piecewise-linear u on a uniform mesh.
class ProfileEnergy {
 public:
  ProfileEnergy(const MicroDensity& f, const SymTensor& X, int resolution, double theta)
      : f_(f), X_(X), n_(f.dim()), R_(resolution) {
    for (int s = 0; s < R_; ++s) {
      const double a = static_cast<double>(s) / R_;
      const double b = static_cast<double>(s + 1) / R_;
      if (theta > a && theta < b) {
        pieces_.push_back({s, theta - a, {0.5 * (a + theta), 0.0, 0.0}});
        pieces_.push_back({s, b - theta, {0.5 * (theta + b), 0.0, 0.0}});
      } else {
        pieces_.push_back({s, b - a, {0.5 * (a + b), 0.0, 0.0}});
      }
    }
  }

  std::size_t size() const { return static_cast<std::size_t>((R_ - 1) * n_); }
  void set_smoothing(double eps) { eps_ = eps; }

  double operator()(std::span<const double> u, std::span<double> grad) const {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    double sum = 0.0;
    for (const Piece& p : pieces_) {
      const auto slope = segment_slope(u, p.segment);
      const SymTensor E = strain(slope);
      sum += p.length * f_.smoothed(p.x, E, eps_);
      if (grad.empty()) continue;
      const SymTensor S = f_.gradient(p.x, E, eps_);
      for (int i = 0; i < n_; ++i) {
        // d E / d g_i: E_11 for i = 0, E_1i = E_i1 = g_i / 2 otherwise
        const double dg = p.length * (i == 0 ? S(0, 0) : S(0, i)) * R_;
        add(grad, p.segment + 1, i, dg);
        add(grad, p.segment, i, -dg);
      }
    }
    return sum;
  }

 private:
  std::array<double, 3> segment_slope(std::span<const double> u, int s) const {
    std::array<double, 3> g{};
    for (int i = 0; i < n_; ++i) g[static_cast<std::size_t>(i)] = (node(u, s + 1, i) - node(u, s, i)) * R_;
    return g;
  }
  SymTensor strain(const std::array<double, 3>& g) const {
    SymTensor E = X_;
    E.at(0, 0) += g[0];
    for (int i = 1; i < n_; ++i) E.at(0, i) += 0.5 * g[static_cast<std::size_t>(i)];
    return E;
  }
  double node(std::span<const double> u, int k, int i) const {
    if (k == 0 || k == R_) return 0.0;
    return u[static_cast<std::size_t>((k - 1) * n_ + i)];
  }
  void add(std::span<double> grad, int k, int i, double v) const {
    if (k == 0 || k == R_) return;
    grad[static_cast<std::size_t>((k - 1) * n_ + i)] += v;
  }

  const MicroDensity& f_;
  SymTensor X_;
  int n_;
  int R_;
  double eps_ = 0.0;
  std::vector<Piece> pieces_;
};

}  // namespace

OracleResult laminate_oracle(const MicroDensity& f, const SymTensor& X, int resolution) {
  if (!f.traits().laminate) throw std::invalid_argument("laminate oracle needs a laminate density");
  if (resolution < 2) throw std::invalid_argument("profile resolution must be >= 2");
  if (X.dim() != f.dim()) throw std::invalid_argument("strain dimension does not match density");

  ProfileEnergy energy(f, X, resolution, f.traits().laminate->theta);
  Objective obj = [&energy](std::span<const double> u, std::span<double> g) { return energy(u, g); };
  LbfgsOptions opts;
  opts.gradient_tolerance = 1e-10;
  opts.function_tolerance = 1e-16;
  opts.parameter_tolerance = 1e-16;
  opts.max_iters = 4000;

  std::mt19937_64 rng(0);
  std::normal_distribution<double> noise(0.0, 0.5 * std::max(X.norm(), 1.0) / resolution);
  OracleResult out;
  out.X = X;
  out.profile_resolution = resolution;
  out.value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kOracleRestarts; ++r) {
    std::vector<double> u(energy.size(), 0.0);
    if (r > 0) {
      for (double& v : u) v = noise(rng);
    }
    for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
      energy.set_smoothing(eps);
      minimize_lbfgs(obj, u, opts);
    }
    energy.set_smoothing(0.0);
    std::vector<double> none;
    const double exact = energy(u, none);
    if (!std::isfinite(exact)) throw NonFiniteEnergy("oracle energy is not finite");
    out.value = std::min(out.value, exact);
  }
  return out;
}

}  // namespace hencky
