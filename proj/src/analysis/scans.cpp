#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hencky/analysis.hpp"

namespace hencky {

namespace {

using Coords = std::array<double, kMaxSymSize>;

Eigen::MatrixXd to_matrix(const SymTensor& X) {
  const int n = X.dim();
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) M(i, j) = X(std::min(i, j), std::max(i, j));
  }
  return M;
}

SymTensor random_unit_dev(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Coords c{};
    for (std::size_t i = 0; i < sym_size(n); ++i) c[i] = g(rng);
    const SymTensor D = SymTensor::from_coords(n, std::span(c.data(), sym_size(n))).dev();
    const double norm = D.norm();
    if (norm > 1e-8) return D / norm;
  }
}

std::array<double, 3> random_unit(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    std::array<double, 3> v{};
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      v[static_cast<std::size_t>(i)] = g(rng);
      s += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
    if (s > 1e-16) {
      for (double& x : v) x /= std::sqrt(s);
      return v;
    }
  }
}

}  // namespace

std::vector<int> default_windows() { return {4, 8, 16, 32}; }

bool is_traceless_rank_one(const SymTensor& P, double tol) {
  const double norm = P.norm();
  if (norm == 0.0) return false;
  if (std::abs(P.trace()) > tol * norm) return false;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(to_matrix(P));
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const Eigen::Index n = ev.size();
  // sorted ascending: (-lambda, 0, ..., 0, lambda)
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (std::abs(ev[i]) > tol * norm) return false;
  }
  return std::abs(ev[0] + ev[n - 1]) <= tol * norm;
}

EnvelopeResult directional_envelopes(const MicroDensity& f, const SymTensor& P0, int samples,
                                     std::span<const int> windows,
                                     std::span<const double> t_multipliers, std::uint64_t seed) {
  if (!f.x_independent()) throw std::invalid_argument("directional envelopes need an x-independent density");
  if (P0.dim() != f.dim()) throw std::invalid_argument("direction dimension does not match density");
  if (!is_traceless_rank_one(P0)) throw std::invalid_argument("P0 must be a traceless symmetric rank-one matrix");
  if (samples < 0) throw std::invalid_argument("samples must be >= 0");
  if (windows.size() < 2) throw std::invalid_argument("need at least two windows");
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i] < 1 || (i > 0 && windows[i] <= windows[i - 1])) {
      throw std::invalid_argument("windows must be positive and strictly ascending");
    }
  }
  if (t_multipliers.empty()) throw std::invalid_argument("t multipliers must not be empty");
  for (double tau : t_multipliers) {
    if (!(tau > 1.0)) throw std::invalid_argument("t multipliers must exceed 1 so that t > k");
  }

  const int n = f.dim();
  std::mt19937_64 rng(seed);
  std::vector<SymTensor> dirs{P0 / P0.norm(), -P0 / P0.norm()};
  for (int i = 0; i < samples; ++i) dirs.push_back(random_unit_dev(n, rng));
  const double fractions[] = {0.0, 0.5, 0.999};
  const Point x0{};

  EnvelopeResult out;
  for (int k : windows) {
    EnvelopeWindow w{k, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const SymTensor& D : dirs) {
      for (double frac : fractions) {
        const SymTensor P = P0 + (frac / k) * D;
        for (double tau : t_multipliers) {
          const double t = k * tau;
          const double v = f(x0, t * P) / t;
          w.lower = std::min(w.lower, v);
          w.upper = std::max(w.upper, v);
        }
      }
    }
    out.windows.push_back(w);
  }
  // polynomial extrapolation in s = 1/k through the (up to) three finest windows
  const std::size_t used = std::min<std::size_t>(3, out.windows.size());
  const auto first = out.windows.end() - static_cast<std::ptrdiff_t>(used);
  auto extrapolate = [&](auto value) {
    double sum = 0.0;
    for (auto i = first; i != out.windows.end(); ++i) {
      double w = 1.0;
      for (auto j = first; j != out.windows.end(); ++j) {
        if (j == i) continue;
        const double si = 1.0 / i->k, sj = 1.0 / j->k;
        w *= sj / (sj - si);
      }
      sum += w * value(*i);
    }
    return sum;
  };
  out.lower = extrapolate([](const EnvelopeWindow& w) { return w.lower; });
  out.upper = extrapolate([](const EnvelopeWindow& w) { return w.upper; });
  return out;
}

std::vector<RankOneViolation> rank_one_scan(const MicroDensity& f, int samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  const int n = f.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<RankOneViolation> out;
  for (int s = 0; s < samples; ++s) {
    RankOneViolation v;
    for (int j = 0; j < n; ++j) v.x[static_cast<std::size_t>(j)] = unit(rng);
    const double scale = std::pow(10.0, 2.0 * unit(rng) - 1.0);
    Coords c{};
    for (std::size_t i = 0; i < sym_size(n); ++i) c[i] = scale * g(rng);
    v.X = SymTensor::from_coords(n, std::span(c.data(), sym_size(n)));
    v.a = random_unit(n, rng);
    v.b = random_unit(n, rng);
    v.t = std::pow(10.0, 3.0 * unit(rng) - 2.0);
    const SymTensor D = sym_dyad(std::span(v.a.data(), static_cast<std::size_t>(n)),
                                 std::span(v.b.data(), static_cast<std::size_t>(n)));
    const double mid = f(v.x, v.X);
    const double plus = f(v.x, v.X + v.t * D);
    const double minus = f(v.x, v.X - v.t * D);
    v.margin = mid - 0.5 * (plus + minus);
    if (v.margin > 1e-10 * (1.0 + std::abs(plus) + std::abs(minus))) out.push_back(v);
  }
  return out;
}

BkkResult bkk_check(const MatrixFunction& f, const Eigen::MatrixXd& X0, double r, int probes,
                    std::uint64_t seed) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be > 0");
  if (probes < 2) throw std::invalid_argument("need at least two probes");
  const Eigen::Index rows = X0.rows(), cols = X0.cols();
  const double dim = static_cast<double>(rows * cols);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Eigen::MatrixXd> pts;
  std::vector<double> vals;
  for (int i = 0; i < probes; ++i) {
    Eigen::MatrixXd d(rows, cols);
    for (Eigen::Index k = 0; k < d.size(); ++k) d.data()[k] = g(rng);
    d *= r * std::pow(unit(rng), 1.0 / dim) / std::max(d.norm(), 1e-300);
    pts.push_back(X0 + d);
    vals.push_back(f(pts.back()));
  }

  BkkResult out;
  std::size_t bi = 0, bj = 1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dist = (pts[i] - pts[j]).norm();
      if (dist <= 0.0) continue;
      const double q = std::abs(vals[i] - vals[j]) / dist;
      if (q > out.lip_est) {
        out.lip_est = q;
        bi = i;
        bj = j;
      }
    }
  }

  double lo = *std::min_element(vals.begin(), vals.end());
  double hi = *std::max_element(vals.begin(), vals.end());
  auto probe = [&](const Eigen::MatrixXd& Z) {
    const double v = f(Z);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (Eigen::Index k = 0; k < X0.size(); ++k) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, cols);
    e.data()[k] = 2.0 * r;
    probe(X0 + e);
    probe(X0 - e);
  }
  // where the line through the steepest pair leaves B_2r(X0)
  const Eigen::MatrixXd dir = (pts[bj] - pts[bi]) / std::max((pts[bj] - pts[bi]).norm(), 1e-300);
  const Eigen::MatrixXd y = pts[bi] - X0;
  const double b = (y.array() * dir.array()).sum();
  const double disc = b * b - (y.squaredNorm() - 4.0 * r * r);
  if (disc >= 0.0) {
    probe(pts[bi] + (-b + std::sqrt(disc)) * dir);
    probe(pts[bi] + (-b - std::sqrt(disc)) * dir);
  }
  out.bound = std::sqrt(dim) * (hi - lo) / r;
  out.ok = out.lip_est <= out.bound + 1e-9;
  return out;
}

}  // namespace hencky
