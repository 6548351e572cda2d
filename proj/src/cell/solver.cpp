#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hencky/cell.hpp"
#include "hencky/optimize.hpp"

namespace hencky {

double assemble_energy(const MicroDensity& f, const SymTensor& X, const DisplacementField& phi,
                       double eps) {
  if (f.dim() != phi.dim() || X.dim() != phi.dim()) {
    throw std::invalid_argument("density, strain and field dimensions differ");
  }
  const StrainField E = discrete_sym_gradient(phi);
  double sum = 0.0;
  for (std::size_t c = 0; c < E.size(); ++c) {
    sum += f.smoothed(cell_centroid(phi.dim(), phi.spec(), c), X + E[c], eps);
  }
  return sum / static_cast<double>(E.size());
}

SymTensor mean_stress(const MicroDensity& f, const SymTensor& X, const DisplacementField& phi,
                      double eps) {
  const StrainField E = discrete_sym_gradient(phi);
  SymTensor s(phi.dim());
  for (std::size_t c = 0; c < E.size(); ++c) {
    s += f.gradient(cell_centroid(phi.dim(), phi.spec(), c), X + E[c], eps);
  }
  return s / static_cast<double>(E.size());
}

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");
  if (max_iters < 1) throw std::invalid_argument("solver max_iters must be >= 1");
  if (restarts < 1) throw std::invalid_argument("solver restarts must be >= 1");
  if (!(smoothing >= 0.0)) throw std::invalid_argument("solver smoothing must be >= 0");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("solver noise_scale must be >= 0");
}

namespace {

/// Discrete cell energy over the free degrees of freedom, scaled by (cell count) h
/// so that gradient entries are in stress units.
class CellEnergy {
 public:
  CellEnergy(const MicroDensity& f, const SymTensor& X, const CellSpec& spec,
             const SolverConfig& cfg)
      : f_(f), X_(X), cfg_(cfg), work_(f.dim(), spec), dofs_(work_.free_dofs()) {
    for (std::size_t c = 0; c < work_.cell_count(); ++c) {
      centroids_.push_back(cell_centroid(f.dim(), spec, c));
    }
    scale_ = spec.h();
    stress_.assign(work_.cell_count(), SymTensor(f.dim()));
    adjoint_.assign(work_.values().size(), 0.0);
  }

  std::size_t size() const { return dofs_.size(); }
  void set_smoothing(double eps) { eps_ = eps; }
  double scale() const { return scale_ * static_cast<double>(centroids_.size()); }

  std::vector<double> gather(const DisplacementField& phi) const {
    std::vector<double> x(dofs_.size());
    for (std::size_t i = 0; i < dofs_.size(); ++i) x[i] = phi.values()[dofs_[i]];
    return x;
  }

  DisplacementField scatter(std::span<const double> x) const {
    DisplacementField phi(work_.dim(), work_.spec());
    for (std::size_t i = 0; i < dofs_.size(); ++i) phi.values()[dofs_[i]] = x[i];
    return phi;
  }

  double operator()(std::span<const double> x, std::span<double> g) {
    auto vals = work_.values();
    for (std::size_t i = 0; i < dofs_.size(); ++i) vals[dofs_[i]] = x[i];
    const StrainField E = discrete_sym_gradient(work_);
    double sum = 0.0;
    for (std::size_t c = 0; c < E.size(); ++c) {
      const SymTensor Xc = X_ + E[c];
      sum += f_.smoothed(centroids_[c], Xc, eps_);
      if (!g.empty()) stress_[c] = f_.gradient(centroids_[c], Xc, eps_, cfg_.gradient);
    }
    if (!g.empty()) {
      sym_gradient_adjoint(work_.dim(), work_.spec(), stress_, adjoint_);
      for (std::size_t i = 0; i < dofs_.size(); ++i) g[i] = scale_ * adjoint_[dofs_[i]];
    }
    return scale_ * sum;
  }

  double gradient_max_norm(std::span<const double> x) {
    std::vector<double> g(x.size());
    (*this)(x, g);
    double m = 0.0;
    for (double v : g) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  const MicroDensity& f_;
  SymTensor X_;
  SolverConfig cfg_;
  DisplacementField work_;
  std::vector<std::size_t> dofs_;
  std::vector<Point> centroids_;
  StrainField stress_;
  std::vector<double> adjoint_;
  double scale_ = 1.0;
  double eps_ = 0.0;
};

DisplacementField random_start(int dim, const CellSpec& spec, double amplitude,
                               std::mt19937_64& rng) {
  DisplacementField phi(dim, spec);
  std::normal_distribution<double> noise(0.0, amplitude);
  for (double& v : phi.values()) v = noise(rng);
  phi.enforce_boundary();

  // one Jacobi averaging pass over the 2n grid neighbours
  const int N = spec.nodes_per_side();
  const auto d = static_cast<std::size_t>(dim);
  DisplacementField smooth(dim, spec);
  for (std::size_t node = 0; node < phi.node_count(); ++node) {
    std::size_t stride = 1;
    std::size_t rest = node;
    for (int j = 0; j < dim; ++j) {
      const int c = static_cast<int>(rest % static_cast<std::size_t>(N));
      rest /= static_cast<std::size_t>(N);
      const std::size_t up = node + (static_cast<std::size_t>((c + 1) % N) - static_cast<std::size_t>(c)) * stride;
      const std::size_t down =
          node + (static_cast<std::size_t>((c + N - 1) % N) - static_cast<std::size_t>(c)) * stride;
      for (std::size_t i = 0; i < d; ++i) {
        smooth.values()[node * d + i] +=
            (phi.values()[up * d + i] + phi.values()[down * d + i]) / (2.0 * dim);
      }
      stride *= static_cast<std::size_t>(N);
    }
  }
  smooth.enforce_boundary();
  return smooth;
}

struct StartOutcome {
  std::vector<double> x;
  double exact = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool hit_max_iters = false;
  bool stalled = false;
  std::vector<double> history;
};

/// Smoothing radii used in turn: 1e-2, 1e-4, ... down to the configured value.
std::vector<double> smoothing_stages(double target) {
  std::vector<double> stages;
  for (double e = 1e-2; e > target * 1.5; e *= 1e-2) stages.push_back(e);
  stages.push_back(target);
  return stages;
}

StartOutcome run_start(CellEnergy& energy, std::vector<double> x, const SolverConfig& cfg) {
  StartOutcome out;
  Objective obj = [&energy](std::span<const double> v, std::span<double> g) { return energy(v, g); };
  LbfgsOptions opts;
  opts.function_tolerance = 1e-16;
  opts.parameter_tolerance = 1e-16;
  opts.record_history = true;

  if (x.empty()) {
    std::vector<double> none;
    out.history.push_back(energy(x, none) / energy.scale());
    out.converged = true;
    out.x = std::move(x);
    return out;
  }

  const auto stages = smoothing_stages(cfg.smoothing);
  int remaining = cfg.max_iters;
  for (std::size_t stage = 0; stage < stages.size(); ++stage) {
    const bool last = stage + 1 == stages.size();
    energy.set_smoothing(stages[stage]);
    const double tol = last ? cfg.tolerance : std::max(cfg.tolerance, stages[stage]);
    opts.gradient_tolerance = tol;
    if (!last && energy.gradient_max_norm(x) <= tol) continue;
    int budget = last ? remaining : std::min(remaining, cfg.max_iters / static_cast<int>(2 * stages.size()));
    double previous = std::numeric_limits<double>::infinity();
    // L-BFGS memory is reset between rounds; a round without decrease means the
    // line search has reached the rounding floor of the energy.
    for (int round = 0; round < 50 && budget > 0; ++round) {
      opts.max_iters = budget;
      const LbfgsOutcome r = minimize_lbfgs(obj, x, opts);
      out.iterations += r.iterations;
      remaining -= r.iterations;
      budget -= r.iterations;
      for (double c : r.history) out.history.push_back(c / energy.scale());
      if (r.hit_max_iters || energy.gradient_max_norm(x) <= tol) break;
      if (!(r.cost < previous - 1e-15 * std::abs(previous))) break;
      previous = r.cost;
    }
  }
  out.gradient_norm = energy.gradient_max_norm(x);
  out.converged = out.gradient_norm <= cfg.tolerance;
  out.hit_max_iters = !out.converged && remaining <= 0;
  out.stalled = !out.converged && !out.hit_max_iters;
  out.x = std::move(x);
  return out;
}

}  // namespace

HomResult minimize_cell(const MicroDensity& f, const SymTensor& X, const CellSpec& spec,
                        const SolverConfig& cfg, std::span<const DisplacementField> warm_starts) {
  spec.validate();
  cfg.validate();
  if (X.dim() != f.dim()) throw std::invalid_argument("strain dimension does not match density");

  CellEnergy energy(f, X, spec, cfg);
  std::vector<std::vector<double>> starts;
  for (const auto& w : warm_starts) {
    if (w.dim() != f.dim() || w.spec().k != spec.k || w.spec().m != spec.m ||
        w.spec().boundary != spec.boundary) {
      throw std::invalid_argument("warm start does not match the cell specification");
    }
    starts.push_back(energy.gather(w));
  }
  starts.emplace_back(energy.size(), 0.0);
  std::mt19937_64 rng(cfg.seed);
  const double amplitude = cfg.noise_scale * std::max(X.norm(), 1.0) * spec.h();
  for (int r = 1; r < cfg.restarts; ++r) {
    starts.push_back(energy.gather(random_start(f.dim(), spec, amplitude, rng)));
  }

  HomResult best;
  best.X = X;
  best.spec = spec;
  best.h = spec.h();
  best.value = std::numeric_limits<double>::infinity();
  for (auto& start : starts) {
    StartOutcome s = run_start(energy, std::move(start), cfg);
    DisplacementField phi = energy.scatter(s.x);
    const double exact = assemble_energy(f, X, phi);
    if (!std::isfinite(exact)) throw NonFiniteEnergy("exact cell energy is not finite");
    if (exact < best.value) {
      best.value = exact;
      best.gradient_norm = s.gradient_norm;
      best.energy_history = std::move(s.history);
      best.iterations = s.iterations;
      best.converged = s.converged;
      best.hit_max_iters = s.hit_max_iters;
      best.stalled = s.stalled;
      best.minimizer = std::move(phi);
    }
  }
  best.restarts_used = static_cast<int>(starts.size());
  return best;
}

HomogenizeResult homogenize(const MicroDensity& f, const SymTensor& X, std::span<const int> k_list,
                            const CellSpec& base, const SolverConfig& cfg) {
  if (k_list.empty()) throw std::invalid_argument("k_list must not be empty");
  for (std::size_t i = 1; i < k_list.size(); ++i) {
    if (k_list[i] <= k_list[i - 1]) throw std::invalid_argument("k_list must be strictly ascending");
  }
  HomogenizeResult out;
  out.estimate = std::numeric_limits<double>::infinity();
  for (int k : k_list) {
    CellSpec spec = base;
    spec.k = k;
    out.per_k.push_back(minimize_cell(f, X, spec, cfg));
    out.estimate = std::min(out.estimate, out.per_k.back().value);
  }
  return out;
}

}  // namespace hencky
