#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "hencky/analysis.hpp"

namespace hencky {

double SweepTable::relative_gap() const {
  if (values.empty()) return 0.0;
  return limit_gap / std::max(std::abs(values.back()), 1e-300);
}

std::vector<double> default_deltas(double first, double last) {
  if (!(first > 0.0) || !(last > 0.0) || last > first) throw std::invalid_argument("invalid delta range");
  std::vector<double> out;
  for (double d = first; d >= last * (1.0 - 1e-12); d /= 10.0) out.push_back(d);
  out.push_back(0.0);
  return out;
}

namespace {

void validate_setup(const HomSetup& setup) {
  setup.base.validate();
  if (setup.k_list.empty()) throw std::invalid_argument("k_list must not be empty");
  for (std::size_t i = 0; i < setup.k_list.size(); ++i) {
    if (setup.k_list[i] < 1 || (i > 0 && setup.k_list[i] <= setup.k_list[i - 1])) {
      throw std::invalid_argument("k_list must be positive and strictly ascending");
    }
  }
}

CellSpec spec_for(const HomSetup& setup, int k) {
  CellSpec s = setup.base;
  s.k = k;
  return s;
}

/// Minimum over k of minimize_cell, warm-starting each k from `warm[k]` when present.
double hom_with_warm(const MicroDensity& f, const SymTensor& X, const HomSetup& setup,
                     const SolverConfig& cfg, std::vector<std::vector<DisplacementField>>& warm) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < setup.k_list.size(); ++i) {
    HomResult r = minimize_cell(f, X, spec_for(setup, setup.k_list[i]), cfg, warm[i]);
    best = std::min(best, r.value);
    warm[i].assign(1, std::move(r.minimizer));
  }
  return best;
}

}  // namespace

SweepTable delta_sweep(const MicroDensity& f, const SymTensor& X, std::span<const double> deltas,
                       const HomSetup& setup, const SolverConfig& cfg) {
  validate_setup(setup);
  cfg.validate();
  if (deltas.empty() || deltas.back() != 0.0) throw std::invalid_argument("deltas must end at 0");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0) || (i > 0 && !(deltas[i] < deltas[i - 1]))) {
      throw std::invalid_argument("deltas must be non-negative and strictly descending");
    }
  }

  SweepTable table;
  table.X = X;
  table.deltas.assign(deltas.begin(), deltas.end());
  std::vector<std::vector<DisplacementField>> warm(setup.k_list.size());
  for (double delta : deltas) {
    table.values.push_back(hom_with_warm(harden(f, delta), X, setup, cfg, warm));
  }
  table.monotone_ok = true;
  for (std::size_t i = 1; i < table.values.size(); ++i) {
    if (table.values[i] > table.values[i - 1] + 2.0 * cfg.tolerance) table.monotone_ok = false;
  }
  const std::size_t n = table.values.size();
  table.limit_gap = n >= 2 ? table.values[n - 2] - table.values[n - 1] : 0.0;
  return table;
}

RecessionResult recession_of_hom(const MicroDensity& f, const SymTensor& P,
                                 std::span<const double> t_schedule, const HomSetup& setup,
                                 const SolverConfig& cfg) {
  validate_setup(setup);
  cfg.validate();
  if (P.dim() != f.dim()) throw std::invalid_argument("direction dimension does not match density");
  if (std::abs(P.trace()) > 1e-12 * (1.0 + P.norm())) {
    throw std::invalid_argument("recession direction must be traceless");
  }
  RecessionResult out;
  out.P = P;
  out.t.assign(t_schedule.begin(), t_schedule.end());
  std::vector<std::vector<DisplacementField>> warm(setup.k_list.size());
  double previous_t = 0.0;
  for (double t : t_schedule) {
    if (!(t > previous_t)) throw std::invalid_argument("t schedule must be positive and increasing");
    // minimizers along the ray scale roughly linearly in t
    for (auto& w : warm) {
      for (auto& phi : w) {
        for (double& v : phi.values()) v *= t / previous_t;
      }
    }
    out.ratios.push_back(hom_with_warm(f, t * P, setup, cfg, warm) / t);
    previous_t = t;
  }
  out.estimate = extrapolate_ray(out.t, out.ratios);
  return out;
}

std::vector<SymTensor> strain_panel(int dim, int count, std::uint64_t seed, double scale) {
  require_dim(dim);
  if (count < 1) throw std::invalid_argument("panel size must be >= 1");
  std::vector<SymTensor> panel;
  panel.push_back(SymTensor::zero(dim));
  panel.push_back(scale * SymTensor::identity(dim));
  const std::array<double, 3> e1{1, 0, 0}, e2{0, 1, 0};
  panel.push_back(scale * sym_dyad(std::span(e1.data(), static_cast<std::size_t>(dim)),
                                   std::span(e2.data(), static_cast<std::size_t>(dim))));
  panel.push_back(scale * sym_dyad(std::span(e1.data(), static_cast<std::size_t>(dim)),
                                   std::span(e1.data(), static_cast<std::size_t>(dim))));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  while (static_cast<int>(panel.size()) < count) {
    std::array<double, kMaxSymSize> c{};
    for (std::size_t i = 0; i < sym_size(dim); ++i) c[i] = g(rng);
    panel.push_back(SymTensor::from_coords(dim, std::span(c.data(), sym_size(dim))));
  }
  panel.resize(static_cast<std::size_t>(count));
  return panel;
}

}  // namespace hencky
