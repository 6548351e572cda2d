#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "hencky/cli.hpp"

namespace hencky {

namespace {

/// Upper-triangle column names, e.g. X11, X12, X22.
std::vector<std::string> entry_names(const std::string& prefix, int dim) {
  std::vector<std::string> out;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) out.push_back(prefix + std::to_string(i + 1) + std::to_string(j + 1));
  }
  return out;
}

void append_entries(std::vector<std::string>& row, const SymTensor& X) {
  for (double v : X.upper()) row.push_back(format_double(v));
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string bool_cell(bool b) { return b ? "true" : "false"; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Smooth stream function vanishing with its gradient on the boundary of [0, k]^2.
GridField solenoidal_field(int dim, const CellSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  const double a = g(rng), b = g(rng), c = g(rng);
  const double L = spec.k;
  constexpr double pi = std::numbers::pi;
  GridField u(dim, spec, true);
  const int S = u.side();
  const double h = spec.h();
  // psi sampled at nodes; u = (D2- psi, -D1- psi) is divergence-free for the backward-difference divergence
  auto psi = [&](int i, int j) {
    if (i <= 1 || j <= 1 || i >= S - 2 || j >= S - 2) return 0.0;
    const double x = i * h / L, y = j * h / L;
    return (a * std::sin(pi * x) * std::sin(pi * y) + b * std::sin(2 * pi * x) * std::sin(pi * y) +
            c * std::sin(pi * x) * std::sin(3 * pi * y));
  };
  for (std::size_t n = 0; n < u.node_count(); ++n) {
    const int i = static_cast<int>(n % static_cast<std::size_t>(S));
    const int j = static_cast<int>((n / static_cast<std::size_t>(S)) % static_cast<std::size_t>(S));
    if (dim == 3) {
      const int l = static_cast<int>(n / static_cast<std::size_t>(S * S));
      if (l == 0 || l == S - 1) continue;
    }
    u.at(n, 0) = j > 0 ? (psi(i, j) - psi(i, j - 1)) / h : 0.0;
    u.at(n, 1) = i > 0 ? -(psi(i, j) - psi(i - 1, j)) / h : 0.0;
  }
  return u;
}

GridField gradient_field(int dim, const CellSpec& spec, std::uint64_t seed) {
  const GridField probe(dim, spec, true);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  NodalScalar phi(probe.node_count(), 0.0);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const double v = g(rng);
    if (!probe.on_boundary(n)) phi[n] = v;
  }
  return nodal_gradient(phi, dim, spec);
}

GridField random_field(int dim, const CellSpec& spec, std::uint64_t seed) {
  GridField u(dim, spec, false);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& v : u.values()) v = g(rng);
  return u;
}

double l2_norm(const GridField& u) {
  double s = 0.0;
  for (double v : u.values()) s += v * v;
  return std::sqrt(s * std::pow(u.h(), u.dim()));
}

}  // namespace

GridField make_test_field(const FieldConfig& field, int dim, const CellSpec& spec) {
  if (field.kind == "gradient") return gradient_field(dim, spec, field.seed);
  if (field.kind == "solenoidal") return solenoidal_field(dim, spec, field.seed);
  if (field.kind == "random") return random_field(dim, spec, field.seed);
  throw std::invalid_argument("unknown field kind '" + field.kind + "'");
}

CommandOutput cmd_homogenize(const RunConfig& cfg, const CommandOptions& opt) {
  const MicroDensity f = cfg.make_density();
  struct Job {
    std::size_t strain;
    int k;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.strains.size(); ++s) {
    for (int k : cfg.k_list) jobs.push_back({s, k});
  }
  const auto rows = run_jobs<std::vector<std::string>>(jobs.size(), opt.jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const SymTensor& X = cfg.strains[jobs[i].strain];
    const HomResult r = minimize_cell(f, X, CellSpec{jobs[i].k, cfg.m, cfg.boundary}, cfg.solver);
    const double elapsed = opt.timing ? seconds_since(start) : 0.0;
    std::vector<std::string> row{cfg.density.name, std::to_string(cfg.dim)};
    append_entries(row, X);
    for (const auto& cell : {std::to_string(jobs[i].k), std::to_string(cfg.m), format_double(r.value),
                             format_double(r.gradient_norm), std::to_string(r.restarts_used), format_double(elapsed)}) {
      row.push_back(cell);
    }
    return row;
  });
  CommandOutput out;
  out.table.header = concat(concat({"density", "n"}, entry_names("X", cfg.dim)),
                            {"k", "m", "value", "grad_norm", "restarts_used", "seconds"});
  out.table.rows = rows;
  const std::size_t value_col = 2 + sym_size(cfg.dim) + 2;
  for (std::size_t s = 0; s < cfg.strains.size(); ++s) {
    Series series{"homogenize_X" + std::to_string(s), {}};
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].strain == s) series.points.emplace_back(jobs[j].k, std::stod(rows[j][value_col]));
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

CommandOutput cmd_sweep(const RunConfig& cfg, const CommandOptions& opt) {
  const MicroDensity f = cfg.make_density();
  const auto tables = run_jobs<SweepTable>(cfg.strains.size(), opt.jobs, [&](std::size_t i) {
    return delta_sweep(f, cfg.strains[i], cfg.deltas, cfg.setup(), cfg.solver);
  });
  CommandOutput out;
  out.table.header = concat(concat({"row_type"}, entry_names("X", cfg.dim)), {"delta", "value", "monotone_ok", "limit_gap"});
  for (std::size_t s = 0; s < tables.size(); ++s) {
    const SweepTable& t = tables[s];
    Series series{"sweep_X" + std::to_string(s), {}};
    for (std::size_t j = 0; j < t.deltas.size(); ++j) {
      std::vector<std::string> row{"data"};
      append_entries(row, t.X);
      row.insert(row.end(), {format_double(t.deltas[j]), format_double(t.values[j]), "", ""});
      out.table.rows.push_back(std::move(row));
      series.points.emplace_back(t.deltas[j], t.values[j]);
    }
    std::vector<std::string> summary{"summary"};
    append_entries(summary, t.X);
    summary.insert(summary.end(), {"", "", bool_cell(t.monotone_ok), format_double(t.limit_gap)});
    out.table.rows.push_back(std::move(summary));
    out.series.push_back(std::move(series));
  }
  return out;
}

CommandOutput cmd_recession(const RunConfig& cfg, const CommandOptions& opt) {
  const MicroDensity f = cfg.make_density();
  const auto results = run_jobs<RecessionResult>(cfg.directions.size(), opt.jobs, [&](std::size_t i) {
    return recession_of_hom(f, cfg.directions[i], cfg.t_schedule, cfg.setup(), cfg.solver);
  });
  CommandOutput out;
  out.table.header = concat(entry_names("P", cfg.dim), {"t", "value", "extrapolated"});
  for (std::size_t d = 0; d < results.size(); ++d) {
    const RecessionResult& r = results[d];
    Series series{"recession_P" + std::to_string(d), {}};
    for (std::size_t j = 0; j < r.t.size(); ++j) {
      std::vector<std::string> row;
      append_entries(row, r.P);
      row.insert(row.end(), {format_double(r.t[j]), format_double(r.ratios[j]), format_double(r.estimate.value)});
      out.table.rows.push_back(std::move(row));
      series.points.emplace_back(r.t[j], r.ratios[j]);
    }
    out.series.push_back(std::move(series));
  }
  return out;
}

CommandOutput cmd_dual(const RunConfig& cfg, const CommandOptions& opt) {
  const MicroDensity f = cfg.make_density();
  const auto results = run_jobs<DualResult>(cfg.stresses.size(), opt.jobs, [&](std::size_t i) {
    return dual_cell(f, cfg.stresses[i], cfg.cell_spec(), cfg.solver);
  });
  CommandOutput out;
  out.table.header = concat(entry_names("Y", cfg.dim), {"value", "feasible"});
  for (const DualResult& r : results) {
    std::vector<std::string> row;
    append_entries(row, r.Y);
    row.insert(row.end(), {format_double(r.value), bool_cell(r.feasible)});
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

CommandOutput cmd_decompose(const RunConfig& cfg, const CommandOptions& opt) {
  const CellSpec spec{1, cfg.m, Boundary::dirichlet};
  const auto rows = run_jobs<std::vector<std::string>>(cfg.fields.size(), opt.jobs, [&](std::size_t i) {
    const GridField u = make_test_field(cfg.fields[i], cfg.dim, spec);
    const HelmholtzResult r = helmholtz_decompose(u);
    return std::vector<std::string>{std::to_string(i), cfg.fields[i].kind, format_double(r.div_residual),
                                    format_double(r.orthogonality), format_double(l2_norm(r.v))};
  });
  CommandOutput out;
  out.table.header = {"field_id", "kind", "div_residual", "orthogonality", "v_norm"};
  out.table.rows = rows;
  return out;
}

}  // namespace hencky
