#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hencky/analysis.hpp"
#include "hencky/kernels.hpp"

namespace hencky {

/// Malformed or inconsistent configuration; `field` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }  ///< 0 when the field is absent from the text

 private:
  std::string field_;
  int line_;
};

struct DensityConfig {
  std::string name;
  std::vector<double> params;
  std::optional<double> alpha;
  std::optional<double> beta;
};

/// Test field for the decompose command.
struct FieldConfig {
  std::string kind;  ///< "gradient", "solenoidal" or "random"
  std::uint64_t seed = 0;
};

struct VerifyConfig {
  int samples = 10000;    ///< growth, Lipschitz and BKK instances each
  int dual_points = 10;   ///< size of the X and Y panels of the Fenchel check
};

struct RunConfig {
  DensityConfig density;
  int dim = 2;
  std::vector<SymTensor> strains;
  std::vector<int> k_list{1};
  int m = 8;
  Boundary boundary = Boundary::dirichlet;
  std::vector<double> deltas;
  std::vector<double> t_schedule;
  std::vector<SymTensor> directions;
  std::vector<SymTensor> stresses;
  std::vector<FieldConfig> fields;
  SolverConfig solver;
  std::string output_dir = "out";
  VerifyConfig verify;

  MicroDensity make_density() const;
  CellSpec cell_spec() const { return CellSpec{1, m, boundary}; }
  HomSetup setup() const { return HomSetup{cell_spec(), k_list}; }
};

/// Parses the JSON config text. Absent optional fields take the documented defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Configuration used when no --config is given.
RunConfig default_config();

/// A CSV table whose cells are already rendered as text.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  bool operator==(const Table&) const = default;
};

/// Fixed 17-significant-digit rendering.
std::string format_double(double v);
std::string to_csv(const Table& t);
Table parse_csv(const std::string& text);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Runs job(i) for i in [0, count) on at most `workers` threads; results keep job order.
template <typename T>
std::vector<T> run_jobs(std::size_t count, int workers, const std::function<T(std::size_t)>& job);

struct CommandOptions {
  int jobs = 1;
  bool timing = false;
};

/// (x, y) series emitted with --plot-data, one per curve.
struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct CommandOutput {
  Table table;
  std::vector<Series> series;
};

CommandOutput cmd_homogenize(const RunConfig& cfg, const CommandOptions& opt);
CommandOutput cmd_sweep(const RunConfig& cfg, const CommandOptions& opt);
CommandOutput cmd_recession(const RunConfig& cfg, const CommandOptions& opt);
CommandOutput cmd_dual(const RunConfig& cfg, const CommandOptions& opt);
CommandOutput cmd_decompose(const RunConfig& cfg, const CommandOptions& opt);

struct PropertyResult {
  std::string name;
  int samples = 0;
  double worst_margin = 0.0;  ///< >= 0 when the property holds
  bool ok = true;
  bool skipped = false;
  std::string witness;  ///< JSON description of the first failure
};

struct VerifyReport {
  std::vector<PropertyResult> properties;
  bool ok() const;
  std::string render() const;
};

VerifyReport cmd_verify(const RunConfig& cfg, const CommandOptions& opt);

/// Seeded test field for decompose: a discrete gradient, a discretely divergence-free field, or noise.
GridField make_test_field(const FieldConfig& field, int dim, const CellSpec& spec);

/// Both growth inequalities at `samples` random (x, X).
PropertyResult verify_growth(const MicroDensity& f, int samples, std::uint64_t seed);
/// Trace-Lipschitz bound at random traceless P, kappa, M and admissible rho (convex densities).
PropertyResult verify_lipschitz(const MicroDensity& f, int samples, std::uint64_t seed);
/// BKK bound for X -> f(x, sym X) at random centres and radii (convex densities).
PropertyResult verify_bkk(const MicroDensity& f, int samples, std::uint64_t seed);
/// Midpoint convexity along rank-one lines (densities declared convex).
PropertyResult verify_rank_one(const MicroDensity& f, int samples, std::uint64_t seed);

struct FenchelSummary {
  PropertyResult inequality;  ///< f_hom(X) + (c_hom)*(Y) >= X : Y on all pairs
  PropertyResult gap;         ///< relative gap at the best panel Y for each X, <= 3%
};

/**
 * Fenchel check on an X panel of `points` strains and the Y panel of their mean
 * minimizer stresses (convex densities only).
 */
FenchelSummary verify_fenchel(const MicroDensity& f, int points, const CellSpec& spec,
                              const SolverConfig& solver, int jobs);

/// Bogovskii, Helmholtz, rigid-projection and J_r contracts on fixed grids.
std::vector<PropertyResult> verify_kernels();

/// Full command-line entry point; returns the process exit code (0, 1 or 2).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hencky

#include "hencky/detail/run_jobs.hpp"
