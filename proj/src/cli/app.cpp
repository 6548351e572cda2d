#include <CLI11.hpp>

#include <filesystem>
#include <ostream>

#include "hencky/cli.hpp"

namespace hencky {

namespace {

std::string series_text(const Series& s) {
  std::string text = "# x y\n";
  for (const auto& [x, y] : s.points) text += format_double(x) + " " + format_double(y) + "\n";
  return text;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Periodic homogenization of Hencky-type energy densities"};
  app.name("hencky");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool plot_data = false;
  bool timing = false;
  app.add_option("--config", config_path, "JSON run configuration (defaults apply when omitted)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--seed", seed, "solver seed (overrides solver.seed)");
  app.add_flag("--plot-data", plot_data, "also write (x, y) series files under <out>/plot");
  app.add_flag("--timing", timing, "fill the seconds column of homogenize with wall-clock times");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"homogenize", "cell-problem minimum for every strain and k"},
      {"sweep", "hardening sweep delta -> 0 for every strain"},
      {"recession", "asymptotic function of the homogenized density along each direction"},
      {"dual", "dual cell value for every stress"},
      {"verify", "run the invariant suite and report each property"},
      {"decompose", "Helmholtz decomposition of the configured test fields"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = config_path.empty() ? default_config() : load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  if (seed) cfg.solver.seed = *seed;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const CommandOptions opt{jobs, timing};

  try {
    if (command == "verify") {
      const VerifyReport report = cmd_verify(cfg, opt);
      const std::string text = report.render();
      out << text;
      write_text((std::filesystem::path(cfg.output_dir) / "verify.txt").string(), text);
      return report.ok() ? 0 : 1;
    }
    CommandOutput result;
    if (command == "homogenize") result = cmd_homogenize(cfg, opt);
    if (command == "sweep") result = cmd_sweep(cfg, opt);
    if (command == "recession") result = cmd_recession(cfg, opt);
    if (command == "dual") result = cmd_dual(cfg, opt);
    if (command == "decompose") result = cmd_decompose(cfg, opt);
    const std::filesystem::path dir(cfg.output_dir);
    const std::string csv_path = (dir / (command + ".csv")).string();
    write_text(csv_path, to_csv(result.table));
    out << "wrote " << csv_path << " (" << result.table.rows.size() << " rows)\n";
    if (plot_data) {
      for (const Series& s : result.series) {
        const std::string path = (dir / "plot" / (s.name + ".dat")).string();
        write_text(path, series_text(s));
        out << "wrote " << path << "\n";
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hencky
