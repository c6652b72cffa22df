// Command-line entry point.
//
//   efftemp ed          build or load the exact spectrum
//   efftemp train       one training run
//   efftemp ites-sweep  one run per beta on a grid, plus beta* detection
//   efftemp report      consolidate run directories
//   efftemp gradcheck   reverse-mode vs finite-difference gradients
//
// Exit codes: 0 ok, 2 invalid input, 3 numerical failure, 4 integrity failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "efftemp/errors.hpp"
#include "efftemp/experiment.hpp"
#include "efftemp/io.hpp"

namespace {

namespace fs = std::filesystem;
using efftemp::io::format_double;
using nlohmann::json;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIntegrity = 4;

struct CommonOptions {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_out_default) {
  cmd->add_option("--config", o.config, "Experiment configuration file (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "Named preset merged under the config file");
  cmd->add_option("--seed", o.seed, "Override run.seed");
  cmd->add_option("--out", o.out, with_out_default ? "Output directory (overrides run.out)" : "Output directory");
}

efftemp::config::ExperimentConfig resolve(const CommonOptions& o, bool out_is_run_dir) {
  json overrides = json::object();
  if (o.seed) overrides["run"]["seed"] = *o.seed;
  if (out_is_run_dir && !o.out.empty()) overrides["run"]["out"] = o.out;
  return efftemp::config::resolve(o.preset.empty() ? std::nullopt : std::optional<std::string>(o.preset),
                                  o.config.empty() ? std::nullopt : std::optional<fs::path>(o.config), overrides);
}

std::string fit_text(const std::optional<efftemp::spectral::FitResult>& fit) {
  if (!fit) return "beta_tilde=n/a";
  return "beta_tilde=" + format_double(fit->beta_tilde) + " lambda=" + format_double(fit->lambda) +
         " r2=" + format_double(fit->r_squared);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective-temperature analysis of variational quantum states"};
  app.require_subcommand(1);

  CommonOptions ed_opts, train_opts, sweep_opts, grad_opts;
  int jobs = 1;
  std::vector<std::string> report_dirs;
  std::string report_out;

  auto* ed = app.add_subcommand("ed", "Exact diagonalization into the spectrum cache");
  add_common(ed, ed_opts, false);
  auto* train = app.add_subcommand("train", "Train one ansatz and record its effective temperature");
  add_common(train, train_opts, true);
  auto* sweep = app.add_subcommand("ites-sweep", "Train against imaginary-time evolved targets over a beta grid");
  add_common(sweep, sweep_opts, true);
  sweep->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  auto* report = app.add_subcommand("report", "Consolidate run and sweep directories");
  report->add_option("dirs", report_dirs, "Run or sweep directories")->required();
  report->add_option("--out", report_out, "Report directory")->required();
  auto* grad = app.add_subcommand("gradcheck", "Compare gradients with central finite differences");
  add_common(grad, grad_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  const fs::path cache_dir = efftemp::experiment::default_cache_dir();
  try {
    if (*ed) {
      const auto cfg = resolve(ed_opts, false);
      const auto r = efftemp::experiment::cmd_ed(
          cfg, cache_dir, ed_opts.out.empty() ? std::nullopt : std::optional<fs::path>(ed_opts.out));
      std::cout << (r.cache_hit ? "cache hit " : "computed ") << r.cache_file.string() << '\n'
                << "eigenpairs=" << r.eigenpairs << " sectors=" << r.sectors
                << " ground_energy=" << format_double(r.ground_energy) << '\n';
      return 0;
    }
    if (*train) {
      const auto cfg = resolve(train_opts, true);
      const auto r = efftemp::experiment::cmd_train(cfg, cache_dir);
      if (!r.records.empty()) {
        const auto& last = r.records.back();
        std::cout << r.dir.string() << ": step=" << last.step << " loss=" << format_double(last.loss)
                  << " infidelity=" << format_double(last.infidelity) << ' ' << fit_text(last.fit) << '\n';
      }
      if (r.status != efftemp::optimize::TrainStatus::Completed) {
        std::cerr << "run stopped early: " << r.message << " (partial outputs kept)\n";
        return kExitNumerical;
      }
      return 0;
    }
    if (*sweep) {
      const auto cfg = resolve(sweep_opts, true);
      const auto r = efftemp::experiment::cmd_ites_sweep(cfg, cache_dir, jobs);
      bool failed = false;
      for (const auto& p : r.points) {
        std::cout << "beta=" << format_double(p.beta) << ' ' << fit_text(p.fit)
                  << " infidelity=" << format_double(p.infidelity) << (p.ok ? "" : " FAILED: " + p.message) << '\n';
        failed = failed || !p.ok;
      }
      std::cout << "beta_star=" << (r.beta_star ? format_double(*r.beta_star) : std::string("none")) << '\n';
      return failed ? kExitNumerical : 0;
    }
    if (*report) {
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      const auto j = efftemp::experiment::cmd_report(dirs, report_out);
      std::cout << "report over " << j.at("runs").size() << " runs written to " << report_out << '\n';
      return 0;
    }
    if (*grad) {
      const auto cfg = resolve(grad_opts, false);
      const auto rows = efftemp::experiment::cmd_gradcheck(
          cfg, cache_dir, grad_opts.out.empty() ? std::nullopt : std::optional<fs::path>(grad_opts.out));
      bool ok = true;
      for (const auto& e : rows) {
        std::cout << e.objective << ": value=" << format_double(e.value)
                  << " max_rel_error=" << format_double(e.max_rel_error) << " over " << e.coordinates
                  << " coordinates " << (e.pass ? "ok" : "FAIL") << '\n';
        ok = ok && e.pass;
      }
      return ok ? 0 : kExitNumerical;
    }
  } catch (const efftemp::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const efftemp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const efftemp::IntegrityError& e) {
    std::cerr << "integrity failure: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
