#include "efftemp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "efftemp/autodiff.hpp"
#include "efftemp/errors.hpp"
#include "efftemp/io.hpp"
#include "efftemp/spectral.hpp"

namespace efftemp::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path default_cache_dir() {
  if (const char* dir = std::getenv(kCacheEnv); dir != nullptr && *dir != '\0') return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg != nullptr && *xdg != '\0') return fs::path(xdg) / "efftemp";
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return fs::path(home) / ".cache" / "efftemp";
  }
  return ".efftemp-cache";
}

std::shared_ptr<const Problem> prepare(const config::ExperimentConfig& cfg, const fs::path& cache_dir) {
  auto p = std::make_shared<Problem>();
  p->lattice = cfg.model.build_lattice();
  p->params = cfg.model.params();
  p->hamiltonian = model::build_hamiltonian(p->lattice, p->params);
  const bool sectored = cfg.model.use_sectors();
  p->cache_key = io::spectrum_cache_key(p->lattice, p->params, sectored);
  p->cache_file = cache_dir / ("spectrum-" + p->cache_key.substr(0, 24) + ".bin");

  if (fs::exists(p->cache_file)) {
    p->spectrum = io::read_spectrum(p->cache_file, p->cache_key);
    p->cache_hit = true;
    return p;
  }
  model::SpectrumOptions opts;
  opts.dimension_cap = cfg.model.dimension_cap;
  p->spectrum = model::full_spectrum(p->hamiltonian, p->lattice, p->params, sectored, opts);
  fs::create_directories(cache_dir);
  io::write_spectrum(p->cache_file, p->spectrum, p->lattice, p->params);
  return p;
}

objectives::TargetState make_target(const config::ExperimentConfig& cfg, const Problem& problem, double beta) {
  if (cfg.objective.target == objectives::TargetKind::GroundState) return objectives::ground_target(problem.spectrum);
  return objectives::build_ites(problem.spectrum, beta, cfg.objective.phase_seed);
}

namespace {

json manifest_for(const fs::path& dir, const json& cfg_json, const std::string& cache_key,
                  std::uint64_t seed, const std::optional<std::uint64_t>& phase_seed) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  json files = json::array();
  for (const auto& n : names) {
    files.push_back({{"name", n}, {"sha256", io::sha256_file(dir / n)}, {"bytes", fs::file_size(dir / n)}});
  }
  return {
      {"code_version", kCodeVersion},
      {"config", cfg_json},
      {"spectrum_cache_key", cache_key},
      {"seeds", {{"run", seed}, {"phase", phase_seed ? json(*phase_seed) : json(nullptr)}}},
      {"files", files},
  };
}

json fit_json(const std::optional<spectral::FitResult>& fit) {
  if (!fit) return nullptr;
  return {
      {"beta_tilde", fit->beta_tilde},
      {"delta_beta_tilde", fit->delta_beta_tilde},
      {"lambda", fit->lambda},
      {"r_squared", fit->r_squared},
      {"mse", fit->mse ? json(*fit->mse) : json(nullptr)},
      {"points_used", fit->points_used},
  };
}

std::string beta_dir_name(double beta) { return "beta_" + io::format_double(beta); }

void write_scatter_for(const fs::path& path, const config::ExperimentConfig& cfg, const Problem& problem,
                       std::span<const double> theta) {
  const auto psi = ansatz::forward(cfg.ansatz, theta);
  const auto decomp = spectral::decompose(psi, problem.spectrum, cfg.analysis.decompose);
  std::vector<std::size_t> used;
  try {
    used = spectral::fit_efftemp(decomp, cfg.analysis.fit).used_indices;
  } catch (const ValidationError&) {
  }
  io::write_scatter(path, decomp, used);
}

}  // namespace

EdResult cmd_ed(const config::ExperimentConfig& cfg, const fs::path& cache_dir, const std::optional<fs::path>& out_dir) {
  const auto problem = prepare(cfg, cache_dir);
  EdResult r;
  r.cache_file = problem->cache_file;
  r.cache_key = problem->cache_key;
  r.cache_hit = problem->cache_hit;
  r.eigenpairs = problem->spectrum.size();
  r.sectors = problem->spectrum.sectored() ? problem->spectrum.blocks().size() : 1;
  r.ground_energy = problem->spectrum.energy(0);
  if (out_dir) {
    fs::create_directories(*out_dir);
    const auto gs = model::ground_state(problem->spectrum);
    json summary = {
        {"cache_file", r.cache_file.string()},
        {"cache_key", r.cache_key},
        {"eigenpairs", r.eigenpairs},
        {"sectored", problem->spectrum.sectored()},
        {"sectors", r.sectors},
        {"ground_energy", gs.energy},
        {"gap", gs.gap},
        {"quasi_degenerate", gs.quasi_degenerate},
        {"spectrum_sha256", io::sha256_file(r.cache_file)},
    };
    io::write_text(*out_dir / "config.snapshot", cfg.to_json().dump(2) + "\n");
    io::write_text(*out_dir / "ed.summary.json", summary.dump(2) + "\n");
    io::write_text(*out_dir / "manifest.json",
                   manifest_for(*out_dir, cfg.to_json(), r.cache_key, cfg.run.seed, cfg.objective.phase_seed).dump(2) +
                       "\n");
  }
  return r;
}

RunResult run_training(const config::ExperimentConfig& cfg_in, const Problem& problem, double beta,
                       const fs::path& out_dir) {
  config::ExperimentConfig cfg = cfg_in;
  cfg.objective.beta = beta;
  cfg.run.out = out_dir.generic_string();
  fs::create_directories(out_dir);
  const json cfg_json = cfg.to_json();
  io::write_text(out_dir / "config.snapshot", cfg_json.dump(2) + "\n");

  const auto target = make_target(cfg, problem, beta);
  const int cut = cfg.analysis.entropy_cut.value_or(problem.lattice.sites / 2);

  optimize::TrainProblem tp;
  tp.spec = cfg.ansatz;
  tp.objective = cfg.objective.kind;
  tp.hamiltonian = &problem.hamiltonian;
  tp.target = &target;
  tp.spectrum = &problem.spectrum;
  tp.analysis.decompose = cfg.analysis.decompose;
  tp.analysis.fit = cfg.analysis.fit;

  optimize::TrainConfig tc;
  tc.optimizer = cfg.optimizer;
  tc.total_steps = cfg.run.steps;
  tc.record_every = cfg.run.record_every;
  tc.seed = cfg.run.seed;
  tc.record_wall_time = cfg.run.record_wall_time;
  tc.on_record = [&](const optimize::TrainRecord& rec, std::span<const double> theta) {
    if (rec.step == 0 && cfg.run.steps > 0) {
      // Step 0 gets a scatter export so the initial spectrum is always available.
      write_scatter_for(out_dir / "scatter_step_0.csv", cfg, problem, theta);
    }
    if (cfg.run.scatter_every > 0 && rec.step % cfg.run.scatter_every == 0) {
      write_scatter_for(out_dir / ("scatter_step_" + std::to_string(rec.step) + ".csv"), cfg, problem, theta);
    }
    if (cfg.run.checkpoint_every > 0 && rec.step % cfg.run.checkpoint_every == 0) {
      io::write_checkpoint(out_dir / ("checkpoint_step_" + std::to_string(rec.step) + ".bin"),
                           {cfg.ansatz, cfg.run.seed, rec.step, std::vector<double>(theta.begin(), theta.end())});
    }
  };

  RunResult out;
  out.dir = out_dir;
  const auto result = optimize::train(tp, tc);
  out.status = result.status;
  out.message = result.message;
  out.records = result.records;
  out.ground_energy = problem.spectrum.energy(0);
  out.target_entropy = spectral::entanglement_entropy(target.state, cut);

  io::write_trajectory(out_dir / "trajectory.csv", result.records);
  if (!result.theta.empty()) {
    const auto step = result.final_step;
    write_scatter_for(out_dir / ("scatter_step_" + std::to_string(step) + ".csv"), cfg, problem, result.theta);
    io::write_checkpoint(out_dir / ("checkpoint_step_" + std::to_string(step) + ".bin"),
                         {cfg.ansatz, cfg.run.seed, step, result.theta});
  }

  json summary = {
      {"status", optimize::to_string(result.status)},
      {"message", result.message},
      {"final_step", result.final_step},
      {"ground_energy", out.ground_energy},
      {"target", {{"kind", objectives::to_string(target.kind)}, {"beta", beta},
                  {"phase_seed", target.phase_seed ? json(*target.phase_seed) : json(nullptr)}}},
      {"target_entropy", out.target_entropy},
      {"entropy_cut", cut},
      {"param_count", ansatz::param_count(cfg.ansatz)},
  };
  if (!result.records.empty()) {
    const auto& last = result.records.back();
    summary["loss"] = last.loss;
    summary["energy"] = last.energy;
    summary["infidelity"] = last.infidelity;
    summary["fit"] = fit_json(last.fit);
  }
  const auto sts = optimize::steps_to_threshold(result.records, cfg.analysis.steps_threshold);
  summary["steps_threshold"] = cfg.analysis.steps_threshold;
  summary["steps_to_threshold"] = sts ? json(*sts) : json(nullptr);
  io::write_text(out_dir / "final.summary.json", summary.dump(2) + "\n");
  io::write_text(out_dir / "manifest.json",
                 manifest_for(out_dir, cfg_json, problem.cache_key, cfg.run.seed, cfg.objective.phase_seed).dump(2) +
                     "\n");
  return out;
}

RunResult cmd_train(const config::ExperimentConfig& cfg, const fs::path& cache_dir) {
  const auto problem = prepare(cfg, cache_dir);
  return run_training(cfg, *problem, cfg.objective.beta, cfg.run.out);
}

SweepResult cmd_ites_sweep(const config::ExperimentConfig& cfg, const fs::path& cache_dir, int jobs) {
  if (cfg.objective.beta_grid.empty()) throw ValidationError("ites-sweep: objective.beta_grid is empty");
  if (cfg.objective.target != objectives::TargetKind::ITES) throw ValidationError("ites-sweep: target must be ites");
  if (jobs < 1) throw ValidationError("ites-sweep: --jobs must be >= 1");
  const auto problem = prepare(cfg, cache_dir);
  const fs::path root = cfg.run.out;
  fs::create_directories(root);

  const auto& grid = cfg.objective.beta_grid;
  SweepResult out;
  out.points.resize(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      SweepPoint& pt = out.points[i];
      pt.beta = grid[i];
      pt.dir = root / beta_dir_name(grid[i]);
      try {
        const auto r = run_training(cfg, *problem, grid[i], pt.dir);
        pt.ok = r.status == optimize::TrainStatus::Completed;
        pt.message = r.message;
        if (!r.records.empty()) {
          pt.fit = r.records.back().fit;
          pt.infidelity = r.records.back().infidelity;
        }
      } catch (const std::exception& e) {
        pt.ok = false;
        pt.message = e.what();
      }
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(jobs), grid.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::vector<std::optional<double>> tildes;
  for (const auto& p : out.points) tildes.push_back(p.fit ? std::optional<double>(p.fit->beta_tilde) : std::nullopt);
  out.beta_star = spectral::detect_beta_star(grid, tildes, cfg.analysis.beta_star_rel_dev);

  std::string csv = "beta,beta_tilde,delta_beta_tilde,lambda,r_squared,mse,infidelity,status,run_dir\n";
  json points = json::array();
  for (const auto& p : out.points) {
    csv += io::format_double(p.beta) + ',';
    if (p.fit) {
      csv += io::format_double(p.fit->beta_tilde) + ',' + io::format_double(p.fit->delta_beta_tilde) + ',' +
             io::format_double(p.fit->lambda) + ',' + io::format_double(p.fit->r_squared) + ',' +
             (p.fit->mse ? io::format_double(*p.fit->mse) : std::string()) + ',';
    } else {
      csv += ",,,,,";
    }
    csv += io::format_double(p.infidelity) + ',' + (p.ok ? "ok" : "failed") + ',' + beta_dir_name(p.beta) + '\n';
    points.push_back({{"beta", p.beta},
                      {"run_dir", beta_dir_name(p.beta)},
                      {"ok", p.ok},
                      {"message", p.message},
                      {"fit", fit_json(p.fit)},
                      {"infidelity", p.infidelity}});
  }
  io::write_text(root / "sweep.csv", csv);
  const json summary = {
      {"grid", grid},
      {"beta_star", out.beta_star ? json(*out.beta_star) : json(nullptr)},
      {"beta_star_rel_dev", cfg.analysis.beta_star_rel_dev},
      {"points", points},
  };
  io::write_text(root / "sweep_summary.json", summary.dump(2) + "\n");
  io::write_text(root / "manifest.json",
                 manifest_for(root, cfg.to_json(), problem->cache_key, cfg.run.seed, cfg.objective.phase_seed).dump(2) +
                     "\n");
  return out;
}

void verify_manifest(const fs::path& run_dir) {
  const auto path = run_dir / "manifest.json";
  if (!fs::exists(path)) throw IntegrityError("missing manifest: " + path.string());
  json manifest;
  try {
    manifest = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw IntegrityError("unreadable manifest " + path.string() + ": " + e.what());
  }
  std::string report;
  try {
    for (const auto& f : manifest.at("files")) {
      const auto name = f.at("name").get<std::string>();
      const auto file = run_dir / name;
      if (!fs::exists(file)) {
        report += "\n  missing: " + name;
        continue;
      }
      if (io::sha256_file(file) != f.at("sha256").get<std::string>()) report += "\n  hash mismatch: " + name;
    }
  } catch (const json::exception& e) {
    throw IntegrityError("malformed manifest " + path.string() + ": " + e.what());
  }
  if (!report.empty()) throw IntegrityError("integrity check failed for " + run_dir.string() + ":" + report);
}

json cmd_report(const std::vector<fs::path>& dirs, const fs::path& out_dir) {
  if (dirs.empty()) throw ValidationError("report: no run directories given");
  struct Run {
    std::string name;
    fs::path dir;
  };
  std::vector<Run> runs;
  for (const auto& d : dirs) {
    if (fs::exists(d / "sweep_summary.json")) {
      verify_manifest(d);
      const json s = json::parse(io::read_text(d / "sweep_summary.json"));
      for (const auto& p : s.at("points")) {
        const auto sub = p.at("run_dir").get<std::string>();
        runs.push_back({(d / sub).generic_string(), d / sub});
      }
    } else {
      runs.push_back({d.generic_string(), d});
    }
  }

  std::string runs_csv =
      "run,variant,objective,target,beta,seed,steps,status,final_loss,final_energy,final_infidelity,beta_tilde,"
      "delta_beta_tilde,lambda,r_squared,mse,steps_to_threshold,target_entropy\n";
  std::string series_csv = "run,step,loss,energy,infidelity,beta_tilde,delta_beta_tilde,lambda,r_squared,mse\n";
  std::string lambda_csv = "run,step,lambda,infidelity\n";
  json run_list = json::array();
  std::vector<std::pair<double, double>> entropy;

  for (const auto& run : runs) {
    if (!fs::exists(run.dir / "manifest.json")) {
      throw IntegrityError("report: " + run.dir.string() + " has no manifest (failed or incomplete run)");
    }
    verify_manifest(run.dir);
    const json cfg = json::parse(io::read_text(run.dir / "config.snapshot"));
    const json summary = json::parse(io::read_text(run.dir / "final.summary.json"));
    const auto records = io::read_trajectory(run.dir / "trajectory.csv");
    const auto opt = [](const json& j, const char* key) {
      return j.contains(key) && !j.at(key).is_null() ? io::format_double(j.at(key).get<double>()) : std::string();
    };
    const json fit = summary.contains("fit") ? summary.at("fit") : json(nullptr);
    const json none = json::object();
    const json& f = fit.is_null() ? none : fit;
    const double beta = cfg.at("objective").at("beta").get<double>();
    runs_csv += run.name + ',' + cfg.at("ansatz").at("variant").get<std::string>() + ',' +
                cfg.at("objective").at("kind").get<std::string>() + ',' +
                cfg.at("objective").at("target").get<std::string>() + ',' + io::format_double(beta) + ',' +
                std::to_string(cfg.at("run").at("seed").get<std::uint64_t>()) + ',' +
                std::to_string(cfg.at("run").at("steps").get<std::int64_t>()) + ',' +
                summary.at("status").get<std::string>() + ',' + opt(summary, "loss") + ',' + opt(summary, "energy") +
                ',' + opt(summary, "infidelity") + ',' + opt(f, "beta_tilde") + ',' + opt(f, "delta_beta_tilde") + ',' +
                opt(f, "lambda") + ',' + opt(f, "r_squared") + ',' + opt(f, "mse") + ',' +
                (summary.at("steps_to_threshold").is_null()
                     ? std::string()
                     : std::to_string(summary.at("steps_to_threshold").get<std::int64_t>())) +
                ',' + opt(summary, "target_entropy") + '\n';
    for (const auto& r : records) {
      const auto row = io::trajectory_row(r);
      series_csv += run.name + ',' + row.substr(0, row.rfind(',')) + '\n';
      if (r.fit) {
        lambda_csv += run.name + ',' + std::to_string(r.step) + ',' + io::format_double(r.fit->lambda) + ',' +
                      io::format_double(r.infidelity) + '\n';
      }
    }
    if (cfg.at("objective").at("target").get<std::string>() == "ites") {
      entropy.emplace_back(beta, summary.at("target_entropy").get<double>());
    }
    run_list.push_back({{"run", run.name},
                        {"variant", cfg.at("ansatz").at("variant")},
                        {"objective", cfg.at("objective").at("kind")},
                        {"target", cfg.at("objective").at("target")},
                        {"beta", beta},
                        {"status", summary.at("status")},
                        {"fit", fit},
                        {"infidelity", summary.contains("infidelity") ? summary.at("infidelity") : json(nullptr)},
                        {"steps_to_threshold", summary.at("steps_to_threshold")},
                        {"target_entropy", summary.at("target_entropy")}});
  }

  std::stable_sort(entropy.begin(), entropy.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  entropy.erase(std::unique(entropy.begin(), entropy.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                entropy.end());
  std::string entropy_csv = "beta,entropy\n";
  json entropy_json = json::array();
  bool monotone = true;
  for (std::size_t i = 0; i < entropy.size(); ++i) {
    entropy_csv += io::format_double(entropy[i].first) + ',' + io::format_double(entropy[i].second) + '\n';
    entropy_json.push_back({{"beta", entropy[i].first}, {"entropy", entropy[i].second}});
    if (i > 0 && entropy[i].second > entropy[i - 1].second + 1e-12) monotone = false;
  }

  fs::create_directories(out_dir);
  io::write_text(out_dir / "report_runs.csv", runs_csv);
  io::write_text(out_dir / "report_series.csv", series_csv);
  io::write_text(out_dir / "report_lambda.csv", lambda_csv);
  io::write_text(out_dir / "report_entropy.csv", entropy_csv);
  const json report = {
      {"code_version", kCodeVersion},
      {"runs", run_list},
      {"target_entropy", entropy_json},
      {"entropy_non_increasing", monotone},
  };
  io::write_text(out_dir / "report.json", report.dump(2) + "\n");
  return report;
}

std::vector<GradcheckEntry> cmd_gradcheck(const config::ExperimentConfig& cfg, const fs::path& cache_dir,
                                          const std::optional<fs::path>& out_dir) {
  const auto problem = prepare(cfg, cache_dir);
  const auto theta = ansatz::init_params(cfg.ansatz, cfg.run.seed);
  const auto ground = objectives::ground_target(problem->spectrum);
  const auto ites = objectives::build_ites(problem->spectrum, cfg.objective.beta, cfg.objective.phase_seed);

  struct Case {
    std::string name;
    objectives::Objective objective;
  };
  const std::vector<Case> cases{
      {"energy", objectives::Objective::make_energy(problem->hamiltonian)},
      {"fidelity_ground", objectives::Objective::make_infidelity(ground.state)},
      {"fidelity_ites", objectives::Objective::make_infidelity(ites.state)},
  };
  std::vector<GradcheckEntry> out;
  json rows = json::array();
  for (const auto& c : cases) {
    const auto check = autodiff::finite_difference_check(cfg.ansatz, theta, c.objective, cfg.run.seed);
    GradcheckEntry e;
    e.objective = c.name;
    e.value = check.value;
    e.max_rel_error = check.max_rel_error;
    e.coordinates = check.coordinates.size();
    e.pass = check.max_rel_error < kGradcheckTolerance;
    out.push_back(e);
    rows.push_back({{"objective", e.objective},
                    {"value", e.value},
                    {"max_rel_error", e.max_rel_error},
                    {"coordinates", e.coordinates},
                    {"pass", e.pass}});
  }
  if (out_dir) {
    fs::create_directories(*out_dir);
    io::write_text(*out_dir / "gradcheck.json",
                   json({{"variant", ansatz::to_string(cfg.ansatz.variant)},
                         {"seed", cfg.run.seed},
                         {"tolerance", kGradcheckTolerance},
                         {"results", rows}})
                           .dump(2) +
                       "\n");
  }
  return out;
}

}  // namespace efftemp::experiment
