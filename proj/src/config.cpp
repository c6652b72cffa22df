#include "efftemp/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "efftemp/errors.hpp"
#include "efftemp/io.hpp"

namespace efftemp::config {

using nlohmann::json;

namespace {

std::string to_string(SectorMode m) {
  switch (m) {
    case SectorMode::Auto: return "auto";
    case SectorMode::On: return "on";
    case SectorMode::Off: return "off";
  }
  return "?";
}

SectorMode sector_mode_from_string(const std::string& s) {
  if (s == "auto") return SectorMode::Auto;
  if (s == "on") return SectorMode::On;
  if (s == "off") return SectorMode::Off;
  throw ValidationError("model.sectors must be auto, on or off, got '" + s + "'");
}

// Typed access to one block of the document with unknown-key rejection.
class Block {
 public:
  Block(const json& doc, std::string name, std::set<std::string> allowed) : name_(std::move(name)) {
    if (!doc.contains(name_)) return;
    node_ = &doc.at(name_);
    if (!node_->is_object()) throw ValidationError("config: '" + name_ + "' must be an object");
    for (const auto& [key, value] : node_->items()) {
      if (!allowed.contains(key)) throw ValidationError("config: unknown key '" + name_ + "." + key + "'");
    }
  }

  bool has(const std::string& key) const { return node_ != nullptr && node_->contains(key) && !node_->at(key).is_null(); }
  const json& at(const std::string& key) const { return node_->at(key); }

  template <typename T>
  void read(const std::string& key, T& dst) const {
    if (!has(key)) return;
    const json& v = at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ValidationError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError("");
      }
      dst = v.get<T>();
    } catch (const std::exception&) {
      throw ValidationError("config: '" + name_ + "." + key + "' has the wrong type (" + std::string(v.type_name()) + ")");
    }
  }

  std::string str(const std::string& key, const std::string& fallback) const {
    std::string s = fallback;
    read(key, s);
    return s;
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
};

double snap(double v) { return std::round(v * 1e12) / 1e12; }

std::vector<double> parse_grid(const json& g) {
  std::vector<double> out;
  if (g.is_array()) {
    for (const auto& v : g) {
      if (!v.is_number()) throw ValidationError("config: objective.beta_grid entries must be numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  if (g.is_object()) {
    for (const auto& [k, v] : g.items()) {
      if (k != "start" && k != "stop" && k != "step") throw ValidationError("config: unknown key 'objective.beta_grid." + k + "'");
      if (!v.is_number()) throw ValidationError("config: objective.beta_grid." + k + " must be a number");
    }
    if (!g.contains("start") || !g.contains("stop") || !g.contains("step")) {
      throw ValidationError("config: objective.beta_grid needs start, stop and step");
    }
    const double start = g.at("start").get<double>();
    const double stop = g.at("stop").get<double>();
    const double step = g.at("step").get<double>();
    if (!(step > 0.0) || stop < start) throw ValidationError("config: objective.beta_grid range is empty");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long k = 0; k < n; ++k) out.push_back(snap(start + static_cast<double>(k) * step));
    return out;
  }
  throw ValidationError("config: objective.beta_grid must be an array or {start, stop, step}");
}

const char* kPresets = R"json({
  "mps-sm-table": {
    "ansatz": {"variant": "mps", "bond_dim": 8},
    "optimizer": {"kind": "adam", "lr0": 3e-3, "schedule": "exp_halving", "period": 1000},
    "run": {"steps": 400}
  },
  "peps-sm-table": {
    "model": {"lattice": "square", "Lx": 4, "Ly": 3},
    "ansatz": {"variant": "peps", "bond_dim": 2},
    "optimizer": {"kind": "adam", "lr0": 8e-3, "schedule": "constant"},
    "run": {"steps": 600}
  },
  "nqs-sm-table": {
    "ansatz": {"variant": "nqs", "width": 40, "depth": 2},
    "optimizer": {"kind": "adam", "lr0": 1e-3, "schedule": "warm_then_constant", "period": 200, "warm_steps": 800},
    "run": {"steps": 3500}
  },
  "vqe-sm-table": {
    "ansatz": {"variant": "vqe", "depth": 4},
    "optimizer": {"kind": "adam", "lr0": 1e-2, "schedule": "exp_halving", "period": 2000},
    "run": {"steps": 2000},
    "analysis": {"sector_filter": 0}
  },
  "vec-sm-table": {
    "ansatz": {"variant": "vec"},
    "optimizer": {"kind": "adam", "lr0": 2e-3, "schedule": "constant"},
    "run": {"steps": 600}
  }
})json";

const json& presets() {
  static const json p = json::parse(kPresets);
  return p;
}

}  // namespace

model::Lattice ModelConfig::build_lattice() const { return model::build_lattice(lattice, lx, ly, pbc); }

model::XXZParams ModelConfig::params() const {
  const int sites = lx * ly;
  auto p = model::XXZParams::uniform(sites, jx, jy, jz, hz);
  if (h) {
    if (static_cast<int>(h->size()) != sites) {
      throw ValidationError("config: model.h has " + std::to_string(h->size()) + " entries, expected " +
                            std::to_string(sites));
    }
    p.h = *h;
  }
  return p;
}

bool ModelConfig::use_sectors() const {
  switch (sectors) {
    case SectorMode::Auto: return jx == jy;
    case SectorMode::On: return true;
    case SectorMode::Off: return false;
  }
  return false;
}

json ExperimentConfig::to_json() const {
  json j;
  j["model"] = {
      {"lattice", model::to_string(model.lattice)},
      {"Lx", model.lx},
      {"Ly", model.ly},
      {"pbc", model.pbc},
      {"Jx", model.jx},
      {"Jy", model.jy},
      {"Jz", model.jz},
      {"hz", model.hz},
      {"h", model.h ? json(*model.h) : json(nullptr)},
      {"sectors", to_string(model.sectors)},
      {"dimension_cap", model.dimension_cap},
  };
  j["ansatz"] = {
      {"variant", ansatz::to_string(ansatz.variant)},
      {"bond_dim", ansatz.bond_dim},
      {"width", ansatz.width},
      {"depth", ansatz.depth},
  };
  j["objective"] = {
      {"kind", objectives::to_string(objective.kind)},
      {"target", objectives::to_string(objective.target)},
      {"beta", objective.beta},
      {"beta_grid", objective.beta_grid},
      {"phase_seed", objective.phase_seed ? json(*objective.phase_seed) : json(nullptr)},
  };
  const auto& a = optimizer.adam;
  const auto& l = optimizer.lbfgs;
  j["optimizer"] = {
      {"kind", optimizer.kind == optimize::OptimizerKind::Adam ? "adam" : "lbfgs"},
      {"lr0", a.schedule.lr0},
      {"schedule", optimize::to_string(a.schedule.kind)},
      {"period", a.schedule.period},
      {"warm_steps", a.schedule.warm_steps},
      {"beta1", a.beta1},
      {"beta2", a.beta2},
      {"eps", a.eps},
      {"memory", l.memory},
      {"value_tol", l.value_tol},
      {"grad_tol", l.grad_tol},
      {"max_iter", l.max_iter},
  };
  j["run"] = {
      {"steps", run.steps},
      {"record_every", run.record_every},
      {"seed", run.seed},
      {"out", run.out},
      {"checkpoint_every", run.checkpoint_every},
      {"scatter_every", run.scatter_every},
      {"record_wall_time", run.record_wall_time},
  };
  j["analysis"] = {
      {"exclude_ground", analysis.fit.exclude_ground},
      {"weight_floor", analysis.fit.weight_floor},
      {"aggregate", analysis.fit.aggregate},
      {"degeneracy_rel_tol", analysis.fit.degeneracy_rel_tol},
      {"sector_filter", analysis.decompose.sector_filter ? json(*analysis.decompose.sector_filter) : json(nullptr)},
      {"renormalize_within_sector", analysis.decompose.renormalize_within_sector},
      {"beta_star_rel_dev", analysis.beta_star_rel_dev},
      {"entropy_cut", analysis.entropy_cut ? json(*analysis.entropy_cut) : json(nullptr)},
      {"steps_threshold", analysis.steps_threshold},
  };
  return j;
}

void ExperimentConfig::validate() const {
  const auto lat = model.build_lattice();
  (void)model.params();
  if (!std::isfinite(model.jx) || !std::isfinite(model.jy) || !std::isfinite(model.jz) || !std::isfinite(model.hz)) {
    throw ValidationError("config: couplings must be finite");
  }
  if (model.sectors == SectorMode::On && model.jx != model.jy) {
    throw ValidationError("config: model.sectors = on requires Jx == Jy");
  }
  ansatz::validate(ansatz);
  if (ansatz.lattice.sites != lat.sites) throw ValidationError("config: ansatz lattice does not match the model");
  if (objective.beta < 0.0 || !std::isfinite(objective.beta)) throw ValidationError("config: objective.beta must be >= 0");
  for (std::size_t i = 0; i < objective.beta_grid.size(); ++i) {
    if (objective.beta_grid[i] < 0.0) throw ValidationError("config: objective.beta_grid entries must be >= 0");
    if (i > 0 && !(objective.beta_grid[i] > objective.beta_grid[i - 1])) {
      throw ValidationError("config: objective.beta_grid must be strictly increasing");
    }
  }
  if (optimizer.kind == optimize::OptimizerKind::Adam) {
    optimizer.adam.validate();
  } else {
    optimizer.lbfgs.validate();
  }
  if (run.steps < 0) throw ValidationError("config: run.steps must be >= 0");
  if (run.record_every < 1) throw ValidationError("config: run.record_every must be >= 1");
  if (run.checkpoint_every < 0 || run.scatter_every < 0) {
    throw ValidationError("config: run.checkpoint_every and run.scatter_every must be >= 0");
  }
  if (analysis.decompose.sector_filter) {
    const int m = *analysis.decompose.sector_filter;
    if (std::abs(m) > lat.sites || (m + lat.sites) % 2 != 0) {
      throw ValidationError("config: analysis.sector_filter " + std::to_string(m) + " is not a sector of L=" +
                            std::to_string(lat.sites));
    }
  }
  if (analysis.entropy_cut && (*analysis.entropy_cut < 1 || *analysis.entropy_cut >= lat.sites)) {
    throw ValidationError("config: analysis.entropy_cut must lie in [1, L)");
  }
  if (!(analysis.beta_star_rel_dev > 0.0)) throw ValidationError("config: analysis.beta_star_rel_dev must be > 0");
  if (analysis.fit.weight_floor < 0.0) throw ValidationError("config: analysis.weight_floor must be >= 0");
}

ExperimentConfig from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  static const std::set<std::string> top{"model", "ansatz", "objective", "optimizer", "run", "analysis"};
  for (const auto& [key, value] : doc.items()) {
    if (!top.contains(key)) throw ValidationError("config: unknown section '" + key + "'");
  }
  ExperimentConfig c;
  c.run.out = "runs/run";
  c.model.hz = 0.02;

  const Block m(doc, "model", {"lattice", "Lx", "Ly", "pbc", "Jx", "Jy", "Jz", "hz", "h", "sectors", "dimension_cap"});
  c.model.lattice = model::lattice_kind_from_string(m.str("lattice", model::to_string(c.model.lattice)));
  if (c.model.lattice == model::LatticeKind::Chain) c.model.ly = 1;
  m.read("Lx", c.model.lx);
  m.read("Ly", c.model.ly);
  m.read("pbc", c.model.pbc);
  m.read("Jx", c.model.jx);
  m.read("Jy", c.model.jy);
  m.read("Jz", c.model.jz);
  m.read("hz", c.model.hz);
  if (m.has("h")) {
    const auto& h = m.at("h");
    if (!h.is_array()) throw ValidationError("config: model.h must be an array");
    std::vector<double> v;
    for (const auto& x : h) {
      if (!x.is_number()) throw ValidationError("config: model.h entries must be numbers");
      v.push_back(x.get<double>());
    }
    c.model.h = v;
  }
  c.model.sectors = sector_mode_from_string(m.str("sectors", "auto"));
  m.read("dimension_cap", c.model.dimension_cap);
  if (c.model.lattice == model::LatticeKind::Chain && c.model.ly != 1) throw ValidationError("config: chains need Ly = 1");

  const Block a(doc, "ansatz", {"variant", "bond_dim", "width", "depth"});
  c.ansatz.variant = ansatz::variant_from_string(a.str("variant", "mps"));
  c.ansatz.bond_dim = 8;
  c.ansatz.width = 40;
  c.ansatz.depth = 2;
  a.read("bond_dim", c.ansatz.bond_dim);
  a.read("width", c.ansatz.width);
  a.read("depth", c.ansatz.depth);
  c.ansatz.lattice = c.model.build_lattice();

  const Block o(doc, "objective", {"kind", "target", "beta", "beta_grid", "phase_seed"});
  c.objective.kind = objectives::objective_kind_from_string(o.str("kind", "fidelity"));
  c.objective.target = objectives::target_kind_from_string(o.str("target", "ites"));
  o.read("beta", c.objective.beta);
  if (o.has("beta_grid")) c.objective.beta_grid = parse_grid(o.at("beta_grid"));
  if (o.has("phase_seed")) {
    std::uint64_t s = 0;
    o.read("phase_seed", s);
    c.objective.phase_seed = s;
  }

  const Block p(doc, "optimizer",
                {"kind", "lr0", "schedule", "period", "warm_steps", "beta1", "beta2", "eps", "memory", "value_tol",
                 "grad_tol", "max_iter"});
  const std::string kind = p.str("kind", "adam");
  if (kind == "adam") {
    c.optimizer.kind = optimize::OptimizerKind::Adam;
  } else if (kind == "lbfgs") {
    c.optimizer.kind = optimize::OptimizerKind::Lbfgs;
  } else {
    throw ValidationError("config: optimizer.kind must be adam or lbfgs, got '" + kind + "'");
  }
  auto& s = c.optimizer.adam.schedule;
  s.kind = optimize::schedule_kind_from_string(p.str("schedule", "constant"));
  p.read("lr0", s.lr0);
  p.read("period", s.period);
  p.read("warm_steps", s.warm_steps);
  p.read("beta1", c.optimizer.adam.beta1);
  p.read("beta2", c.optimizer.adam.beta2);
  p.read("eps", c.optimizer.adam.eps);
  p.read("memory", c.optimizer.lbfgs.memory);
  p.read("value_tol", c.optimizer.lbfgs.value_tol);
  p.read("grad_tol", c.optimizer.lbfgs.grad_tol);
  p.read("max_iter", c.optimizer.lbfgs.max_iter);

  const Block r(doc, "run",
                {"steps", "record_every", "seed", "out", "checkpoint_every", "scatter_every", "record_wall_time"});
  r.read("steps", c.run.steps);
  r.read("record_every", c.run.record_every);
  r.read("seed", c.run.seed);
  r.read("out", c.run.out);
  r.read("checkpoint_every", c.run.checkpoint_every);
  r.read("scatter_every", c.run.scatter_every);
  r.read("record_wall_time", c.run.record_wall_time);

  const Block an(doc, "analysis",
                 {"exclude_ground", "weight_floor", "aggregate", "degeneracy_rel_tol", "sector_filter",
                  "renormalize_within_sector", "beta_star_rel_dev", "entropy_cut", "steps_threshold"});
  an.read("exclude_ground", c.analysis.fit.exclude_ground);
  an.read("weight_floor", c.analysis.fit.weight_floor);
  an.read("aggregate", c.analysis.fit.aggregate);
  an.read("degeneracy_rel_tol", c.analysis.fit.degeneracy_rel_tol);
  if (an.has("sector_filter")) {
    int f = 0;
    an.read("sector_filter", f);
    c.analysis.decompose.sector_filter = f;
  }
  an.read("renormalize_within_sector", c.analysis.decompose.renormalize_within_sector);
  an.read("beta_star_rel_dev", c.analysis.beta_star_rel_dev);
  if (an.has("entropy_cut")) {
    int cut = 0;
    an.read("entropy_cut", cut);
    c.analysis.entropy_cut = cut;
  }
  an.read("steps_threshold", c.analysis.steps_threshold);

  c.validate();
  return c;
}

ExperimentConfig load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("config: cannot parse " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : presets().items()) names.push_back(k);
  return names;
}

json preset(const std::string& name) {
  if (!presets().contains(name)) {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + name + "' (known: " + known + ")");
  }
  return presets().at(name);
}

void merge(json& base, const json& patch) {
  if (!patch.is_object()) {
    base = patch;
    return;
  }
  if (!base.is_object()) base = json::object();
  for (const auto& [k, v] : patch.items()) {
    if (v.is_object()) {
      merge(base[k], v);
    } else {
      base[k] = v;
    }
  }
}

ExperimentConfig resolve(const std::optional<std::string>& preset_name, const std::optional<std::filesystem::path>& file,
                         const json& overrides) {
  json doc = json::object();
  if (preset_name) merge(doc, preset(*preset_name));
  if (file) {
    try {
      merge(doc, json::parse(io::read_text(*file)));
    } catch (const json::parse_error& e) {
      throw ValidationError("config: cannot parse " + file->string() + ": " + e.what());
    }
  }
  if (!overrides.is_null()) merge(doc, overrides);
  return from_json(doc);
}

}  // namespace efftemp::config
