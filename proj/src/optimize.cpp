#include "efftemp/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "efftemp/errors.hpp"

namespace efftemp::optimize {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::ExpHalving: return "exp_halving";
    case ScheduleKind::WarmThenConstant: return "warm_then_constant";
  }
  return "?";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::Constant;
  if (name == "exp_halving") return ScheduleKind::ExpHalving;
  if (name == "warm_then_constant") return ScheduleKind::WarmThenConstant;
  throw ValidationError("unknown schedule '" + name + "' (expected constant, exp_halving or warm_then_constant)");
}

void Schedule::validate() const {
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ValidationError("schedule: lr0 must be positive");
  if (period < 1) throw ValidationError("schedule: period must be >= 1");
  if (warm_steps < 0) throw ValidationError("schedule: warm_steps must be >= 0");
}

double lr_at(const Schedule& s, std::int64_t step) {
  if (step < 0) throw ValidationError("lr_at: step must be >= 0");
  switch (s.kind) {
    case ScheduleKind::Constant: return s.lr0;
    case ScheduleKind::ExpHalving: return std::ldexp(s.lr0, -static_cast<int>(std::min<std::int64_t>(step / s.period, 1000)));
    case ScheduleKind::WarmThenConstant: {
      const std::int64_t capped = std::min(step, s.warm_steps);
      return std::ldexp(s.lr0, -static_cast<int>(std::min<std::int64_t>(capped / s.period, 1000)));
    }
  }
  return s.lr0;
}

void AdamConfig::validate() const {
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ValidationError("adam: beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ValidationError("adam: beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw ValidationError("adam: eps must be positive");
  schedule.validate();
}

Adam::Adam(AdamConfig config, std::size_t size) : config_(std::move(config)), m_(size, 0.0), v_(size, 0.0) {
  config_.validate();
}

void Adam::step(std::span<double> theta, std::span<const double> gradient, std::int64_t step) {
  if (theta.size() != m_.size() || gradient.size() != m_.size()) throw ValidationError("adam: size mismatch");
  if (!numerics::all_finite(gradient)) throw NumericalError("adam: non-finite gradient");
  const double lr = lr_at(config_.schedule, step);
  const double t = static_cast<double>(step + 1);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double g = gradient[k];
    m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * g;
    v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * g * g;
    const double mhat = m_[k] / c1;
    const double vhat = v_[k] / c2;
    theta[k] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
  }
}

void LbfgsConfig::validate() const {
  if (memory < 1) throw ValidationError("lbfgs: memory must be >= 1");
  if (max_iter < 0) throw ValidationError("lbfgs: max_iter must be >= 0");
  if (!(value_tol >= 0.0) || !(grad_tol >= 0.0)) throw ValidationError("lbfgs: tolerances must be >= 0");
}

std::string to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::ValueTolerance: return "value_tolerance";
    case LbfgsStatus::GradientTolerance: return "gradient_tolerance";
    case LbfgsStatus::MaxIterations: return "max_iterations";
    case LbfgsStatus::LineSearchFailed: return "line_search_failed";
  }
  return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), clipped into
// the interior of [a, b]; falls back to bisection.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) {
      const double c = b - (b - a) * (db + d2 - d1) / denom;
      if (std::isfinite(c)) t = c;
    }
  }
  const double margin = 0.1 * (hi - lo);
  if (!(t > lo + margin && t < hi - margin)) t = 0.5 * (lo + hi);
  return t;
}

struct LinePoint {
  double alpha = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  std::vector<double> x;
  std::vector<double> g;
};

// Strong Wolfe line search (bracketing plus zoom). Returns nothing on failure.
std::optional<LinePoint> strong_wolfe(const ValueAndGradient& fg, std::span<const double> x0, double f0,
                                      double d0, std::span<const double> dir, double alpha1) {
  constexpr double c1 = 1e-4;
  constexpr double c2 = 0.9;
  constexpr int kMaxEvals = 40;
  const std::size_t n = x0.size();
  int evals = 0;

  auto eval = [&](double alpha) {
    LinePoint p;
    p.alpha = alpha;
    p.x.resize(n);
    p.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.x[i] = x0[i] + alpha * dir[i];
    p.f = fg(p.x, p.g);
    p.d = dot(p.g, dir);
    ++evals;
    return p;
  };

  auto zoom = [&](LinePoint lo, LinePoint hi) -> std::optional<LinePoint> {
    while (evals < kMaxEvals) {
      const double a = cubic_step(lo.alpha, lo.f, lo.d, hi.alpha, hi.f, hi.d);
      auto p = eval(a);
      if (!std::isfinite(p.f) || p.f > f0 + c1 * a * d0 || p.f >= lo.f) {
        hi = std::move(p);
      } else {
        if (std::abs(p.d) <= -c2 * d0) return p;
        if (p.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(p);
      }
      if (std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, lo.alpha)) break;
    }
    // Accept a sufficient-decrease point if the curvature condition never held.
    if (lo.alpha > 0.0 && lo.f < f0) return lo;
    return std::nullopt;
  };

  LinePoint prev;
  prev.alpha = 0.0;
  prev.f = f0;
  prev.d = d0;
  double alpha = alpha1;
  for (int i = 0; evals < kMaxEvals; ++i) {
    auto p = eval(alpha);
    if (!std::isfinite(p.f) || p.f > f0 + c1 * alpha * d0 || (i > 0 && p.f >= prev.f)) {
      if (prev.alpha == 0.0 && !std::isfinite(p.f)) {
        alpha *= 0.1;
        continue;
      }
      if (prev.alpha == 0.0) {
        prev.x.assign(x0.begin(), x0.end());
      }
      return zoom(std::move(prev), std::move(p));
    }
    if (std::abs(p.d) <= -c2 * d0) return p;
    if (p.d >= 0.0) return zoom(std::move(p), std::move(prev));
    prev = std::move(p);
    alpha *= 2.0;
  }
  return std::nullopt;
}

}  // namespace

LbfgsResult lbfgs_minimize(const ValueAndGradient& fg, std::vector<double> theta0, const LbfgsConfig& config,
                           const LbfgsObserver& observer) {
  config.validate();
  const std::size_t n = theta0.size();
  LbfgsResult r;
  r.theta = std::move(theta0);
  std::vector<double> g(n);
  r.value = fg(r.theta, g);
  if (!std::isfinite(r.value) || !numerics::all_finite(g)) throw NumericalError("lbfgs: non-finite starting point");
  r.values.push_back(r.value);
  if (observer) observer(0, r.theta, r.value, g);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(n), alpha_buf;

  if (norm_inf(g) <= config.grad_tol) {
    r.status = LbfgsStatus::GradientTolerance;
    return r;
  }
  r.status = LbfgsStatus::MaxIterations;
  while (r.iterations < config.max_iter) {
    // Two-loop recursion.
    std::copy(g.begin(), g.end(), dir.begin());
    const std::size_t k = s_hist.size();
    alpha_buf.assign(k, 0.0);
    for (std::size_t i = k; i-- > 0;) {
      alpha_buf[i] = rho_hist[i] * dot(s_hist[i], dir);
      for (std::size_t j = 0; j < n; ++j) dir[j] -= alpha_buf[i] * y_hist[i][j];
    }
    if (k > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (auto& v : dir) v *= gamma;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], dir);
      for (std::size_t j = 0; j < n; ++j) dir[j] += s_hist[i][j] * (alpha_buf[i] - beta);
    }
    for (auto& v : dir) v = -v;
    double d0 = dot(g, dir);
    if (!(d0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < n; ++j) dir[j] = -g[j];
      d0 = dot(g, dir);
    }

    const double alpha1 = s_hist.empty() ? std::min(1.0, 1.0 / std::max(norm_inf(g), 1e-300)) : 1.0;
    auto step = strong_wolfe(fg, r.theta, r.value, d0, dir, alpha1);
    if (!step) {
      r.status = LbfgsStatus::LineSearchFailed;
      break;
    }
    ++r.iterations;
    std::vector<double> s(n), y(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = step->x[j] - r.theta[j];
      y[j] = step->g[j] - g[j];
    }
    const double change = r.value - step->f;
    r.theta = std::move(step->x);
    g = std::move(step->g);
    r.value = step->f;
    r.values.push_back(r.value);
    if (observer) observer(r.iterations, r.theta, r.value, g);

    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y)) && sy > 0.0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (norm_inf(g) <= config.grad_tol) {
      r.status = LbfgsStatus::GradientTolerance;
      break;
    }
    if (std::abs(change) <= config.value_tol) {
      r.status = LbfgsStatus::ValueTolerance;
      break;
    }
  }
  return r;
}

std::string to_string(TrainStatus status) {
  switch (status) {
    case TrainStatus::Completed: return "completed";
    case TrainStatus::NonFinite: return "non_finite";
    case TrainStatus::LineSearchFailed: return "line_search_failed";
  }
  return "?";
}

namespace {

class Recorder {
 public:
  Recorder(const TrainProblem& p, const TrainConfig& c)
      : problem_(p), config_(c), start_(std::chrono::steady_clock::now()) {
    if (p.spectrum != nullptr && p.target != nullptr && p.target->kind == objectives::TargetKind::ITES) {
      target_decomp_ = spectral::decompose(*p.target, *p.spectrum, p.analysis.decompose);
    }
  }

  TrainRecord make(std::int64_t step, double loss, std::span<const double> theta) const {
    TrainRecord rec;
    rec.step = step;
    rec.loss = loss;
    const auto psi = ansatz::forward(problem_.spec, theta);
    rec.energy = objectives::energy(psi, *problem_.hamiltonian);
    rec.infidelity = objectives::infidelity(psi, *problem_.target);
    if (problem_.spectrum != nullptr) {
      try {
        const auto decomp = spectral::decompose(psi, *problem_.spectrum, problem_.analysis.decompose);
        auto fit = spectral::fit_efftemp(decomp, problem_.analysis.fit);
        if (target_decomp_) fit.mse = spectral::mse_vs_target(decomp, *target_decomp_).value;
        rec.fit = std::move(fit);
      } catch (const ValidationError&) {
        // Too few usable points: the record carries no fit.
      }
    }
    if (config_.record_wall_time) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }
    return rec;
  }

 private:
  const TrainProblem& problem_;
  const TrainConfig& config_;
  std::chrono::steady_clock::time_point start_;
  std::optional<spectral::Decomposition> target_decomp_;
};

bool due(std::int64_t step, std::int64_t total, std::int64_t every) { return step == total || step % every == 0; }

}  // namespace

TrainResult train(const TrainProblem& problem, const TrainConfig& config) {
  if (problem.hamiltonian == nullptr) throw ValidationError("train: a Hamiltonian is required");
  if (problem.target == nullptr) throw ValidationError("train: a target state is required");
  if (config.total_steps < 0) throw ValidationError("train: total_steps must be >= 0");
  if (config.record_every < 1) throw ValidationError("train: record_every must be >= 1");
  const std::size_t dim = std::size_t{1} << problem.spec.sites();
  if (problem.hamiltonian->size() != dim || problem.target->state.size() != dim) {
    throw ValidationError("train: Hamiltonian/target dimension does not match the ansatz");
  }

  objectives::Objective objective;
  switch (problem.objective) {
    case objectives::ObjectiveKind::Energy: objective = objectives::Objective::make_energy(*problem.hamiltonian); break;
    case objectives::ObjectiveKind::Infidelity:
      objective = objectives::Objective::make_infidelity(problem.target->state);
      break;
    case objectives::ObjectiveKind::SquaredNorm: objective = objectives::Objective::make_squared_norm(); break;
  }

  std::vector<double> theta =
      config.initial_params ? *config.initial_params : ansatz::init_params(problem.spec, config.seed);
  if (theta.size() != ansatz::param_count(problem.spec)) throw ValidationError("train: initial parameter count mismatch");

  Recorder recorder(problem, config);
  TrainResult result;
  auto emit = [&](std::int64_t step, double loss, std::span<const double> params) {
    auto rec = recorder.make(step, loss, params);
    if (config.on_record) config.on_record(rec, params);
    result.records.push_back(std::move(rec));
    result.theta.assign(params.begin(), params.end());
    result.final_step = step;
  };

  if (config.optimizer.kind == OptimizerKind::Adam) {
    Adam adam(config.optimizer.adam, theta.size());
    for (std::int64_t step = 0;; ++step) {
      double value = 0.0;
      std::vector<double> grad;
      try {
        const auto psi = ansatz::forward(problem.spec, theta);
        if (!numerics::all_finite(psi)) throw NumericalError("forward produced non-finite amplitudes");
        const auto vc = objectives::evaluate_with_cotangent(objective, psi);
        value = vc.value;
        if (!std::isfinite(value)) throw NumericalError("non-finite loss");
        grad = ansatz::pullback(problem.spec, theta, vc.cotangent);
        if (!numerics::all_finite(grad)) throw NumericalError("non-finite gradient");
      } catch (const NumericalError& e) {
        result.status = TrainStatus::NonFinite;
        result.message = "step " + std::to_string(step) + ": " + e.what();
        break;
      }
      if (due(step, config.total_steps, config.record_every)) emit(step, value, theta);
      if (step == config.total_steps) break;
      adam.step(theta, grad, step);
    }
    return result;
  }

  // L-BFGS: one step is one accepted iterate.
  LbfgsConfig lb = config.optimizer.lbfgs;
  lb.max_iter = static_cast<int>(std::min<std::int64_t>(lb.max_iter, config.total_steps));
  auto fg = [&](std::span<const double> x, std::span<double> g) {
    const auto psi = ansatz::forward(problem.spec, x);
    if (!numerics::all_finite(psi)) return std::numeric_limits<double>::infinity();
    const auto vc = objectives::evaluate_with_cotangent(objective, psi);
    const auto grad = ansatz::pullback(problem.spec, x, vc.cotangent);
    std::copy(grad.begin(), grad.end(), g.begin());
    if (!numerics::all_finite(grad)) return std::numeric_limits<double>::infinity();
    return vc.value;
  };
  std::int64_t last_iter = -1;
  std::vector<double> last_theta;
  double last_value = 0.0;
  auto observer = [&](int iter, std::span<const double> x, double f, std::span<const double>) {
    last_iter = iter;
    last_theta.assign(x.begin(), x.end());
    last_value = f;
    if (iter % config.record_every == 0) emit(iter, f, x);
  };
  try {
    const auto res = lbfgs_minimize(fg, theta, lb, observer);
    if (res.status == LbfgsStatus::LineSearchFailed) {
      result.status = TrainStatus::LineSearchFailed;
      result.message = "line search failed after " + std::to_string(res.iterations) + " iterations";
    }
  } catch (const NumericalError& e) {
    result.status = TrainStatus::NonFinite;
    result.message = e.what();
  }
  if (last_iter >= 0 && (result.records.empty() || result.records.back().step != last_iter)) {
    emit(last_iter, last_value, last_theta);
  }
  return result;
}

std::optional<std::int64_t> steps_to_threshold(std::span<const TrainRecord> records, double threshold) {
  for (const auto& r : records) {
    if (r.infidelity <= threshold) return r.step;
  }
  return std::nullopt;
}

}  // namespace efftemp::optimize
