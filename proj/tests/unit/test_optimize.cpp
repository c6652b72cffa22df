#include <gtest/gtest.h>

#include "efftemp/errors.hpp"
#include "efftemp/optimize.hpp"
#include "oracles.hpp"

using namespace efftemp;
using namespace efftemp::optimize;

TEST(Schedule, PaperRows) {
  Schedule mps{ScheduleKind::ExpHalving, 3e-3, 1000, 0};
  EXPECT_DOUBLE_EQ(lr_at(mps, 0), 3e-3);
  EXPECT_DOUBLE_EQ(lr_at(mps, 999), 3e-3);
  EXPECT_DOUBLE_EQ(lr_at(mps, 1000), 1.5e-3);
  Schedule peps{ScheduleKind::Constant, 8e-3, 1, 0};
  EXPECT_DOUBLE_EQ(lr_at(peps, 1000000), 8e-3);
  Schedule vmc{ScheduleKind::WarmThenConstant, 1e-3, 200, 800};
  EXPECT_DOUBLE_EQ(lr_at(vmc, 199), 1e-3);
  EXPECT_DOUBLE_EQ(lr_at(vmc, 200), 5e-4);
  EXPECT_DOUBLE_EQ(lr_at(vmc, 800), 1e-3 / 16);
  EXPECT_DOUBLE_EQ(lr_at(vmc, 100000), 1e-3 / 16);
  EXPECT_GT(lr_at(mps, 2000000), 0.0);
  Schedule bad{ScheduleKind::ExpHalving, 1e-3, 0, 0};
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW((Schedule{ScheduleKind::Constant, -1.0, 1, 0}).validate(), ValidationError);
}

TEST(Adam, FirstStepAndZeroGradient) {
  AdamConfig cfg;
  cfg.schedule = {ScheduleKind::Constant, 1e-2, 1, 0};
  Adam adam(cfg, 3);
  std::vector<double> th{1.0, -2.0, 0.5}, g{3.0, -0.25, 0.0};
  adam.step(th, g, 0);
  EXPECT_NEAR(th[0], 1.0 - 1e-2 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(th[1], -2.0 + 1e-2 * 0.25 / (0.25 + 1e-8), 1e-15);
  EXPECT_EQ(th[2], 0.5);
  std::vector<double> nan_g{std::nan(""), 0, 0};
  EXPECT_THROW(adam.step(th, nan_g, 1), NumericalError);
}

TEST(Adam, QuadraticBowl) {
  AdamConfig cfg;
  cfg.schedule = {ScheduleKind::Constant, 1e-2, 1, 0};
  std::vector<double> th = oracle::random_vector(10, 1);
  Adam adam(cfg, th.size());
  for (int s = 0; s < 5000; ++s) adam.step(th, th, s);
  double n = 0.0;
  for (double x : th) n += x * x;
  EXPECT_LT(std::sqrt(n), 1e-3);
}

TEST(Lbfgs, ConvexQuadratic) {
  const std::size_t n = 8;
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = 1.0 + static_cast<double>(i);
  auto fg = [&](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      f += 0.5 * diag[i] * (x[i] - 1.0) * (x[i] - 1.0);
      g[i] = diag[i] * (x[i] - 1.0);
    }
    return f;
  };
  LbfgsConfig cfg;
  cfg.max_iter = 40;
  cfg.grad_tol = 1e-11;
  const auto r = lbfgs_minimize(fg, std::vector<double>(n, 0.0), cfg);
  std::vector<double> g(n);
  fg(r.theta, g);
  double gn = 0.0;
  for (double v : g) gn += v * v;
  EXPECT_LT(std::sqrt(gn), 1e-10);
  EXPECT_LE(r.iterations, 40);
  for (std::size_t k = 1; k < r.values.size(); ++k) EXPECT_LE(r.values[k], r.values[k - 1]);
}

TEST(Lbfgs, Rosenbrock) {
  auto fg = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  LbfgsConfig cfg;
  cfg.max_iter = 500;
  const auto r = lbfgs_minimize(fg, {-1.2, 1.0}, cfg);
  EXPECT_LT(r.value, 1e-8);
  for (std::size_t k = 1; k < r.values.size(); ++k) EXPECT_LE(r.values[k], r.values[k - 1]);
}

TEST(Lbfgs, AlreadyOptimal) {
  auto fg = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2 * x[0];
    g[1] = 2 * x[1];
    return x[0] * x[0] + x[1] * x[1];
  };
  LbfgsConfig cfg;
  const auto r = lbfgs_minimize(fg, {0.0, 0.0}, cfg);
  EXPECT_LE(r.iterations, 1);
  EXPECT_NEAR(r.theta[0], 0.0, 1e-12);
  EXPECT_NEAR(r.theta[1], 0.0, 1e-12);
}

namespace {

struct Setup {
  model::Lattice lat = model::build_lattice(model::LatticeKind::Chain, 6, 1, true);
  model::XXZParams p = model::XXZParams::uniform(6, 1, 1, 0.8, 0.02);
  numerics::SparseRealMatrix h = model::build_hamiltonian(lat, p);
  model::Spectrum spectrum = model::full_spectrum(h, lat, p, true);
  objectives::TargetState target = objectives::build_ites(spectrum, 0.5);

  TrainProblem problem(ansatz::Variant v, objectives::ObjectiveKind kind) const {
    TrainProblem pr;
    pr.spec.variant = v;
    pr.spec.lattice = lat;
    pr.spec.bond_dim = 4;
    pr.spec.depth = 2;
    pr.objective = kind;
    pr.hamiltonian = &h;
    pr.target = &target;
    pr.spectrum = &spectrum;
    return pr;
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

TrainConfig adam_config(double lr, std::int64_t steps) {
  TrainConfig c;
  c.optimizer.adam.schedule = {ScheduleKind::Constant, lr, 1, 0};
  c.total_steps = steps;
  c.seed = 7;
  return c;
}

}  // namespace

TEST(Train, ZeroStepsGiveInitialRecordOnly) {
  const auto r = train(setup().problem(ansatz::Variant::MPS, objectives::ObjectiveKind::Energy), adam_config(1e-2, 0));
  ASSERT_EQ(r.records.size(), 1U);
  EXPECT_EQ(r.records[0].step, 0);
  EXPECT_TRUE(r.records[0].fit.has_value());
  EXPECT_EQ(r.status, TrainStatus::Completed);
}

TEST(Train, RecordsCadenceDeterminismAndVariationalBound) {
  const auto& s = setup();
  const auto pr = s.problem(ansatz::Variant::MPS, objectives::ObjectiveKind::Energy);
  auto cfg = adam_config(1e-2, 110);
  const auto a = train(pr, cfg), b = train(pr, cfg);
  std::vector<std::int64_t> steps;
  for (const auto& r : a.records) steps.push_back(r.step);
  EXPECT_EQ(steps, (std::vector<std::int64_t>{0, 25, 50, 75, 100, 110}));
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].loss, b.records[i].loss);
    EXPECT_EQ(a.records[i].fit->beta_tilde, b.records[i].fit->beta_tilde);
    EXPECT_GE(a.records[i].energy, s.spectrum.energy(0) - 1e-9);
    EXPECT_EQ(a.records[i].wall_ms, 0.0);
  }
  EXPECT_EQ(a.theta, b.theta);
  EXPECT_LT(a.records.back().loss, a.records.front().loss);
}

TEST(Train, VecFidelityConverges) {
  const auto pr = setup().problem(ansatz::Variant::VEC, objectives::ObjectiveKind::Infidelity);
  const auto r = train(pr, adam_config(2e-3, 600));
  EXPECT_LT(r.records.back().infidelity, 1e-6);
  EXPECT_TRUE(r.records.back().fit->mse.has_value());
}

TEST(Train, LbfgsRecordsAreNonIncreasing) {
  const auto pr = setup().problem(ansatz::Variant::VEC, objectives::ObjectiveKind::Infidelity);
  TrainConfig cfg;
  cfg.optimizer.kind = OptimizerKind::Lbfgs;
  cfg.total_steps = 60;
  cfg.record_every = 5;
  cfg.seed = 3;
  const auto r = train(pr, cfg);
  ASSERT_GE(r.records.size(), 2U);
  for (std::size_t k = 1; k < r.records.size(); ++k) {
    EXPECT_GT(r.records[k].step, r.records[k - 1].step);
    EXPECT_LE(r.records[k].loss, r.records[k - 1].loss);
  }
  EXPECT_LT(r.records.back().loss, 1e-6);
}

TEST(Train, InitialParamsOverrideAndValidation) {
  const auto& s = setup();
  auto pr = s.problem(ansatz::Variant::VEC, objectives::ObjectiveKind::Infidelity);
  auto cfg = adam_config(1e-3, 0);
  std::vector<double> exact(128, 0.0);
  for (std::size_t b = 0; b < 64; ++b) {
    exact[2 * b] = s.target.state[b].real();
    exact[2 * b + 1] = s.target.state[b].imag();
  }
  cfg.initial_params = exact;
  const auto r = train(pr, cfg);
  EXPECT_NEAR(r.records[0].infidelity, 0.0, 1e-14);
  EXPECT_NEAR(r.records[0].fit->beta_tilde, 0.5, 1e-8);
  cfg.initial_params = std::vector<double>(5, 0.0);
  EXPECT_THROW(train(pr, cfg), ValidationError);
}

TEST(StepsToThreshold, FirstCrossing) {
  std::vector<TrainRecord> recs(4);
  const double inf[] = {0.5, 1e-3, 1e-8, 1e-9};
  for (int i = 0; i < 4; ++i) {
    recs[static_cast<std::size_t>(i)].step = 10 * i;
    recs[static_cast<std::size_t>(i)].infidelity = inf[i];
  }
  EXPECT_EQ(steps_to_threshold(recs, 1e-7), 20);
  EXPECT_EQ(steps_to_threshold(recs, 0.6), 0);
  EXPECT_FALSE(steps_to_threshold(recs, 1e-12).has_value());
}
