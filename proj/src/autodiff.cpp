#include "efftemp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "efftemp/errors.hpp"
#include "efftemp/rng.hpp"

namespace efftemp::autodiff {

double objective_value(const ansatz::AnsatzSpec& spec, std::span<const double> theta,
                       const objectives::Objective& objective) {
  const auto psi = ansatz::forward(spec, theta);
  return objectives::evaluate(objective, psi);
}

GradReport grad_objective(const ansatz::AnsatzSpec& spec, std::span<const double> theta,
                          const objectives::Objective& objective) {
  const auto psi = ansatz::forward(spec, theta);
  if (!numerics::all_finite(psi)) throw NumericalError("grad_objective: forward produced non-finite amplitudes");
  const auto vc = objectives::evaluate_with_cotangent(objective, psi);
  GradReport r;
  r.value = vc.value;
  r.gradient = ansatz::pullback(spec, theta, vc.cotangent);
  if (!std::isfinite(r.value) || !numerics::all_finite(r.gradient)) {
    throw NumericalError("grad_objective: non-finite objective or gradient");
  }
  return r;
}

double fd_relative_error(double analytic, double numeric, double value) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-4 * std::max(1.0, std::abs(value))});
  return std::abs(analytic - numeric) / scale;
}

FdCheck finite_difference_check(const ansatz::AnsatzSpec& spec, std::span<const double> theta,
                                const objectives::Objective& objective, std::uint64_t seed, std::size_t count,
                                double step) {
  if (!(step > 0.0)) throw ValidationError("finite_difference_check: step must be positive");
  const auto report = grad_objective(spec, theta, objective);

  // Partial Fisher-Yates over the coordinate indices.
  std::vector<std::size_t> order(theta.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t picks = std::min(count, order.size());
  const CounterRng rng(seed, "gradcheck-coordinates");
  for (std::size_t i = 0; i < picks; ++i) {
    const std::size_t span = order.size() - i;
    const std::size_t j = i + static_cast<std::size_t>(rng.bits(i) % span);
    std::swap(order[i], order[j]);
  }
  order.resize(picks);
  std::sort(order.begin(), order.end());

  FdCheck out;
  out.value = report.value;
  std::vector<double> work(theta.begin(), theta.end());
  for (const auto k : order) {
    const double orig = work[k];
    work[k] = orig + step;
    const double fp = objective_value(spec, work, objective);
    work[k] = orig - step;
    const double fm = objective_value(spec, work, objective);
    work[k] = orig;
    FdCoordinate c;
    c.index = k;
    c.analytic = report.gradient[k];
    c.numeric = (fp - fm) / (2.0 * step);
    c.rel_error = fd_relative_error(c.analytic, c.numeric, report.value);
    out.max_rel_error = std::max(out.max_rel_error, c.rel_error);
    out.coordinates.push_back(c);
  }
  return out;
}

}  // namespace efftemp::autodiff
