#pragma once

#include <algorithm>
#include <vector>

#include "nmodes/dynamics.hpp"
#include "nmodes/model.hpp"
#include "nmodes/ode.hpp"

namespace nmodes {

/// First-order form of the equations of motion: y = [q; qd], dy = [qd; qdd].
inline Dop853::Rhs equations_of_motion(const MechanicalModel& model) {
  const int n = model.n_dofs();
  return [&model, n](double, const VectorXd& y, VectorXd& dy) {
    if (!y.allFinite()) throw DivergenceError("equations_of_motion: non-finite state");
    const State s(y.head(n), y.tail(n));
    dy.resize(2 * n);
    dy.head(n) = s.qd;
    dy.tail(n) = accelerations(model, s);
  };
}

/// State of the flow map after `duration` seconds from `initial`.
inline State flow(const MechanicalModel& model, const State& initial, double duration,
                  const OdeOptions& opts = {}) {
  const int n = model.n_dofs();
  model.check_dimension(initial.q, "flow: q");
  VectorXd y0(2 * n);
  y0 << initial.q, initial.qd;
  const Dop853 stepper(equations_of_motion(model), opts);
  const VectorXd y1 = stepper.solve(0.0, y0, duration);
  return State(y1.head(n), y1.tail(n));
}

/**
 * Trajectory from `initial` over [0, duration], sampled on the inclusive
 * uniform grid t_k = k * duration / (n_samples - 1) by dense output.
 */
inline Trajectory integrate(const MechanicalModel& model, const State& initial,
                            double duration, int n_samples = 512,
                            const OdeOptions& opts = {}) {
  const int n = model.n_dofs();
  model.check_dimension(initial.q, "integrate: q");
  if (duration <= 0.0) throw DomainError("integrate: duration must be positive");
  if (n_samples < 2) throw DomainError("integrate: need at least 2 samples");

  std::vector<double> grid(n_samples);
  for (int k = 0; k < n_samples; ++k) grid[k] = duration * k / (n_samples - 1);
  grid.back() = duration;

  VectorXd y0(2 * n);
  y0 << initial.q, initial.qd;
  MatrixXd cols;
  const Dop853 stepper(equations_of_motion(model), opts);
  stepper.solve(0.0, y0, duration, grid, &cols);

  Trajectory traj;
  traj.times = Eigen::Map<const VectorXd>(grid.data(), n_samples);
  traj.states.reserve(n_samples);
  traj.energy_samples.resize(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    traj.states.emplace_back(cols.col(k).head(n), cols.col(k).tail(n));
    traj.energy_samples[k] = energy(model, traj.states.back());
  }
  return traj;
}

/// States at the given times in [0, duration], one integration pass.
inline std::vector<State> states_at_times(const MechanicalModel& model, const State& initial,
                                          double duration, const std::vector<double>& times,
                                          const OdeOptions& opts = {}) {
  const int n = model.n_dofs();
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&times](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<double> sorted(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double t = times[order[i]];
    if (t < 0.0 || t > duration * (1.0 + 1e-12))
      throw DomainError("states_at_times: time " + std::to_string(t) + " outside [0, " +
                        std::to_string(duration) + "]");
    sorted[i] = std::min(t, duration);
  }

  VectorXd y0(2 * n);
  y0 << initial.q, initial.qd;
  MatrixXd cols;
  const Dop853 stepper(equations_of_motion(model), opts);
  stepper.solve(0.0, y0, duration, sorted, &cols);

  std::vector<State> out(times.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    out[order[i]] = State(cols.col(static_cast<Eigen::Index>(i)).head(n),
                          cols.col(static_cast<Eigen::Index>(i)).tail(n));
  return out;
}

}  // namespace nmodes
