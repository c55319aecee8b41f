#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include "nmodes/continuation.hpp"
#include "nmodes/metrics/coherence.hpp"
#include "nmodes/metrics/frechet.hpp"
#include "nmodes/modal.hpp"
#include "nmodes/parallel.hpp"
#include "nmodes/quadrature.hpp"
#include "nmodes/types.hpp"

namespace nmodes {

/// One component of the backbone map over one mode period at fixed arc length.
struct TaskCurve {
  char component = 'x';  // 'x' | 'y' | 'z'
  double s = 0.0;        // arc-length hyper-parameter, m
  double E = 0.0;        // J
  double T = 0.0;        // s
  VectorXd values;       // endpoint-inclusive uniform time samples
};

inline int component_index(char c) {
  if (c == 'x') return 0;
  if (c == 'y') return 1;
  if (c == 'z') return 2;
  throw DomainError(std::string("component must be x, y, or z, got '") + c + "'");
}

struct MetricOptions {
  int curve_samples = 512;
  int s_quad_points = 10;   // Gauss-Legendre nodes for integrals over s
  int tile_periods = 8;     // periods of the slower mode in coherence signals
  int resample_count = 4096;
  CoherenceOptions coherence;
  ContinuationOptions continuation;  // re-correction and integration settings
};

/**
 * Generator point of the manifold at the requested energy: a stored point
 * when one matches within 1e-9, otherwise a linear (q0, T) interpolation
 * between the bracketing points re-converged by the shooting corrector.
 */
inline GeneratorPoint point_at_energy(const MechanicalModel& model, const Eigenmanifold& mf,
                                      double e, const ContinuationOptions& opts = {}) {
  if (mf.points.empty()) throw RangeError("point_at_energy: manifold has no points");
  const double tol = 1e-9 * std::max(1.0, std::abs(e));
  for (const GeneratorPoint& p : mf.points)
    if (std::abs(p.E - e) <= tol) return p;
  if (e < mf.points.front().E - tol || e > mf.points.back().E + tol)
    throw RangeError("point_at_energy: E = " + std::to_string(e) + " outside branch [" +
                     std::to_string(mf.points.front().E) + ", " +
                     std::to_string(mf.points.back().E) + "]");

  std::size_t j = 0;
  while (j + 2 < mf.points.size() && mf.points[j + 1].E < e) ++j;
  const GeneratorPoint& lo = mf.points[j];
  const GeneratorPoint& hi = mf.points[j + 1];
  const double w = (e - lo.E) / (hi.E - lo.E);
  VectorXd q0 = (1.0 - w) * lo.q0 + w * hi.q0;
  double t_seed = (1.0 - w) * lo.T + w * hi.T;

  // The shooting residual of a true orbit, evaluated at a given integration
  // tolerance, bottoms out at that integration's global error; on orbits
  // where the floor sits above shoot_tol the correction can only succeed
  // with a more accurate flow, so retries tighten the integrator while the
  // orbit acceptance threshold itself stays fixed.
  ContinuationOptions copts = opts;
  for (;;) {
    const CorrectResult res = correct(model, q0, t_seed, e, copts);
    if (res.converged) return res.point;
    if (res.point.T > 0.0 && res.point.q0.allFinite()) {
      q0 = res.point.q0;  // best iterate so far seeds the next rung
      t_seed = res.point.T;
    }
    const double next = std::max(1e-13, 1e-2 * copts.ode.abs_tol);
    if (next >= copts.ode.abs_tol)
      throw ConvergenceError("point_at_energy: interpolated seed did not re-converge at E = " +
                             std::to_string(e));
    copts.ode.abs_tol = next;
    copts.ode.rel_tol = std::max(1e-13, 1e-2 * copts.ode.rel_tol);
  }
}

/// Projection of a sampled orbit onto one backbone component at arc length s.
inline TaskCurve project_curve(const MechanicalModel& model, const GeneratorPoint& point,
                               const Trajectory& traj, char component, double s) {
  if (traj.size() < 64) throw DomainError("project_curve: need at least 64 samples");
  const int ci = component_index(component);
  TaskCurve out;
  out.component = component;
  out.s = s;
  out.E = point.E;
  out.T = point.T;
  out.values.resize(traj.size());
  for (Eigen::Index k = 0; k < traj.size(); ++k)
    out.values[k] = model.task_position(traj.states[k].q, s)[ci];
  return out;
}

namespace detail {

/// Orbit of one manifold at one energy, reusable across s and components.
struct EnergySlice {
  GeneratorPoint point;
  Trajectory trajectory;
};

inline EnergySlice energy_slice(const MechanicalModel& model, const Eigenmanifold& mf, double e,
                                const MetricOptions& opts) {
  EnergySlice slice;
  slice.point = point_at_energy(model, mf, e, opts.continuation);
  slice.trajectory = integrate(model, State::rest(slice.point.q0), slice.point.T,
                               opts.curve_samples, opts.continuation.ode);
  return slice;
}

/**
 * Periodic extension of an endpoint-inclusive one-period sample set,
 * resampled at `count` uniform times over `duration` by centripetal-free
 * (uniform) Catmull-Rom cubic interpolation with periodic wraparound.
 */
inline VectorXd periodic_resample(const VectorXd& values, double period, double duration,
                                  int count) {
  const Eigen::Index nbase = values.size() - 1;  // distinct samples per period
  if (nbase < 4) throw DomainError("periodic_resample: need at least 5 samples per period");
  VectorXd out(count);
  for (int k = 0; k < count; ++k) {
    const double t = duration * k / count;
    double u = std::fmod(t, period) / period;
    if (u < 0.0) u += 1.0;
    const double x = u * static_cast<double>(nbase);
    Eigen::Index i = std::min(static_cast<Eigen::Index>(x), nbase - 1);
    const double f = x - static_cast<double>(i);
    const double y0 = values[(i + nbase - 1) % nbase];
    const double y1 = values[i];
    const double y2 = values[(i + 1) % nbase];
    const double y3 = values[(i + 2) % nbase];
    out[k] = y1 + 0.5 * f *
                      (y2 - y0 +
                       f * (2.0 * y0 - 5.0 * y1 + 4.0 * y2 - y3 +
                            f * (3.0 * (y1 - y2) + y3 - y0)));
  }
  return out;
}

/// Min MSC of two one-period curves tiled to a shared duration and rate.
inline double coherence_of_curves(const TaskCurve& a, const TaskCurve& b,
                                  const MetricOptions& opts, bool* degenerate) {
  const double duration = opts.tile_periods * std::max(a.T, b.T);
  const double rate = opts.resample_count / duration;
  const VectorXd sa = periodic_resample(a.values, a.T, duration, opts.resample_count);
  const VectorXd sb = periodic_resample(b.values, b.T, duration, opts.resample_count);
  return min_msc_coherence(sa, sb, rate, opts.coherence, degenerate);
}

}  // namespace detail

/// Componentwise Fréchet distance f(E, s) between two projected modes.
inline Vector3d modal_frechet(const MechanicalModel& ma, const Eigenmanifold& fa,
                              const MechanicalModel& mb, const Eigenmanifold& fb, double e,
                              double s, const MetricOptions& opts = {}) {
  const detail::EnergySlice sa = detail::energy_slice(ma, fa, e, opts);
  const detail::EnergySlice sb = detail::energy_slice(mb, fb, e, opts);
  Vector3d out;
  for (char c : {'x', 'y', 'z'})
    out[component_index(c)] =
        discrete_frechet(project_curve(ma, sa.point, sa.trajectory, c, s).values,
                         project_curve(mb, sb.point, sb.trajectory, c, s).values);
  return out;
}

/// F(E) = integral of f(E, s) over s in [0, min(L_a, L_b)], 10-point quadrature.
inline Vector3d modal_integral_frechet(const MechanicalModel& ma, const Eigenmanifold& fa,
                                       const MechanicalModel& mb, const Eigenmanifold& fb,
                                       double e, const MetricOptions& opts = {}) {
  const detail::EnergySlice sa = detail::energy_slice(ma, fa, e, opts);
  const detail::EnergySlice sb = detail::energy_slice(mb, fb, e, opts);
  const double len = std::min(ma.rest_length(), mb.rest_length());
  const GaussLegendre quad(opts.s_quad_points);
  Vector3d out = Vector3d::Zero();
  for (int i = 0; i < opts.s_quad_points; ++i) {
    const double s = 0.5 * len * (1.0 + quad.nodes[i]);
    const double w = 0.5 * len * quad.weights[i];
    for (char c : {'x', 'y', 'z'})
      out[component_index(c)] +=
          w * discrete_frechet(project_curve(ma, sa.point, sa.trajectory, c, s).values,
                               project_curve(mb, sb.point, sb.trajectory, c, s).values);
  }
  return out;
}

/// Componentwise minimum magnitude-squared coherence g(E, s).
inline Vector3d modal_coherence(const MechanicalModel& ma, const Eigenmanifold& fa,
                                const MechanicalModel& mb, const Eigenmanifold& fb, double e,
                                double s, const MetricOptions& opts = {}) {
  const detail::EnergySlice sa = detail::energy_slice(ma, fa, e, opts);
  const detail::EnergySlice sb = detail::energy_slice(mb, fb, e, opts);
  Vector3d out;
  for (char c : {'x', 'y', 'z'})
    out[component_index(c)] =
        detail::coherence_of_curves(project_curve(ma, sa.point, sa.trajectory, c, s),
                                    project_curve(mb, sb.point, sb.trajectory, c, s), opts,
                                    nullptr);
  return out;
}

/// G(E) = integral of g(E, s) over s, same quadrature as the Fréchet integral.
inline Vector3d modal_integral_coherence(const MechanicalModel& ma, const Eigenmanifold& fa,
                                         const MechanicalModel& mb, const Eigenmanifold& fb,
                                         double e, const MetricOptions& opts = {}) {
  const detail::EnergySlice sa = detail::energy_slice(ma, fa, e, opts);
  const detail::EnergySlice sb = detail::energy_slice(mb, fb, e, opts);
  const double len = std::min(ma.rest_length(), mb.rest_length());
  const GaussLegendre quad(opts.s_quad_points);
  Vector3d out = Vector3d::Zero();
  for (int i = 0; i < opts.s_quad_points; ++i) {
    const double s = 0.5 * len * (1.0 + quad.nodes[i]);
    const double w = 0.5 * len * quad.weights[i];
    for (char c : {'x', 'y', 'z'})
      out[component_index(c)] +=
          w * detail::coherence_of_curves(project_curve(ma, sa.point, sa.trajectory, c, s),
                                          project_curve(mb, sb.point, sb.trajectory, c, s),
                                          opts, nullptr);
  }
  return out;
}

struct EnergyFrequencyRow {
  double energy;    // J
  double omega;     // rad/s
  double freq_hz;
};

inline std::vector<EnergyFrequencyRow> energy_frequency_table(const Eigenmanifold& mf) {
  if (mf.points.empty()) throw DomainError("energy_frequency_table: manifold has no points");
  std::vector<EnergyFrequencyRow> rows;
  rows.reserve(mf.points.size());
  for (const GeneratorPoint& p : mf.points)
    rows.push_back({p.E, 2.0 * std::numbers::pi / p.T, 1.0 / p.T});
  return rows;
}

/**
 * Full similarity table of two manifolds on a shared energy grid
 * k * grid_de, k >= 1, clipped to the overlap of the two branches, with an
 * equilibrium row (E = E_eq, f = rest-shape mismatch, g = 1) prepended so
 * the energy integrals start at E_eq.
 */
struct ComparisonReport {
  std::string model_a, model_b;
  int mode = 0;
  double tip_s = 0.0;  // arc length used for the pointwise metrics
  std::vector<double> energies;
  std::vector<Vector3d> f_tip, g_tip;  // f(E, tip_s), g(E, tip_s)
  std::vector<Vector3d> f_int, g_int;  // F(E), G(E)
  Vector3d f_energy = Vector3d::Zero();  // F_E
  Vector3d g_energy = Vector3d::Zero();  // G_E
  std::array<bool, 3> coherence_degenerate = {false, false, false};
};

struct CompareOptions {
  double grid_de = 0.05;  // reporting grid pitch, J
  MetricOptions metrics;
};

inline ComparisonReport compare_manifolds(const MechanicalModel& ma, const Eigenmanifold& fa,
                                          const MechanicalModel& mb, const Eigenmanifold& fb,
                                          const CompareOptions& copts = {}) {
  if (fa.points.empty() || fb.points.empty())
    throw RangeError("compare: a manifold has no points; no energy overlap");
  const double e_lo = std::max(fa.points.front().E, fb.points.front().E);
  const double e_hi = std::min(fa.points.back().E, fb.points.back().E);
  if (e_lo > e_hi + 1e-9) throw RangeError("compare: no energy overlap between branches");

  std::vector<double> grid;
  for (int k = 1;; ++k) {
    const double e = k * copts.grid_de;
    if (e > e_hi + 1e-9 * std::max(1.0, e_hi)) break;
    if (e >= e_lo - 1e-9 * std::max(1.0, std::abs(e_lo))) grid.push_back(e);
  }
  if (grid.empty()) throw RangeError("compare: no energy overlap on the reporting grid");

  const MetricOptions& mo = copts.metrics;
  const double len = std::min(ma.rest_length(), mb.rest_length());
  const GaussLegendre quad(mo.s_quad_points);
  std::vector<double> s_nodes(mo.s_quad_points), s_weights(mo.s_quad_points);
  for (int i = 0; i < mo.s_quad_points; ++i) {
    s_nodes[i] = 0.5 * len * (1.0 + quad.nodes[i]);
    s_weights[i] = 0.5 * len * quad.weights[i];
  }

  ComparisonReport rep;
  rep.model_a = fa.model_label.empty() ? "model_a" : fa.model_label;
  rep.model_b = fb.model_label.empty() ? "model_b" : fb.model_label;
  rep.mode = fa.mode_index;
  rep.tip_s = len;

  const std::size_t rows = grid.size() + 1;
  rep.energies.resize(rows);
  rep.f_tip.assign(rows, Vector3d::Zero());
  rep.g_tip.assign(rows, Vector3d::Zero());
  rep.f_int.assign(rows, Vector3d::Zero());
  rep.g_int.assign(rows, Vector3d::Zero());

  // Equilibrium row: both models at rest; curves are constant points, so
  // the Fréchet distance is the rest-shape mismatch and coherence is 1.
  {
    const VectorXd qa = find_equilibrium(ma, VectorXd::Zero(ma.n_dofs()));
    const VectorXd qb = find_equilibrium(mb, VectorXd::Zero(mb.n_dofs()));
    rep.energies[0] = 0.5 * (ma.potential(qa) + mb.potential(qb));
    for (int c = 0; c < 3; ++c) {
      rep.g_tip[0][c] = 1.0;
      rep.g_int[0][c] = len;
    }
    auto rest_gap = [&](double s) {
      return (ma.task_position(qa, s) - mb.task_position(qb, s)).cwiseAbs().eval();
    };
    rep.f_tip[0] = rest_gap(len);
    for (int i = 0; i < mo.s_quad_points; ++i) rep.f_int[0] += s_weights[i] * rest_gap(s_nodes[i]);
  }

  std::array<std::atomic<int>, 3> tip_degenerate_count{};
  parallel_for(static_cast<int>(grid.size()), [&](int gi) {
    const double e = grid[static_cast<std::size_t>(gi)];
    const detail::EnergySlice sa = detail::energy_slice(ma, fa, e, mo);
    const detail::EnergySlice sb = detail::energy_slice(mb, fb, e, mo);
    const std::size_t row = static_cast<std::size_t>(gi) + 1;
    rep.energies[row] = e;
    for (char comp : {'x', 'y', 'z'}) {
      const int c = component_index(comp);
      const TaskCurve ca = project_curve(ma, sa.point, sa.trajectory, comp, len);
      const TaskCurve cb = project_curve(mb, sb.point, sb.trajectory, comp, len);
      rep.f_tip[row][c] = discrete_frechet(ca.values, cb.values);
      bool degen = false;
      rep.g_tip[row][c] = detail::coherence_of_curves(ca, cb, mo, &degen);
      if (degen) tip_degenerate_count[static_cast<std::size_t>(c)]++;
      for (int i = 0; i < mo.s_quad_points; ++i) {
        const TaskCurve qa = project_curve(ma, sa.point, sa.trajectory, comp, s_nodes[i]);
        const TaskCurve qb = project_curve(mb, sb.point, sb.trajectory, comp, s_nodes[i]);
        rep.f_int[row][c] += s_weights[i] * discrete_frechet(qa.values, qb.values);
        rep.g_int[row][c] += s_weights[i] * detail::coherence_of_curves(qa, qb, mo, nullptr);
      }
    }
  });
  for (int c = 0; c < 3; ++c)
    rep.coherence_degenerate[static_cast<std::size_t>(c)] =
        tip_degenerate_count[static_cast<std::size_t>(c)] == static_cast<int>(grid.size());

  for (std::size_t k = 0; k + 1 < rows; ++k) {
    const double de = rep.energies[k + 1] - rep.energies[k];
    rep.f_energy += 0.5 * de * (rep.f_int[k] + rep.f_int[k + 1]);
    rep.g_energy += 0.5 * de * (rep.g_int[k] + rep.g_int[k + 1]);
  }
  return rep;
}

/// Energy-integrated measures (F_E, G_E) per component.
inline std::pair<Vector3d, Vector3d> energy_integrated(const MechanicalModel& ma,
                                                       const Eigenmanifold& fa,
                                                       const MechanicalModel& mb,
                                                       const Eigenmanifold& fb,
                                                       const CompareOptions& copts = {}) {
  const ComparisonReport rep = compare_manifolds(ma, fa, mb, fb, copts);
  return {rep.f_energy, rep.g_energy};
}

}  // namespace nmodes
