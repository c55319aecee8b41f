#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "nmodes/dynamics.hpp"
#include "nmodes/integrate.hpp"
#include "nmodes/modal.hpp"
#include "nmodes/model.hpp"
#include "nmodes/types.hpp"

namespace nmodes {

/// Zero-velocity initial condition of a periodic orbit, with solver records.
struct GeneratorPoint {
  VectorXd q0;           // configuration, qd = 0
  double T = 0.0;        // period, s
  double E = 0.0;        // energy = potential(q0), J
  int newton_iters = 0;
  double residual_norm = 0.0;  // achieved |r|_inf
};

/// One mode's family of periodic orbits, parameterized by energy.
struct Eigenmanifold {
  int mode_index = 0;  // 1-based, ascending-frequency order
  double omega = 0.0;  // linear frequency seed, rad/s
  VectorXd shape;      // linear eigenvector seed
  std::vector<GeneratorPoint> points;  // strictly increasing in E
  std::string model_fingerprint;
  std::string model_label;
  bool truncated = false;   // energy step underflowed before reaching e_max
  std::string diagnostic;   // non-empty when truncated or aborted
};

/// A generator point materialized as one period of motion.
struct ModeTrajectory {
  GeneratorPoint source;
  Trajectory trajectory;
};

struct ContinuationOptions {
  double de_ref = 0.05;      // reference energy step, J
  double e_max = 1.0;        // stop once a converged point reaches this, J
  int n_max = 15;            // Newton iterations per correction
  double shoot_tol = 1e-8;   // |r|_inf threshold, scaled by 1 + |q0|_inf
  double energy_tol = 1e-10; // |E - E_target| threshold, scaled by max(1, E_target)
  OdeOptions ode;
};

/// Periodicity defect r(q0, T) = (q0 - q(T); -qd(T)) from a zero-velocity start.
inline VectorXd shooting_residual(const MechanicalModel& model, const VectorXd& q0, double T,
                                  const OdeOptions& ode = {}) {
  if (!(T > 0.0)) throw DomainError("shooting_residual: period must be positive");
  const State end = flow(model, State::rest(q0), T, ode);
  const int n = model.n_dofs();
  VectorXd r(2 * n);
  r.head(n) = q0 - end.q;
  r.tail(n) = -end.qd;
  return r;
}

/// Linear-mode seed: q0 = q_eq + alpha c_i with 1/2 alpha^2 c^T K c = de.
inline std::pair<VectorXd, double> bootstrap_first_point(const MechanicalModel& model,
                                                         const LinearModeSet& linear,
                                                         int mode_index, double de) {
  (void)model;
  if (mode_index < 1 || mode_index > linear.omegas.size())
    throw DomainError("bootstrap_first_point: mode index out of range");
  if (!(de > 0.0)) throw DomainError("bootstrap_first_point: energy step must be positive");
  const VectorXd c = linear.shapes.col(mode_index - 1);
  const double curvature = c.dot(linear.stiffness * c);
  double alpha = std::sqrt(2.0 * de / curvature);
  const double cmax = c.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (std::abs(c[i]) > 1e-12 * cmax) {
      if (c[i] < 0.0) alpha = -alpha;
      break;
    }
  }
  return {linear.q_eq + alpha * c, 2.0 * std::numbers::pi / linear.omegas[mode_index - 1]};
}

namespace detail {

/// r and the terminal state it came from (reused for the analytic dr/dT).
struct Residual {
  VectorXd r;
  State end;
};

inline Residual eval_residual(const MechanicalModel& model, const VectorXd& q0, double T,
                              const OdeOptions& ode) {
  Residual out{VectorXd(2 * model.n_dofs()), flow(model, State::rest(q0), T, ode)};
  const int n = model.n_dofs();
  out.r.head(n) = q0 - out.end.q;
  out.r.tail(n) = -out.end.qd;
  return out;
}

/**
 * Jacobian [dr/dq0, dr/dT], 2n x (n+1): monodromy columns by forward
 * differences (step 1e-6 * (1 + |q0_i|)), period column analytic,
 * dr/dT = (-qd(T); -qdd(T)).
 */
inline MatrixXd shooting_jacobian(const MechanicalModel& model, const VectorXd& q0, double T,
                                  const Residual& base, const OdeOptions& ode) {
  const int n = model.n_dofs();
  MatrixXd jac(2 * n, n + 1);
  VectorXd qp = q0;
  for (int i = 0; i < n; ++i) {
    const double h = 1e-6 * (1.0 + std::abs(q0[i]));
    qp[i] = q0[i] + h;
    const State end = flow(model, State::rest(qp), T, ode);
    qp[i] = q0[i];
    jac.col(i).head(n) = (qp - end.q - base.r.head(n)) / h;
    jac.col(i)[i] += 1.0;  // d(q0_i)/d(q0_i) of the perturbed first block
    jac.col(i).tail(n) = (-end.qd - base.r.tail(n)) / h;
  }
  jac.col(n).head(n) = -base.end.qd;
  jac.col(n).tail(n) = -accelerations(model, base.end);
  return jac;
}

}  // namespace detail

struct CorrectResult {
  GeneratorPoint point;
  bool converged = false;
  MatrixXd jacobian;  // last built [dr/dq0, dr/dT]; empty if no iteration ran
  std::vector<double> residual_history;  // |r|_inf per evaluation, first to last
};

/**
 * Newton correction of (q0, T) toward a periodic orbit at the target energy.
 *
 * Each step solves the augmented system
 *
 *    [ dr/dq0  dr/dT ] [dq0]     [ r               ]
 *    [ dV/dq0    0   ] [dT ] = - [ E(q0) - E_target]
 *
 * (2n+1 equations, n+1 unknowns) in the least-squares sense by column-pivoted
 * QR. Convergence requires |r|_inf < shoot_tol*(1+|q0|_inf) and
 * |E - E_target| < energy_tol*max(1, E_target).
 */
inline CorrectResult correct(const MechanicalModel& model, const VectorXd& q0_pred,
                             double T_pred, double e_target,
                             const ContinuationOptions& opts = {}) {
  const int n = model.n_dofs();
  CorrectResult out;
  VectorXd q0 = q0_pred;
  double T = T_pred;
  double best_rnorm = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int iter = 0; iter <= opts.n_max; ++iter) {
    if (!(T > 0.0)) return out;  // left the feasible region: report non-convergence
    const detail::Residual res = detail::eval_residual(model, q0, T, opts.ode);
    const double rnorm = res.r.lpNorm<Eigen::Infinity>();
    const double e = model.potential(q0);
    out.residual_history.push_back(rnorm);
    out.point = {q0, T, e, iter, rnorm};

    if (rnorm < opts.shoot_tol * (1.0 + q0.lpNorm<Eigen::Infinity>()) &&
        std::abs(e - e_target) < opts.energy_tol * std::max(1.0, e_target)) {
      out.converged = true;
      return out;
    }
    if (iter == opts.n_max) return out;
    // Newton converges quadratically here; a plateau means the residual hit
    // the integration-accuracy floor and further iterations cannot help.
    if (rnorm < 0.9 * best_rnorm) {
      best_rnorm = rnorm;
      stalled = 0;
    } else if (++stalled >= 5) {
      return out;
    }

    out.jacobian = detail::shooting_jacobian(model, q0, T, res, opts.ode);
    MatrixXd aug(2 * n + 1, n + 1);
    aug.topRows(2 * n) = out.jacobian;
    aug.row(2 * n).head(n) = model.potential_gradient(q0).transpose();
    aug(2 * n, n) = 0.0;
    VectorXd rhs(2 * n + 1);
    rhs.head(2 * n) = res.r;
    rhs[2 * n] = e - e_target;

    const VectorXd step = aug.colPivHouseholderQr().solve(-rhs);
    q0 += step.head(n);
    T += step[n];
  }
  return out;
}

/**
 * Tangent prediction along the energy-parameterized branch.
 *
 * The tangent is the kernel direction of [dr/dq0, dr/dT] (right singular
 * vector of the smallest singular value), oriented uphill in energy; the
 * step is scaled so the first-order energy increment equals de. Throws
 * BranchPointError when the Jacobian has a second near-zero singular value
 * or the tangent is orthogonal to the energy gradient.
 */
inline std::pair<VectorXd, double> predict(const MechanicalModel& model,
                                           const GeneratorPoint& last, double de,
                                           const ContinuationOptions& opts = {},
                                           const MatrixXd* jacobian = nullptr) {
  const int n = model.n_dofs();
  MatrixXd jac;
  if (jacobian && jacobian->rows() == 2 * n && jacobian->cols() == n + 1) {
    jac = *jacobian;
  } else {
    const detail::Residual res = detail::eval_residual(model, last.q0, last.T, opts.ode);
    jac = detail::shooting_jacobian(model, last.q0, last.T, res, opts.ode);
  }

  Eigen::JacobiSVD<MatrixXd> svd(jac, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  if (sv.size() >= 2 && sv[sv.size() - 2] < 1e-10 * sv[0])
    throw BranchPointError(
        "predict: shooting Jacobian is rank-deficient (two vanishing singular values); "
        "likely mode interaction or bifurcation at E = " + std::to_string(last.E));

  VectorXd t = svd.matrixV().col(n);
  const VectorXd grad = model.potential_gradient(last.q0);
  double slope = grad.dot(t.head(n));
  if (std::abs(slope) < 1e-12 * (1.0 + grad.norm()))
    throw BranchPointError("predict: branch tangent is orthogonal to the energy gradient at E = " +
                           std::to_string(last.E));
  if (slope < 0.0) {
    t = -t;
    slope = -slope;
  }
  const double alpha = de / slope;
  return {last.q0 + alpha * t.head(n), last.T + alpha * t[n]};
}

/**
 * Full predictor-corrector sweep of one mode from the linear regime to
 * e_max. The energy step starts at de_ref, halves on corrector failure,
 * doubles back toward de_ref after successes at a reduced step, and a drop
 * below de_ref/2^10 truncates the sweep (partial result, flagged).
 */
inline Eigenmanifold compute_generator(const MechanicalModel& model,
                                       const LinearModeSet& linear, int mode_index,
                                       const ContinuationOptions& opts = {}) {
  if (mode_index < 1 || mode_index > linear.omegas.size())
    throw DomainError("compute_generator: mode index out of range");
  if (!(opts.de_ref > 0.0)) throw DomainError("compute_generator: de_ref must be positive");

  Eigenmanifold mf;
  mf.mode_index = mode_index;
  mf.omega = linear.omegas[mode_index - 1];
  mf.shape = linear.shapes.col(mode_index - 1);
  mf.model_fingerprint = model.fingerprint();
  mf.model_label = model.label();

  const double e_eq = model.potential(linear.q_eq);
  const double de_min = opts.de_ref / 1024.0;
  double de = opts.de_ref;
  MatrixXd last_jacobian;

  auto attempt = [&](const VectorXd& q0_pred, double t_pred, double e_target) -> bool {
    CorrectResult res;
    try {
      res = correct(model, q0_pred, t_pred, e_target, opts);
    } catch (const StiffnessError&) {
      return false;  // integrator gave up on this trial: treat as corrector failure
    } catch (const DivergenceError&) {
      return false;
    } catch (const SingularMassError&) {
      return false;
    }
    if (!res.converged) return false;
    mf.points.push_back(res.point);
    last_jacobian = std::move(res.jacobian);
    return true;
  };

  while (mf.points.empty() || mf.points.back().E < opts.e_max) {
    const double e_base = mf.points.empty() ? e_eq : mf.points.back().E;
    bool stepped = false;
    try {
      if (mf.points.empty()) {
        const auto [q0, t0] = bootstrap_first_point(model, linear, mode_index, de);
        stepped = attempt(q0, t0, e_base + de);
      } else {
        const MatrixXd* jac = last_jacobian.size() > 0 ? &last_jacobian : nullptr;
        const auto [q0, t0] = predict(model, mf.points.back(), de, opts, jac);
        stepped = attempt(q0, t0, e_base + de);
      }
    } catch (const BranchPointError& e) {
      mf.diagnostic = e.what();
      return mf;
    }

    if (stepped) {
      if (de < opts.de_ref) de = std::min(opts.de_ref, 2.0 * de);
    } else {
      de *= 0.5;
      if (de < de_min) {
        mf.truncated = true;
        mf.diagnostic = "energy step underflowed below de_ref/2^10 at E = " +
                        std::to_string(e_base);
        return mf;
      }
    }
  }
  return mf;
}

/// One period of motion from a generator point, on a uniform inclusive grid.
inline ModeTrajectory mode_trajectory(const MechanicalModel& model, const GeneratorPoint& point,
                                      int sample_count = 512, const OdeOptions& ode = {}) {
  ModeTrajectory out;
  out.source = point;
  out.trajectory = integrate(model, State::rest(point.q0), point.T, sample_count, ode);
  return out;
}

}  // namespace nmodes
