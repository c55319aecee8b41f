#pragma once

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "nmodes/model.hpp"
#include "nmodes/types.hpp"

namespace nmodes {

/// Total energy E = 1/2 qd^T M(q) qd + V(q).
inline double energy(const MechanicalModel& model, const State& state) {
  model.check_dimension(state.q, "energy: q");
  model.check_dimension(state.qd, "energy: qd");
  const MatrixXd m = model.mass_matrix(state.q);
  return 0.5 * state.qd.dot(m * state.qd) + model.potential(state.q);
}

/**
 * Generalized accelerations qdd = -M(q)^{-1} (c(q, qd) + dV/dq).
 *
 * M is factorized (Cholesky, LU fallback), never inverted explicitly.
 * Throws SingularMassError when the estimated condition number of M
 * exceeds 1e12.
 */
inline VectorXd accelerations(const MechanicalModel& model, const State& state) {
  model.check_dimension(state.q, "accelerations: q");
  const MatrixXd m = model.mass_matrix(state.q);
  const VectorXd rhs = -(model.coriolis(state.q, state.qd) + model.potential_gradient(state.q));

  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    // Condition estimate from the Cholesky diagonal; adequate as a guard.
    const VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
    const double dmax = d.maxCoeff(), dmin = d.minCoeff();
    if (dmin <= 0.0 || (dmax / dmin) * (dmax / dmin) > 1e12)
      throw SingularMassError("accelerations: mass matrix condition estimate exceeds 1e12");
    return llt.solve(rhs);
  }

  Eigen::FullPivLU<MatrixXd> lu(m);
  if (!lu.isInvertible() || lu.rcond() < 1e-12)
    throw SingularMassError("accelerations: mass matrix is singular or near-singular");
  return lu.solve(rhs);
}

/// Instantaneous power residual |qd^T (M qdd + c + dV)|; zero for exact dynamics.
inline double power_residual(const MechanicalModel& model, const State& state) {
  const VectorXd qdd = accelerations(model, state);
  const VectorXd f = model.mass_matrix(state.q) * qdd +
                     model.coriolis(state.q, state.qd) +
                     model.potential_gradient(state.q);
  return std::abs(state.qd.dot(f));
}

/**
 * Hessian of the potential by central differences of the gradient,
 * step 1e-5 * max(1, |q_i|), symmetrized.
 */
inline MatrixXd potential_hessian(const MechanicalModel& model, const VectorXd& q) {
  model.check_dimension(q, "potential_hessian: q");
  const int n = model.n_dofs();
  MatrixXd k(n, n);
  VectorXd qp = q;
  for (int i = 0; i < n; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(q[i]));
    qp[i] = q[i] + h;
    const VectorXd gp = model.potential_gradient(qp);
    qp[i] = q[i] - h;
    const VectorXd gm = model.potential_gradient(qp);
    qp[i] = q[i];
    k.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (k + k.transpose());
}

}  // namespace nmodes
