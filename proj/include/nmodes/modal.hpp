#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

#include "nmodes/dynamics.hpp"
#include "nmodes/model.hpp"
#include "nmodes/types.hpp"

namespace nmodes {

/// Small-oscillation data at a stable equilibrium.
struct LinearModeSet {
  VectorXd q_eq;
  MatrixXd mass;       // M(q_eq)
  MatrixXd stiffness;  // d2V/dq2 at q_eq, symmetric positive definite
  VectorXd omegas;     // natural frequencies, rad/s, ascending
  MatrixXd shapes;     // columns c_i, M-orthonormal: shapes^T M shapes = I
};

/**
 * Equilibrium of the potential near q_guess: damped Newton on dV/dq with a
 * halving line search on the gradient norm.
 *
 * Converges when the gradient infinity norm drops below 1e-10; throws
 * ConvergenceError after 50 iterations or when no step reduces the norm.
 */
inline VectorXd find_equilibrium(const MechanicalModel& model, const VectorXd& q_guess,
                                 double grad_tol = 1e-10, int max_iters = 50) {
  model.check_dimension(q_guess, "find_equilibrium: q_guess");
  VectorXd q = q_guess;
  VectorXd g = model.potential_gradient(q);

  for (int iter = 0; iter < max_iters; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < grad_tol) return q;

    const MatrixXd k = potential_hessian(model, q);
    Eigen::FullPivLU<MatrixXd> lu(k);
    VectorXd dq = lu.isInvertible() ? VectorXd(lu.solve(-g)) : VectorXd(-g);

    const double g0 = g.lpNorm<Eigen::Infinity>();
    double step = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half, step *= 0.5) {
      const VectorXd q_try = q + step * dq;
      const VectorXd g_try = model.potential_gradient(q_try);
      if (g_try.allFinite() && g_try.lpNorm<Eigen::Infinity>() < g0) {
        q = q_try;
        g = g_try;
        improved = true;
        break;
      }
    }
    if (!improved)
      throw ConvergenceError("find_equilibrium: no descent step reduces the gradient norm");
  }
  if (g.lpNorm<Eigen::Infinity>() < grad_tol) return q;
  throw ConvergenceError("find_equilibrium: gradient norm still " +
                         std::to_string(g.lpNorm<Eigen::Infinity>()) + " after max iterations");
}

/**
 * Generalized eigenproblem K c = omega^2 M c at a stable equilibrium.
 *
 * Frequencies ascend; shapes are M-orthonormal with the largest-magnitude
 * component of each column made positive. Throws UnstableEquilibriumError
 * when K is not positive definite at q_eq.
 */
inline LinearModeSet linearize(const MechanicalModel& model, const VectorXd& q_eq) {
  model.check_dimension(q_eq, "linearize: q_eq");
  const VectorXd g = model.potential_gradient(q_eq);
  if (g.lpNorm<Eigen::Infinity>() >= 1e-8)
    throw DomainError("linearize: q_eq is not an equilibrium (|dV/dq| = " +
                      std::to_string(g.lpNorm<Eigen::Infinity>()) + ")");

  LinearModeSet out;
  out.q_eq = q_eq;
  out.mass = model.mass_matrix(q_eq);
  out.stiffness = potential_hessian(model, q_eq);

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> eig(out.stiffness, out.mass,
                                                         Eigen::ComputeEigenvectors |
                                                             Eigen::Ax_lBx);
  if (eig.info() != Eigen::Success)
    throw SingularMassError("linearize: generalized eigensolver failed (M not SPD?)");

  const VectorXd lambda = eig.eigenvalues();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() <= 1e-12 * std::max(lmax, 1.0))
    throw UnstableEquilibriumError(
        "linearize: stiffness matrix is not positive definite at q_eq");

  out.omegas = lambda.cwiseSqrt();
  out.shapes = eig.eigenvectors();
  for (Eigen::Index j = 0; j < out.shapes.cols(); ++j) {
    Eigen::Index imax;
    out.shapes.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.shapes(imax, j) < 0.0) out.shapes.col(j) = -out.shapes.col(j);
  }
  return out;
}

}  // namespace nmodes
