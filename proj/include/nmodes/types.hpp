#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace nmodes {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::Vector3d;
using Eigen::VectorXd;

/// Base class of everything this library throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mass matrix singular or numerically unusable (condition estimate > 1e12).
class SingularMassError : public Error {
 public:
  using Error::Error;
};

/// Adaptive step size collapsed below machine resolution.
class StiffnessError : public Error {
 public:
  using Error::Error;
};

/// State left the finite range during integration.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver (equilibrium Newton, ...) failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Stiffness matrix at the candidate equilibrium is not positive definite.
class UnstableEquilibriumError : public Error {
 public:
  using Error::Error;
};

/// Model-spec or archive file malformed.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Requested value outside the data range (energy overlap, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Continuation Jacobian lost rank: likely mode crossing or bifurcation.
class BranchPointError : public Error {
 public:
  using Error::Error;
};

/// Configuration/velocity pair of an n-DoF model.
struct State {
  VectorXd q;
  VectorXd qd;

  State() = default;
  State(VectorXd q_, VectorXd qd_) : q(std::move(q_)), qd(std::move(qd_)) {
    if (q.size() != qd.size() || q.size() < 1)
      throw DimensionError("State: q and qd must have equal length n >= 1");
    if (!q.allFinite() || !qd.allFinite())
      throw DomainError("State: non-finite entry");
  }

  static State rest(VectorXd q_) {
    VectorXd zero = VectorXd::Zero(q_.size());
    return State(std::move(q_), std::move(zero));
  }

  Eigen::Index size() const { return q.size(); }
};

/// Time-sampled solution of the equations of motion on a uniform grid.
struct Trajectory {
  VectorXd times;               // strictly increasing, times[0] == 0
  std::vector<State> states;    // same length as times
  VectorXd energy_samples;      // E(states[k]), J

  Eigen::Index size() const { return times.size(); }
  double duration() const { return times.size() ? times[times.size() - 1] : 0.0; }
};

}  // namespace nmodes
