#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nmodes/types.hpp"

namespace nmodes {

/**
 * Uniform interface to a conservative multi-body mechanical model:
 *
 *    M(q) qdd + c(q, qd) + dV/dq = 0
 *
 * plus the backbone task map h(q, s) for s in [0, rest_length()].
 *
 * Implementations must be immutable after construction; every evaluation is
 * a pure function of its arguments and safe to call from many threads.
 */
class MechanicalModel {
 public:
  virtual ~MechanicalModel() = default;

  virtual int n_dofs() const = 0;

  /// Symmetric positive definite mass matrix M(q).
  virtual MatrixXd mass_matrix(const VectorXd& q) const = 0;

  /// Potential energy V(q), normalized so that V(q_eq) = 0.
  virtual double potential(const VectorXd& q) const = 0;

  /// Gradient of the potential, dV/dq.
  virtual VectorXd potential_gradient(const VectorXd& q) const = 0;

  /**
   * Coriolis/centrifugal vector c(q, qd).
   *
   * The default evaluates the Christoffel contraction
   *    c = sum_k qd_k dM/dq_k qd - 1/2 [qd^T dM/dq_k qd]_k
   * with dM/dq_k from mass_matrix_partials(); models with cheaper exact
   * kinematic recursions override this.
   */
  virtual VectorXd coriolis(const VectorXd& q, const VectorXd& qd) const {
    const int n = n_dofs();
    std::vector<MatrixXd> dM = mass_matrix_partials(q);
    VectorXd c = VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
      c += qd[k] * (dM[k] * qd);
      c[k] -= 0.5 * qd.dot(dM[k] * qd);
    }
    return c;
  }

  /// Partial derivatives dM/dq_k, central differences with step 1e-6.
  virtual std::vector<MatrixXd> mass_matrix_partials(const VectorXd& q) const {
    const int n = n_dofs();
    const double h = 1e-6;
    std::vector<MatrixXd> dM(n);
    VectorXd qp = q;
    for (int k = 0; k < n; ++k) {
      qp[k] = q[k] + h;
      MatrixXd mp = mass_matrix(qp);
      qp[k] = q[k] - h;
      dM[k] = (mp - mass_matrix(qp)) / (2.0 * h);
      qp[k] = q[k];
    }
    return dM;
  }

  /// Backbone point position at arc length s in [0, rest_length()], meters.
  virtual Vector3d task_position(const VectorXd& q, double s) const = 0;

  /// Rest length L of the backbone; the task hyper-parameter domain is [0, L].
  virtual double rest_length() const = 0;

  /// Hash of the normative parameter set; empty for ad-hoc models.
  const std::string& fingerprint() const { return fingerprint_; }
  void set_fingerprint(std::string fp) { fingerprint_ = std::move(fp); }

  /// Short human-readable tag used in CSV output, e.g. "pcc-3".
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  void check_dimension(const VectorXd& v, const char* what) const {
    if (v.size() != n_dofs())
      throw DimensionError(std::string(what) + ": vector length " +
                           std::to_string(v.size()) + " does not match model with " +
                           std::to_string(n_dofs()) + " DoFs");
  }

 private:
  std::string fingerprint_;
  std::string label_;
};

using ModelPtr = std::shared_ptr<const MechanicalModel>;

}  // namespace nmodes
