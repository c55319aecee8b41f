#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "nmodes/model.hpp"
#include "nmodes/quadrature.hpp"
#include "nmodes/types.hpp"

namespace nmodes {

/// Uniform slender rod bending in the (x,z) plane, base clamped at the origin.
struct SoftArmParams {
  double radius = 0.0;         // m
  double density = 0.0;        // kg/m^3
  double rest_length = 0.0;    // m
  double young_modulus = 0.0;  // Pa
  double poisson = 0.0;        // stored, unused by the planar bending models
  int n_bodies = 0;
  double gravity = 9.81;       // m/s^2, along -z; rest backbone hangs along -z

  double bending_stiffness() const {  // EI of the circular cross-section
    return young_modulus * std::numbers::pi * radius * radius * radius * radius / 4.0;
  }
  double line_density() const { return density * std::numbers::pi * radius * radius; }

  void validate() const {
    if (!(radius > 0.0)) throw SpecError("model params: radius must be > 0");
    if (!(density > 0.0)) throw SpecError("model params: density must be > 0");
    if (!(rest_length > 0.0)) throw SpecError("model params: rest_length must be > 0");
    if (!(young_modulus > 0.0)) throw SpecError("model params: young_modulus must be > 0");
    if (!(gravity >= 0.0)) throw SpecError("model params: gravity must be >= 0");
    if (n_bodies < 1) throw SpecError("model params: n_bodies must be >= 1");
  }
};

/// Serial chain of uniform thin rods with linear elastic revolute joints.
struct RigidChainParams {
  int n_links = 0;
  double link_length = 0.0;     // m
  double link_mass = 0.0;       // kg
  double joint_stiffness = 0.0; // N*m/rad
  double gravity = 9.81;        // m/s^2

  void validate() const {
    if (n_links < 1) throw SpecError("model params: n_links must be >= 1");
    if (!(link_length > 0.0)) throw SpecError("model params: link_length must be > 0");
    if (!(link_mass > 0.0)) throw SpecError("model params: link_mass must be > 0");
    if (!(joint_stiffness > 0.0)) throw SpecError("model params: joint_stiffness must be > 0");
    if (!(gravity >= 0.0)) throw SpecError("model params: gravity must be >= 0");
  }
};

namespace detail {

/// Tangent direction at accumulated bend angle phi; phi = 0 points along -z.
inline Vector2d tangent(double phi) { return {std::sin(phi), -std::cos(phi)}; }
/// Lateral normal, d(tangent)/dphi.
inline Vector2d normal(double phi) { return {std::cos(phi), std::sin(phi)}; }
/// In-plane rotation generator: derivative of a point under a base rotation.
inline Vector2d turn(const Vector2d& v) { return {-v.y(), v.x()}; }

/**
 * Constant-curvature arc integrals at local arc length sigma and curvature
 * kappa, with first and second curvature derivatives:
 *
 *    f = sin(u)/kappa, g = (1 - cos(u))/kappa, u = kappa*sigma,
 *
 * fk = df/dkappa etc. Below |u| = 0.02 the closed forms lose digits to
 * cancellation, so series through u^7 take over (error < 1e-18 relative).
 */
struct ArcVals {
  double f, g, fk, gk, fkk, gkk;
};

inline ArcVals arc_functions(double kappa, double sigma) {
  const double u = kappa * sigma;
  ArcVals a;
  if (std::abs(u) < 0.02) {
    const double u2 = u * u, u3 = u2 * u, u4 = u2 * u2, u5 = u4 * u, u6 = u4 * u2,
                 u7 = u6 * u;
    const double s2 = sigma * sigma, s3 = s2 * sigma;
    a.f = sigma * (1.0 - u2 / 6.0 + u4 / 120.0 - u6 / 5040.0);
    a.g = sigma * (u / 2.0 - u3 / 24.0 + u5 / 720.0 - u7 / 40320.0);
    a.fk = s2 * (-u / 3.0 + u3 / 30.0 - u5 / 840.0 + u7 / 45360.0);
    a.gk = s2 * (0.5 - u2 / 8.0 + u4 / 144.0 - u6 / 5760.0);
    a.fkk = s3 * (-1.0 / 3.0 + u2 / 10.0 - u4 / 168.0 + u6 / 6480.0);
    a.gkk = s3 * (-u / 4.0 + u3 / 36.0 - u5 / 960.0);
  } else {
    const double su = std::sin(u), cu = std::cos(u);
    const double hs = std::sin(0.5 * u);
    const double vers = 2.0 * hs * hs;  // 1 - cos(u) without cancellation
    const double ik = 1.0 / kappa, ik2 = ik * ik, ik3 = ik2 * ik;
    a.f = su * ik;
    a.g = vers * ik;
    a.fk = sigma * cu * ik - su * ik2;
    a.gk = sigma * su * ik - vers * ik2;
    a.fkk = -sigma * sigma * su * ik - 2.0 * sigma * cu * ik2 + 2.0 * su * ik3;
    a.gkk = sigma * sigma * cu * ik - 2.0 * sigma * su * ik2 + 2.0 * vers * ik3;
  }
  return a;
}

/**
 * Piecewise-constant-curvature backbone: segment i bends by the subtended
 * angle q_i over rest length ell, tangent angle continuous along s.
 */
struct PccKinematics {
  int n;
  double ell;

  struct Frames {
    std::vector<Vector2d> e;    // n+1 segment base points, e[n] = tip
    std::vector<double> phi;    // tangent angle at each base, phi[0] = 0
    std::vector<Vector2d> F, L; // tangent/normal at each base, size n
    std::vector<ArcVals> end;   // arc values at sigma = ell per segment
    std::vector<Vector2d> dcol; // d(segment endpoint)/dq_i, size n
  };

  struct Motion {  // base-frame time derivatives under qdd = 0
    std::vector<Vector2d> edot, eddot;
    std::vector<double> phidot;
  };

  Frames frames(const VectorXd& q) const {
    Frames fr;
    fr.e.resize(n + 1);
    fr.phi.resize(n + 1);
    fr.F.resize(n);
    fr.L.resize(n);
    fr.end.resize(n);
    fr.dcol.resize(n);
    fr.e[0].setZero();
    fr.phi[0] = 0.0;
    for (int i = 0; i < n; ++i) {
      fr.F[i] = tangent(fr.phi[i]);
      fr.L[i] = normal(fr.phi[i]);
      fr.end[i] = arc_functions(q[i] / ell, ell);
      fr.e[i + 1] = fr.e[i] + fr.end[i].f * fr.F[i] + fr.end[i].g * fr.L[i];
      fr.dcol[i] = (fr.end[i].fk * fr.F[i] + fr.end[i].gk * fr.L[i]) / ell;
      fr.phi[i + 1] = fr.phi[i] + q[i];
    }
    return fr;
  }

  Motion motion(const Frames& fr, const VectorXd& q, const VectorXd& qd) const {
    (void)q;
    Motion mo;
    mo.edot.assign(n + 1, Vector2d::Zero());
    mo.eddot.assign(n + 1, Vector2d::Zero());
    mo.phidot.assign(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      const double kd = qd[i] / ell;  // curvature rate
      const ArcVals& a = fr.end[i];
      const double fd = a.fk * kd, gd = a.gk * kd;
      const double fdd = a.fkk * kd * kd, gdd = a.gkk * kd * kd;
      const double pd = mo.phidot[i];
      mo.edot[i + 1] = mo.edot[i] + (fd - a.g * pd) * fr.F[i] + (gd + a.f * pd) * fr.L[i];
      mo.eddot[i + 1] = mo.eddot[i] + (fdd - 2.0 * gd * pd - a.f * pd * pd) * fr.F[i] +
                        (gdd + 2.0 * fd * pd - a.g * pd * pd) * fr.L[i];
      mo.phidot[i + 1] = pd + qd[i];
    }
    return mo;
  }

  Vector2d point(const Frames& fr, const VectorXd& q, int k, double sigma) const {
    const ArcVals a = arc_functions(q[k] / ell, sigma);
    return fr.e[k] + a.f * fr.F[k] + a.g * fr.L[k];
  }

  /// Columns of dp/dq at the node; jac must be 2 x n and zeroed.
  void jacobian(const Frames& fr, const VectorXd& q, int k, double sigma,
                Eigen::Matrix<double, 2, Eigen::Dynamic>& jac) const {
    const ArcVals a = arc_functions(q[k] / ell, sigma);
    const Vector2d p = fr.e[k] + a.f * fr.F[k] + a.g * fr.L[k];
    for (int j = 0; j < k; ++j) jac.col(j) = fr.dcol[j] + turn(p - fr.e[j + 1]);
    jac.col(k) = (a.fk * fr.F[k] + a.gk * fr.L[k]) / ell;
  }

  Vector2d accel(const Frames& fr, const Motion& mo, const VectorXd& q, const VectorXd& qd,
                 int k, double sigma) const {
    const ArcVals a = arc_functions(q[k] / ell, sigma);
    const double kd = qd[k] / ell;
    const double fd = a.fk * kd, gd = a.gk * kd;
    const double fdd = a.fkk * kd * kd, gdd = a.gkk * kd * kd;
    const double pd = mo.phidot[k];
    return mo.eddot[k] + (fdd - 2.0 * gd * pd - a.f * pd * pd) * fr.F[k] +
           (gdd + 2.0 * fd * pd - a.g * pd * pd) * fr.L[k];
  }
};

/**
 * Piecewise-straight backbone: joint i at the base of link i adds the
 * relative angle q_i, the link then runs straight for length ell.
 */
struct RigidChainKinematics {
  int n;
  double ell;

  struct Frames {
    std::vector<Vector2d> e;    // n+1 joint/tip points
    std::vector<Vector2d> F;    // link direction, size n
  };

  struct Motion {
    std::vector<Vector2d> edot, eddot;
    std::vector<double> phidot;  // absolute angle rate of each link
  };

  Frames frames(const VectorXd& q) const {
    Frames fr;
    fr.e.resize(n + 1);
    fr.F.resize(n);
    fr.e[0].setZero();
    double psi = 0.0;
    for (int i = 0; i < n; ++i) {
      psi += q[i];
      fr.F[i] = tangent(psi);
      fr.e[i + 1] = fr.e[i] + ell * fr.F[i];
    }
    return fr;
  }

  Motion motion(const Frames& fr, const VectorXd& q, const VectorXd& qd) const {
    (void)q;
    Motion mo;
    mo.edot.assign(n + 1, Vector2d::Zero());
    mo.eddot.assign(n + 1, Vector2d::Zero());
    mo.phidot.assign(n, 0.0);
    double psid = 0.0;
    for (int i = 0; i < n; ++i) {
      psid += qd[i];
      mo.phidot[i] = psid;
      mo.edot[i + 1] = mo.edot[i] + ell * psid * turn(fr.F[i]);
      mo.eddot[i + 1] = mo.eddot[i] - ell * psid * psid * fr.F[i];
    }
    return mo;
  }

  Vector2d point(const Frames& fr, const VectorXd& q, int k, double sigma) const {
    (void)q;
    return fr.e[k] + sigma * fr.F[k];
  }

  void jacobian(const Frames& fr, const VectorXd& q, int k, double sigma,
                Eigen::Matrix<double, 2, Eigen::Dynamic>& jac) const {
    (void)q;
    const Vector2d p = fr.e[k] + sigma * fr.F[k];
    for (int j = 0; j <= k; ++j) jac.col(j) = turn(p - fr.e[j]);
  }

  Vector2d accel(const Frames& fr, const Motion& mo, const VectorXd& q, const VectorXd& qd,
                 int k, double sigma) const {
    (void)q;
    (void)qd;
    const double pd = mo.phidot[k];
    return mo.eddot[k] - sigma * pd * pd * fr.F[k];
  }
};

}  // namespace detail

/**
 * Planar backbone model over a kinematics policy. Assembles the mass matrix
 * and gravity terms as line-density integrals
 *
 *    M(q)  = int_0^L rhoA J(s)^T J(s) ds,
 *    V_g(q) = rhoA g0 int_0^L p_z(s) ds  (shifted so V(0) = 0),
 *
 * with fixed-order Gauss-Legendre quadrature per segment; the elastic part
 * is 1/2 * stiff * sum q_i^2. The Coriolis vector integrates the convective
 * acceleration directly,
 *
 *    c(q, qd) = int_0^L rhoA J(s)^T pdd(s)|_{qdd=0} ds,
 *
 * which equals the Christoffel contraction of dM/dq (checked in the tests)
 * at a fraction of its cost.
 */
template <class Kin>
class PlanarArm final : public MechanicalModel {
 public:
  PlanarArm(Kin kin, double line_density, double stiff_per_dof, double gravity,
            int quad_points = 7)
      : kin_(kin),
        rho_a_(line_density),
        stiff_(stiff_per_dof),
        g0_(gravity),
        len_(kin.n * kin.ell),
        quad_(quad_points) {
    sigma_.resize(quad_points);
    w_.resize(quad_points);
    for (int m = 0; m < quad_points; ++m) {
      sigma_[m] = 0.5 * kin_.ell * (1.0 + quad_.nodes[m]);
      w_[m] = 0.5 * kin_.ell * quad_.weights[m];
    }
    v_offset_ = gravity_integral(VectorXd::Zero(kin_.n));
  }

  int n_dofs() const override { return kin_.n; }
  double rest_length() const override { return len_; }
  double segment_length() const { return kin_.ell; }

  MatrixXd mass_matrix(const VectorXd& q) const override {
    check_dimension(q, "mass_matrix: q");
    const auto fr = kin_.frames(q);
    Eigen::Matrix<double, 2, Eigen::Dynamic> jac(2, kin_.n);
    MatrixXd m = MatrixXd::Zero(kin_.n, kin_.n);
    for (int k = 0; k < kin_.n; ++k)
      for (std::size_t i = 0; i < sigma_.size(); ++i) {
        jac.setZero();
        kin_.jacobian(fr, q, k, sigma_[i], jac);
        m.noalias() += (w_[i] * rho_a_) * (jac.transpose() * jac);
      }
    return m;
  }

  double potential(const VectorXd& q) const override {
    check_dimension(q, "potential: q");
    return 0.5 * stiff_ * q.squaredNorm() + gravity_integral(q) - v_offset_;
  }

  VectorXd potential_gradient(const VectorXd& q) const override {
    check_dimension(q, "potential_gradient: q");
    const auto fr = kin_.frames(q);
    Eigen::Matrix<double, 2, Eigen::Dynamic> jac(2, kin_.n);
    VectorXd grad = stiff_ * q;
    for (int k = 0; k < kin_.n; ++k)
      for (std::size_t i = 0; i < sigma_.size(); ++i) {
        jac.setZero();
        kin_.jacobian(fr, q, k, sigma_[i], jac);
        grad.noalias() += (w_[i] * rho_a_ * g0_) * jac.row(1).transpose();
      }
    return grad;
  }

  VectorXd coriolis(const VectorXd& q, const VectorXd& qd) const override {
    check_dimension(q, "coriolis: q");
    check_dimension(qd, "coriolis: qd");
    const auto fr = kin_.frames(q);
    const auto mo = kin_.motion(fr, q, qd);
    Eigen::Matrix<double, 2, Eigen::Dynamic> jac(2, kin_.n);
    VectorXd c = VectorXd::Zero(kin_.n);
    for (int k = 0; k < kin_.n; ++k)
      for (std::size_t i = 0; i < sigma_.size(); ++i) {
        jac.setZero();
        kin_.jacobian(fr, q, k, sigma_[i], jac);
        c.noalias() += (w_[i] * rho_a_) * (jac.transpose() * kin_.accel(fr, mo, q, qd, k, sigma_[i]));
      }
    return c;
  }

  Vector3d task_position(const VectorXd& q, double s) const override {
    check_dimension(q, "task_position: q");
    if (s < -1e-12 * len_ || s > len_ * (1.0 + 1e-12))
      throw DomainError("task_position: arc length " + std::to_string(s) +
                        " outside [0, " + std::to_string(len_) + "]");
    s = std::min(std::max(s, 0.0), len_);
    int k = std::min(static_cast<int>(s / kin_.ell), kin_.n - 1);
    const double sigma = std::min(std::max(s - k * kin_.ell, 0.0), kin_.ell);
    const auto fr = kin_.frames(q);
    const Vector2d p = kin_.point(fr, q, k, sigma);
    return {p.x(), 0.0, p.y()};
  }

 private:
  double gravity_integral(const VectorXd& q) const {
    const auto fr = kin_.frames(q);
    double vz = 0.0;
    for (int k = 0; k < kin_.n; ++k)
      for (std::size_t i = 0; i < sigma_.size(); ++i)
        vz += w_[i] * kin_.point(fr, q, k, sigma_[i]).y();
    return rho_a_ * g0_ * vz;
  }

  Kin kin_;
  double rho_a_, stiff_, g0_, len_;
  GaussLegendre quad_;
  std::vector<double> sigma_, w_;  // per-segment local nodes and weights
  double v_offset_;
};

using PccArm = PlanarArm<detail::PccKinematics>;
using RigidChain = PlanarArm<detail::RigidChainKinematics>;

inline ModelPtr build_pcc(const SoftArmParams& p, int quad_points = 7) {
  p.validate();
  const double ell = p.rest_length / p.n_bodies;
  auto model = std::make_shared<PccArm>(detail::PccKinematics{p.n_bodies, ell},
                                        p.line_density(), p.bending_stiffness() / ell,
                                        p.gravity, quad_points);
  model->set_label("pcc-" + std::to_string(p.n_bodies));
  return model;
}

inline ModelPtr build_rigid_chain(const RigidChainParams& p, int quad_points = 7) {
  p.validate();
  auto model = std::make_shared<RigidChain>(
      detail::RigidChainKinematics{p.n_links, p.link_length},
      p.link_mass / p.link_length, p.joint_stiffness, p.gravity, quad_points);
  model->set_label("rigid_chain-" + std::to_string(p.n_links));
  return model;
}

/// Lumped approximation of the rod: n links of length L/n, joint stiffness EI/ell.
inline RigidChainParams rigid_chain_from_rod(const SoftArmParams& p) {
  p.validate();
  RigidChainParams rc;
  rc.n_links = p.n_bodies;
  rc.link_length = p.rest_length / p.n_bodies;
  rc.link_mass = p.line_density() * rc.link_length;
  rc.joint_stiffness = p.bending_stiffness() / rc.link_length;
  rc.gravity = p.gravity;
  return rc;
}

}  // namespace nmodes
