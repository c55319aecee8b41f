#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>

#include "nmodes/archive.hpp"
#include "nmodes/continuation.hpp"
#include "nmodes/dynamics.hpp"
#include "nmodes/integrate.hpp"
#include "nmodes/io.hpp"
#include "nmodes/metrics/modal_metrics.hpp"
#include "nmodes/modal.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/test_models.hpp"

using namespace nmodes;
using namespace nmodes::testing;

namespace {

ModelPtr single_link() { return study_rigid(1); }

// closed-form potential pieces of the single link, for the period oracle
struct LinkPotential {
  double J, k, mgl2;
  explicit LinkPotential(const SoftArmParams& rod) {
    const double m = rod.line_density() * rod.rest_length;
    J = m * rod.rest_length * rod.rest_length / 3.0;
    k = rod.bending_stiffness() / rod.rest_length;
    mgl2 = m * rod.gravity * rod.rest_length / 2.0;
  }
  double V(double q) const { return 0.5 * k * q * q + mgl2 * (1.0 - std::cos(q)); }
  double dV(double q) const { return k * q + mgl2 * std::sin(q); }
};

}  // namespace

TEST_CASE("the period oracle itself reproduces pinned reference values") {
  const LinkPotential lp(study_rod(1));
  auto period = [&](double e) {
    return turning_point_period([&](double q) { return lp.V(q); },
                                [&](double q) { return lp.dV(q); }, lp.J, e);
  };
  CHECK(period(0.2) == Catch::Approx(0.962790975067).epsilon(1e-9));
  CHECK(period(1.0) == Catch::Approx(1.04290578725).epsilon(1e-9));

  auto hard = [&](double e) {
    return turning_point_period([](double q) { return 0.5 * q * q + 0.25 * q * q * q * q; },
                                [](double q) { return q + q * q * q; }, 1.0, e);
  };
  CHECK(hard(0.1) == Catch::Approx(5.89322638111).epsilon(1e-9));
  CHECK(hard(1.0) == Catch::Approx(4.54833039808).epsilon(1e-9));
}

TEST_CASE("shooting residual vanishes at fixed points and closed orbits") {
  const ModelPtr pcc = study_pcc(1);
  CHECK(shooting_residual(*pcc, VectorXd::Zero(1), 0.7).lpNorm<Eigen::Infinity>() < 1e-10);

  LinearOscillator osc(VectorXd::Ones(1), VectorXd::Constant(1, 4.0));  // omega = 2
  const VectorXd a = VectorXd::Constant(1, 0.3);
  CHECK(shooting_residual(osc, a, std::numbers::pi).lpNorm<Eigen::Infinity>() < 1e-9);

  const VectorXd r_half = shooting_residual(osc, a, std::numbers::pi / 2.0);
  CHECK(r_half[0] == Catch::Approx(0.6).margin(1e-8));  // q0 - q(T) = a - (-a)
  CHECK(std::abs(r_half[1]) < 1e-8);
}

TEST_CASE("bootstrap scales the linear shape to the requested energy") {
  const double omega = 3.0;
  LinearOscillator osc(VectorXd::Ones(1), VectorXd::Constant(1, omega * omega));
  const LinearModeSet modes = linearize(osc, VectorXd::Zero(1));
  const double de = 0.02;
  const auto [q0, T] = bootstrap_first_point(osc, modes, 1, de);
  CHECK(q0[0] == Catch::Approx(std::sqrt(2.0 * de) / omega).epsilon(1e-12));
  CHECK(T == Catch::Approx(2.0 * std::numbers::pi / omega).epsilon(1e-12));

  const ModelPtr chain = study_rigid(10);
  const LinearModeSet cm = linearize(*chain, VectorXd::Zero(10));
  const auto [cq0, cT] = bootstrap_first_point(*chain, cm, 1, 0.05);
  const double quad_e = 0.5 * cq0.dot(cm.stiffness * cq0);
  CHECK(quad_e == Catch::Approx(0.05).epsilon(1e-12));
  CHECK(cT == Catch::Approx(2.0 * std::numbers::pi / cm.omegas[0]).epsilon(1e-12));
}

TEST_CASE("correction from an exact point converges immediately") {
  const double omega = 2.0;
  LinearOscillator osc(VectorXd::Ones(1), VectorXd::Constant(1, omega * omega));
  const double e = 0.08;
  const VectorXd q0 = VectorXd::Constant(1, std::sqrt(2.0 * e) / omega);
  const CorrectResult res = correct(osc, q0, 2.0 * std::numbers::pi / omega, e);
  REQUIRE(res.converged);
  CHECK(res.point.newton_iters <= 2);
  CHECK(std::abs(res.point.q0[0] - q0[0]) < 1e-9);
  CHECK(std::abs(res.point.E - e) < 1e-10);
}

TEST_CASE("corrected single-link periods match the turning-point oracle") {
  const ModelPtr link = single_link();
  const LinkPotential lp(study_rod(1));
  const LinearModeSet modes = linearize(*link, VectorXd::Zero(1));

  const auto [q0b, Tb] = bootstrap_first_point(*link, modes, 1, 0.2);
  const CorrectResult res = correct(*link, q0b, Tb, 0.2);
  REQUIRE(res.converged);
  const double T_oracle = turning_point_period([&](double q) { return lp.V(q); },
                                               [&](double q) { return lp.dV(q); }, lp.J, 0.2);
  CHECK(res.point.T == Catch::Approx(T_oracle).epsilon(1e-6));
  CHECK(std::abs(res.point.E - 0.2) < 1e-10);
  // generator points start from rest, so E is purely potential
  CHECK(lp.V(res.point.q0[0]) == Catch::Approx(0.2).margin(1e-9));
}

TEST_CASE("first chain correction converges cleanly from the bootstrap") {
  const ModelPtr chain = study_rigid(10);
  const LinearModeSet modes = linearize(*chain, VectorXd::Zero(10));
  const auto [q0, T] = bootstrap_first_point(*chain, modes, 1, 0.05);
  const CorrectResult res = correct(*chain, q0, T, 0.05);
  REQUIRE(res.converged);
  REQUIRE(res.residual_history.size() >= 2);
  const auto& h = res.residual_history;
  for (std::size_t i = h.size() >= 3 ? h.size() - 3 : 0; i + 1 < h.size(); ++i)
    CHECK(h[i + 1] < h[i]);
  CHECK(res.point.residual_norm < 1e-8 * (1.0 + res.point.q0.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("correction gives up promptly once the residual stops improving") {
  const double omega = 2.0;
  LinearOscillator osc(VectorXd::Ones(1), VectorXd::Constant(1, omega * omega));
  const LinearModeSet modes = linearize(osc, VectorXd::Zero(1));
  const auto [q0, T] = bootstrap_first_point(osc, modes, 1, 0.08);

  // A coarse flow floors the residual far above shoot_tol, so Newton can only
  // plateau; the stall exit must fire long before the iteration budget.
  ContinuationOptions opts;
  opts.n_max = 50;
  opts.ode.abs_tol = 1e-3;
  opts.ode.rel_tol = 1e-3;
  const CorrectResult res = correct(osc, q0, T, 0.08, opts);
  CHECK(!res.converged);
  CHECK(res.residual_history.size() <= 20);
  CHECK(res.point.residual_norm >
        opts.shoot_tol * (1.0 + res.point.q0.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("the predictor follows the linear mode exactly on a linear system") {
  VectorXd k(2);
  // omegas 2 and 5: non-commensurate, so mode 2 does not close at the mode-1
  // period and the shooting kernel isolates mode 1
  k << 4.0, 25.0;
  LinearOscillator osc(VectorXd::Ones(2), k);
  const LinearModeSet modes = linearize(osc, VectorXd::Zero(2));
  const auto [q0, T] = bootstrap_first_point(osc, modes, 1, 0.05);
  const CorrectResult res = correct(osc, q0, T, 0.05);
  REQUIRE(res.converged);

  const auto [qp, Tp] = predict(osc, res.point, 0.01, {}, &res.jacobian);
  CHECK(Tp == Catch::Approx(res.point.T).epsilon(1e-9));
  const VectorXd step = qp - res.point.q0;
  CHECK(std::abs(step[1]) <= 1e-8 * step.norm());  // no leakage into mode 2

  const auto [qtiny, Ttiny] = predict(osc, res.point, 1e-12, {}, &res.jacobian);
  CHECK((qtiny - res.point.q0).norm() < 1e-9);
  CHECK(Ttiny == Catch::Approx(res.point.T).epsilon(1e-9));
}

TEST_CASE("rank-deficient and energy-orthogonal tangents trip the branch-point guard") {
  // Finite-difference monodromy noise (~tol/step) sits far above the rank
  // threshold, so the guard is exercised with explicitly built Jacobians.
  VectorXd k(2);
  k << 4.0, 16.0;
  LinearOscillator osc(VectorXd::Ones(2), k);
  const LinearModeSet modes = linearize(osc, VectorXd::Zero(2));
  const auto [q0, T] = bootstrap_first_point(osc, modes, 1, 0.05);
  const CorrectResult res = correct(osc, q0, T, 0.05);
  REQUIRE(res.converged);

  // two vanishing singular values: a full-period linear monodromy of a
  // degenerate pair gives dr/dq0 = 0 with only the period column alive
  MatrixXd rank_deficient = MatrixXd::Zero(4, 3);
  rank_deficient(2, 2) = 1.0;
  CHECK_THROWS_AS(predict(osc, res.point, 0.05, {}, &rank_deficient), BranchPointError);

  // unique kernel, but orthogonal to grad V (= k1*q0 along axis 1)
  MatrixXd orthogonal = MatrixXd::Zero(4, 3);
  orthogonal(0, 0) = 1.0;  // kernel = axis 1 of (q0_1, q0_2, T) -> axis 2
  orthogonal(1, 2) = 1.0;
  CHECK_THROWS_AS(predict(osc, res.point, 0.05, {}, &orthogonal), BranchPointError);
}

TEST_CASE("kernel tangent stays within 15 degrees of the branch secant") {
  const ModelPtr link = single_link();
  const LinearModeSet modes = linearize(*link, VectorXd::Zero(1));
  ContinuationOptions opts;
  opts.de_ref = 0.05;
  opts.e_max = 0.3;
  const Eigenmanifold mf = compute_generator(*link, modes, 1, opts);
  REQUIRE(mf.points.size() >= 3);
  for (std::size_t i = 2; i < mf.points.size(); ++i) {
    Eigen::Vector2d secant(mf.points[i].q0[0] - mf.points[i - 1].q0[0],
                           mf.points[i].T - mf.points[i - 1].T);
    const detail::Residual res =
        detail::eval_residual(*link, mf.points[i].q0, mf.points[i].T, opts.ode);
    const MatrixXd jac =
        detail::shooting_jacobian(*link, mf.points[i].q0, mf.points[i].T, res, opts.ode);
    Eigen::JacobiSVD<MatrixXd> svd(jac, Eigen::ComputeFullV);
    Eigen::Vector2d tangent = svd.matrixV().col(1);
    const double cosang =
        std::abs(secant.normalized().dot(tangent.normalized()));
    CHECK(std::acos(std::min(1.0, cosang)) < 15.0 * std::numbers::pi / 180.0);
  }
}

TEST_CASE("linear branches keep a constant period on the energy grid") {
  const double omega = 2.5;
  LinearOscillator osc(VectorXd::Ones(1), VectorXd::Constant(1, omega * omega));
  const LinearModeSet modes = linearize(osc, VectorXd::Zero(1));
  ContinuationOptions opts;
  opts.de_ref = 0.05;
  opts.e_max = 0.5;
  const Eigenmanifold mf = compute_generator(osc, modes, 1, opts);
  REQUIRE(mf.points.size() >= 10);
  CHECK_FALSE(mf.truncated);
  for (std::size_t i = 0; i < mf.points.size(); ++i) {
    CHECK(mf.points[i].T == Catch::Approx(2.0 * std::numbers::pi / omega).epsilon(1e-8));
    CHECK(mf.points[i].E == Catch::Approx(0.05 * (i + 1)).margin(1e-9));
  }
}

TEST_CASE("energy steps land on the commanded grid within 1e-9") {
  const ModelPtr pcc = study_pcc(1);
  const LinearModeSet modes = linearize(*pcc, VectorXd::Zero(1));
  ContinuationOptions opts;
  opts.de_ref = 0.05;
  opts.e_max = 0.3;
  const Eigenmanifold mf = compute_generator(*pcc, modes, 1, opts);
  REQUIRE(!mf.points.empty());
  double prev = 0.0;
  for (const GeneratorPoint& pt : mf.points) {
    const double step = pt.E - prev;
    bool on_grid = false;
    for (int j = 0; j <= 10; ++j)
      if (std::abs(step - opts.de_ref / (1 << j)) < 1e-9) on_grid = true;
    CHECK(on_grid);
    CHECK(pt.E > prev);
    prev = pt.E;
    CHECK(std::abs(energy(*pcc, State::rest(pt.q0)) - pt.E) < 1e-12 * std::max(1.0, pt.E));
  }
}

TEST_CASE("first generator point sits in the linear regime") {
  const ModelPtr pcc = study_pcc(2);
  const LinearModeSet modes = linearize(*pcc, VectorXd::Zero(2));
  for (int mode = 1; mode <= 2; ++mode) {
    ContinuationOptions opts;
    opts.de_ref = 0.005;  // small enough that anharmonic frequency shift << 1%
    opts.e_max = 0.005;
    const Eigenmanifold mf = compute_generator(*pcc, modes, mode, opts);
    REQUIRE(!mf.points.empty());
    const GeneratorPoint& first = mf.points.front();
    const double w = 2.0 * std::numbers::pi / first.T;
    CHECK(std::abs(w - modes.omegas[mode - 1]) <= 0.01 * modes.omegas[mode - 1]);
    const VectorXd dir = first.q0.normalized();
    const VectorXd c = modes.shapes.col(mode - 1).normalized();
    const double angle = std::acos(std::min(1.0, std::abs(dir.dot(c))));
    CHECK(angle <= 5.0 * std::numbers::pi / 180.0);
    CHECK(first.T == Catch::Approx(2.0 * std::numbers::pi / modes.omegas[mode - 1]).epsilon(0.02));
  }
}

TEST_CASE("stored points re-verify periodicity, invariance, and symmetry") {
  const ModelPtr pcc = study_pcc(1);
  const LinearModeSet modes = linearize(*pcc, VectorXd::Zero(1));
  ContinuationOptions opts;
  opts.de_ref = 0.05;
  opts.e_max = 0.2;
  const Eigenmanifold mf = compute_generator(*pcc, modes, 1, opts);
  REQUIRE(!mf.points.empty());
  for (const GeneratorPoint& pt : mf.points) {
    const double tol = 1e-8 * (1.0 + pt.q0.lpNorm<Eigen::Infinity>());
    CHECK(shooting_residual(*pcc, pt.q0, pt.T).lpNorm<Eigen::Infinity>() < tol);

    const State s3 = flow(*pcc, State::rest(pt.q0), 3.0 * pt.T);
    CHECK((s3.q - pt.q0).lpNorm<Eigen::Infinity>() < 1e3 * tol);
    CHECK(s3.qd.lpNorm<Eigen::Infinity>() < 1e3 * tol);

    // turning-point symmetry: the half-period state is again at rest
    const Trajectory tr = integrate(*pcc, State::rest(pt.q0), pt.T, 257);
    double vmax = 0.0;
    for (const State& s : tr.states) vmax = std::max(vmax, s.qd.lpNorm<Eigen::Infinity>());
    const State half = flow(*pcc, State::rest(pt.q0), pt.T / 2.0);
    CHECK(half.qd.lpNorm<Eigen::Infinity>() < 1e-6 * vmax);
  }
}

TEST_CASE("mode trajectories are periodic and match closed forms when linear") {
  const double omega = 2.0, e = 0.08;
  LinearOscillator osc(VectorXd::Ones(1), VectorXd::Constant(1, omega * omega));
  const double a = std::sqrt(2.0 * e) / omega;
  const CorrectResult res = correct(osc, VectorXd::Constant(1, a),
                                    2.0 * std::numbers::pi / omega, e);
  REQUIRE(res.converged);
  const ModeTrajectory mt = mode_trajectory(osc, res.point, 512);
  REQUIRE(mt.trajectory.size() == 512);
  CHECK(mt.trajectory.states.front().qd.lpNorm<Eigen::Infinity>() < 1e-12);
  for (Eigen::Index i = 0; i < mt.trajectory.times.size(); ++i) {
    const double t = mt.trajectory.times[i];
    CHECK(std::abs(mt.trajectory.states[i].q[0] - a * std::cos(omega * t)) < 1e-8);
  }
  const VectorXd qlast = mt.trajectory.states.back().q;
  CHECK((qlast - res.point.q0).lpNorm<Eigen::Infinity>() <
        10.0 * 1e-8 * (1.0 + res.point.q0.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("an impossible iteration budget yields a truncated partial result") {
  const ModelPtr pcc = study_pcc(1);
  const LinearModeSet modes = linearize(*pcc, VectorXd::Zero(1));
  ContinuationOptions opts;
  opts.de_ref = 0.05;
  opts.e_max = 0.3;
  opts.n_max = 0;  // correction can never run, every step fails
  const Eigenmanifold mf = compute_generator(*pcc, modes, 1, opts);
  CHECK(mf.truncated);
  CHECK(mf.points.empty());
  CHECK_FALSE(mf.diagnostic.empty());
}

TEST_CASE("archives round-trip byte-identically and reruns are deterministic") {
  const ModelPtr pcc = study_pcc(1);
  const LinearModeSet modes = linearize(*pcc, VectorXd::Zero(1));
  ContinuationOptions opts;
  opts.de_ref = 0.05;
  opts.e_max = 0.2;
  const Eigenmanifold mf = compute_generator(*pcc, modes, 1, opts);
  const Eigenmanifold mf2 = compute_generator(*pcc, modes, 1, opts);
  CHECK(to_json(mf) == to_json(mf2));

  const auto dir = std::filesystem::temp_directory_path() / "nmodes-test-archive";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "m1.json").string();
  save_manifold(mf, path);
  const Eigenmanifold back = load_manifold(path);
  CHECK(to_json(back) == to_json(mf));
  CHECK(back.model_fingerprint == pcc->fingerprint());
  CHECK(back.mode_index == 1);
  REQUIRE(back.points.size() == mf.points.size());
  for (std::size_t i = 0; i < back.points.size(); ++i) {
    CHECK(back.points[i].q0 == mf.points[i].q0);  // bit-exact
    CHECK(back.points[i].T == mf.points[i].T);
    CHECK(back.points[i].E == mf.points[i].E);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("interpolated energies re-converge to genuine generator points") {
  const ModelPtr link = single_link();
  const LinearModeSet modes = linearize(*link, VectorXd::Zero(1));
  ContinuationOptions opts;
  opts.de_ref = 0.05;
  opts.e_max = 0.2;
  const Eigenmanifold mf = compute_generator(*link, modes, 1, opts);
  REQUIRE(mf.points.size() >= 2);

  const GeneratorPoint mid = point_at_energy(*link, mf, 0.125, {});
  CHECK(std::abs(mid.E - 0.125) < 1e-10);
  CHECK(shooting_residual(*link, mid.q0, mid.T).lpNorm<Eigen::Infinity>() <
        1e-8 * (1.0 + mid.q0.lpNorm<Eigen::Infinity>()));
  CHECK_THROWS_AS(point_at_energy(*link, mf, 5.0, {}), RangeError);
}
