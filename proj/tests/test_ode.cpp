#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "nmodes/ode.hpp"

using nmodes::Dop853;
using nmodes::OdeOptions;
using nmodes::VectorXd;

namespace {

Dop853::Rhs oscillator(double omega) {
  return [omega](double, const VectorXd& y, VectorXd& dy) {
    dy[0] = y[1];
    dy[1] = -omega * omega * y[0];
  };
}

}  // namespace

TEST_CASE("harmonic oscillator returns to its start after one period") {
  const double omega = 3.0, a = 0.7;
  Dop853 ode(oscillator(omega));
  VectorXd y0(2);
  y0 << a, 0.0;
  const VectorXd yT = ode.solve(0.0, y0, 2.0 * M_PI / omega);
  CHECK(std::abs(yT[0] - a) < 1e-8);
  CHECK(std::abs(yT[1]) < 1e-8 * omega * a);
}

TEST_CASE("dense output matches the closed-form cosine between steps") {
  const double omega = 2.0, a = 1.3;
  Dop853 ode(oscillator(omega));
  VectorXd y0(2);
  y0 << a, 0.0;
  std::vector<double> times;
  for (int i = 0; i <= 200; ++i) times.push_back(5.0 * i / 200.0);
  nmodes::MatrixXd samples;
  ode.solve(0.0, y0, 5.0, times, &samples);
  REQUIRE(samples.cols() == 201);
  for (int i = 0; i <= 200; ++i) {
    CHECK(std::abs(samples(0, i) - a * std::cos(omega * times[i])) < 1e-8);
    CHECK(std::abs(samples(1, i) + a * omega * std::sin(omega * times[i])) < 1e-8);
  }
}

TEST_CASE("exponential decay over a long horizon") {
  Dop853 ode([](double, const VectorXd& y, VectorXd& dy) { dy[0] = -y[0]; });
  const VectorXd yT = ode.solve(0.0, VectorXd::Ones(1), 20.0);
  // the 1e-10 absolute tolerance dominates once y decays to ~2e-9
  CHECK(yT[0] == Catch::Approx(std::exp(-20.0)).margin(1e-12));
}

TEST_CASE("zero-length span is an identity") {
  Dop853 ode(oscillator(1.0));
  VectorXd y0(2);
  y0 << 0.4, -0.1;
  const VectorXd y = ode.solve(1.5, y0, 1.5);
  CHECK(y == y0);
}

TEST_CASE("tolerances steer the achieved accuracy") {
  const double omega = 1.0;
  VectorXd y0(2);
  y0 << 1.0, 0.0;
  OdeOptions loose;
  loose.abs_tol = loose.rel_tol = 1e-5;
  OdeOptions tight;
  tight.abs_tol = tight.rel_tol = 1e-12;
  const double span = 40.0;
  const double exact = std::cos(span);
  const double err_loose = std::abs(Dop853(oscillator(omega), loose).solve(0, y0, span)[0] - exact);
  const double err_tight = std::abs(Dop853(oscillator(omega), tight).solve(0, y0, span)[0] - exact);
  CHECK(err_tight < err_loose);
  CHECK(err_tight < 1e-9);
}

TEST_CASE("step budget exhaustion reports stiffness") {
  OdeOptions opts;
  opts.max_steps = 5;
  Dop853 ode(oscillator(50.0), opts);
  VectorXd y0(2);
  y0 << 1.0, 0.0;
  CHECK_THROWS_AS(ode.solve(0.0, y0, 100.0), nmodes::StiffnessError);
}

TEST_CASE("finite-time blowup raises an integration error") {
  Dop853 ode([](double, const VectorXd& y, VectorXd& dy) { dy[0] = y[0] * y[0]; });
  CHECK_THROWS_AS(ode.solve(0.0, VectorXd::Ones(1), 2.0), nmodes::Error);
}

TEST_CASE("backward integration works") {
  Dop853 ode(oscillator(2.0));
  VectorXd y0(2);
  y0 << 0.5, 0.0;
  const VectorXd y = ode.solve(0.0, y0, -M_PI / 2.0);  // half period backward
  CHECK(std::abs(y[0] + 0.5) < 1e-8);
}
