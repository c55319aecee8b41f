#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "nmodes/types.hpp"

namespace nmodes {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double max_step = 0.0;  // 0 => whole interval
  long max_steps = 5000000;
};

/**
 * Explicit Runge-Kutta integrator of Dormand & Prince, order 8(5,3), with
 * adaptive step control and 7th-order dense output ("DOP853", coefficients
 * of Hairer, Norsett & Wanner, Solving ODEs I).
 *
 * Deterministic: identical inputs take identical step sequences.
 */
class Dop853 {
 public:
  using Rhs = std::function<void(double t, const VectorXd& y, VectorXd& dydt)>;

  Dop853(Rhs rhs, OdeOptions opts = {}) : f_(std::move(rhs)), opt_(opts) {}

  /**
   * Integrate y' = f(t, y) from (t0, y0) to t1 > t0 and return y(t1).
   *
   * When sample_times (ascending, inside [t0, t1]) is non-empty, the states
   * at those times are written to the columns of *samples via dense output.
   */
  VectorXd solve(double t0, const VectorXd& y0, double t1,
                 const std::vector<double>& sample_times = {},
                 MatrixXd* samples = nullptr) const {
    const int n = static_cast<int>(y0.size());
    if (t1 == t0) {
      if (samples) {
        samples->resize(n, static_cast<Eigen::Index>(sample_times.size()));
        for (Eigen::Index j = 0; j < samples->cols(); ++j) samples->col(j) = y0;
      }
      return y0;
    }
    const double hmax = opt_.max_step > 0.0 ? opt_.max_step : std::abs(t1 - t0);
    const double posneg = t1 > t0 ? 1.0 : -1.0;
    const double expo1 = 1.0 / 8.0, safe = 0.9, facc1 = 3.0, facc2 = 1.0 / 6.0;
    const double uround = 2.3e-16;

    VectorXd y = y0;
    VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n), k10(n);
    VectorXd ys(n), kc(n);
    MatrixXd rcont;  // 8 x n dense-output coefficients for the current step
    if (samples) samples->resize(n, static_cast<Eigen::Index>(sample_times.size()));

    std::size_t next_sample = 0;
    auto emit_exact = [&](double t, const VectorXd& yt) {
      while (next_sample < sample_times.size() &&
             std::abs(sample_times[next_sample] - t) <= 1e-14 * (1.0 + std::abs(t))) {
        samples->col(next_sample) = yt;
        ++next_sample;
      }
    };
    if (samples) emit_exact(t0, y);

    double t = t0;
    f_(t, y, k1);
    double h = initial_step(t, y, k1, hmax, posneg, k2, ys);
    bool last = false, reject = false;
    long nstep = 0;

    while (true) {
      if (++nstep > opt_.max_steps)
        throw StiffnessError("ode: step budget exhausted before reaching end time");
      if (0.1 * std::abs(h) <= std::abs(t) * uround)
        throw StiffnessError("ode: step size underflow at t = " + std::to_string(t));
      if ((t + 1.01 * h - t1) * posneg > 0.0) {
        h = t1 - t;
        last = true;
      }

      // The twelve stages of the 8th-order step. Stages 11 and 12 reuse the
      // k2 / k3 slots exactly as in the reference implementation.
      ys = y + h * A21 * k1;
      f_(t + C2 * h, ys, k2);
      ys = y + h * (A31 * k1 + A32 * k2);
      f_(t + C3 * h, ys, k3);
      ys = y + h * (A41 * k1 + A43 * k3);
      f_(t + C4 * h, ys, k4);
      ys = y + h * (A51 * k1 + A53 * k3 + A54 * k4);
      f_(t + C5 * h, ys, k5);
      ys = y + h * (A61 * k1 + A64 * k4 + A65 * k5);
      f_(t + C6 * h, ys, k6);
      ys = y + h * (A71 * k1 + A74 * k4 + A75 * k5 + A76 * k6);
      f_(t + C7 * h, ys, k7);
      ys = y + h * (A81 * k1 + A84 * k4 + A85 * k5 + A86 * k6 + A87 * k7);
      f_(t + C8 * h, ys, k8);
      ys = y + h * (A91 * k1 + A94 * k4 + A95 * k5 + A96 * k6 + A97 * k7 + A98 * k8);
      f_(t + C9 * h, ys, k9);
      ys = y + h * (A101 * k1 + A104 * k4 + A105 * k5 + A106 * k6 + A107 * k7 + A108 * k8 +
                    A109 * k9);
      f_(t + C10 * h, ys, k10);
      ys = y + h * (A111 * k1 + A114 * k4 + A115 * k5 + A116 * k6 + A117 * k7 + A118 * k8 +
                    A119 * k9 + A1110 * k10);
      f_(t + C11 * h, ys, k2);
      const double tph = t + h;
      ys = y + h * (A121 * k1 + A124 * k4 + A125 * k5 + A126 * k6 + A127 * k7 + A128 * k8 +
                    A129 * k9 + A1210 * k10 + A1211 * k2);
      f_(tph, ys, k3);
      k4 = B1 * k1 + B6 * k6 + B7 * k7 + B8 * k8 + B9 * k9 + B10 * k10 + B11 * k2 + B12 * k3;
      k5 = y + h * k4;

      // Combined 5th/3rd-order error estimate.
      double err = 0.0, err2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double sk =
            1.0 / (opt_.abs_tol + opt_.rel_tol * std::max(std::abs(y[i]), std::abs(k5[i])));
        double sqr = (k4[i] - BHH1 * k1[i] - BHH2 * k9[i] - BHH3 * k3[i]) * sk;
        err2 += sqr * sqr;
        sqr = (ER1 * k1[i] + ER6 * k6[i] + ER7 * k7[i] + ER8 * k8[i] + ER9 * k9[i] +
               ER10 * k10[i] + ER11 * k2[i] + ER12 * k3[i]) *
              sk;
        err += sqr * sqr;
      }
      double deno = err + 0.01 * err2;
      err = std::abs(h) * err * std::sqrt(1.0 / (deno <= 0.0 ? n : deno * n));
      if (!std::isfinite(err)) throw DivergenceError("ode: non-finite error estimate");

      const double fac11 = std::pow(err, expo1);
      double fac = std::max(facc2, std::min(facc1, fac11 / safe));
      double hnew = h / fac;

      if (err <= 1.0) {
        if (!k5.allFinite()) throw DivergenceError("ode: state became non-finite");
        f_(tph, k5, kc);  // derivative at the new point (stage 13)

        const bool want_dense = samples && next_sample < sample_times.size() &&
                                (sample_times[next_sample] - tph) * posneg < 0.0;
        if (want_dense) prepare_dense(rcont, t, h, y, k5, k1, k2, k3, k6, k7, k8, k9, k10, kc, ys);

        const double t_old = t;
        k1 = kc;
        y = k5;
        t = last ? t1 : tph;

        if (samples) {
          while (next_sample < sample_times.size() && (sample_times[next_sample] - t) * posneg < 0.0) {
            const double s = (sample_times[next_sample] - t_old) / h;
            const double s1 = 1.0 - s;
            for (int i = 0; i < n; ++i)
              (*samples)(i, next_sample) =
                  rcont(0, i) +
                  s * (rcont(1, i) +
                       s1 * (rcont(2, i) +
                             s * (rcont(3, i) +
                                  s1 * (rcont(4, i) +
                                        s * (rcont(5, i) + s1 * (rcont(6, i) + s * rcont(7, i)))))));
            ++next_sample;
          }
          emit_exact(t, y);
        }

        if (last) {
          if (samples)
            while (next_sample < sample_times.size()) {
              samples->col(next_sample) = y;  // times at/after t1 clamp to endpoint
              ++next_sample;
            }
          return y;
        }
        if (std::abs(hnew) > hmax) hnew = posneg * hmax;
        if (reject) hnew = posneg * std::min(std::abs(hnew), std::abs(h));
        reject = false;
      } else {
        hnew = h / std::min(facc1, fac11 / safe);
        reject = true;
        last = false;
      }
      h = hnew;
    }
  }

 private:
  Rhs f_;
  OdeOptions opt_;

  double initial_step(double t, const VectorXd& y, const VectorXd& f0, double hmax,
                      double posneg, VectorXd& f1, VectorXd& ytmp) const {
    const int n = static_cast<int>(y.size());
    double dnf = 0.0, dny = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sk = opt_.abs_tol + opt_.rel_tol * std::abs(y[i]);
      double sqr = f0[i] / sk;
      dnf += sqr * sqr;
      sqr = y[i] / sk;
      dny += sqr * sqr;
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, hmax) * posneg;

    ytmp = y + h * f0;
    f_(t + h, ytmp, f1);
    double der2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sk = opt_.abs_tol + opt_.rel_tol * std::abs(y[i]);
      const double sqr = (f1[i] - f0[i]) / sk;
      der2 += sqr * sqr;
    }
    der2 = std::sqrt(der2) / std::abs(h);

    const double der12 = std::max(der2, std::sqrt(dnf));
    double h1 = (der12 <= 1e-15) ? std::max(1e-6, std::abs(h) * 1e-3)
                                 : std::pow(0.01 / der12, expo_);
    h = std::min({100.0 * std::abs(h), h1, hmax});
    return h * posneg;
  }

  /// Dense-output coefficients for the step just taken (3 extra stages).
  void prepare_dense(MatrixXd& rcont, double t, double h, const VectorXd& y,
                     const VectorXd& ynew, const VectorXd& k1, VectorXd& k2, VectorXd& k3,
                     const VectorXd& k6, const VectorXd& k7, const VectorXd& k8,
                     const VectorXd& k9, VectorXd& k10, const VectorXd& kc, VectorXd& ys) const {
    const int n = static_cast<int>(y.size());
    rcont.resize(8, n);
    for (int i = 0; i < n; ++i) {
      rcont(0, i) = y[i];
      const double ydiff = ynew[i] - y[i];
      rcont(1, i) = ydiff;
      const double bspl = h * k1[i] - ydiff;
      rcont(2, i) = bspl;
      rcont(3, i) = ydiff - h * kc[i] - bspl;
      rcont(4, i) = D41 * k1[i] + D46 * k6[i] + D47 * k7[i] + D48 * k8[i] + D49 * k9[i] +
                    D410 * k10[i] + D411 * k2[i] + D412 * k3[i];
      rcont(5, i) = D51 * k1[i] + D56 * k6[i] + D57 * k7[i] + D58 * k8[i] + D59 * k9[i] +
                    D510 * k10[i] + D511 * k2[i] + D512 * k3[i];
      rcont(6, i) = D61 * k1[i] + D66 * k6[i] + D67 * k7[i] + D68 * k8[i] + D69 * k9[i] +
                    D610 * k10[i] + D611 * k2[i] + D612 * k3[i];
      rcont(7, i) = D71 * k1[i] + D76 * k6[i] + D77 * k7[i] + D78 * k8[i] + D79 * k9[i] +
                    D710 * k10[i] + D711 * k2[i] + D712 * k3[i];
    }

    // Stages 14-16.
    ys = y + h * (A141 * k1 + A147 * k7 + A148 * k8 + A149 * k9 + A1410 * k10 + A1411 * k2 +
                  A1412 * k3 + A1413 * kc);
    f_(t + C14 * h, ys, k10);
    ys = y + h * (A151 * k1 + A156 * k6 + A157 * k7 + A158 * k8 + A1511 * k2 + A1512 * k3 +
                  A1513 * kc + A1514 * k10);
    f_(t + C15 * h, ys, k2);
    ys = y + h * (A161 * k1 + A166 * k6 + A167 * k7 + A168 * k8 + A169 * k9 + A1613 * kc +
                  A1614 * k10 + A1615 * k2);
    f_(t + C16 * h, ys, k3);

    for (int i = 0; i < n; ++i) {
      rcont(4, i) = h * (rcont(4, i) + D413 * kc[i] + D414 * k10[i] + D415 * k2[i] + D416 * k3[i]);
      rcont(5, i) = h * (rcont(5, i) + D513 * kc[i] + D514 * k10[i] + D515 * k2[i] + D516 * k3[i]);
      rcont(6, i) = h * (rcont(6, i) + D613 * kc[i] + D614 * k10[i] + D615 * k2[i] + D616 * k3[i]);
      rcont(7, i) = h * (rcont(7, i) + D713 * kc[i] + D714 * k10[i] + D715 * k2[i] + D716 * k3[i]);
    }
  }

  static constexpr double expo_ = 1.0 / 8.0;

  // Node, weight, and stage coefficients of the 8(5,3) pair.
  static constexpr double C2 = 0.526001519587677318785587544488e-01;
  static constexpr double C3 = 0.789002279381515978178381316732e-01;
  static constexpr double C4 = 0.118350341907227396726757197510e+00;
  static constexpr double C5 = 0.281649658092772603273242802490e+00;
  static constexpr double C6 = 0.333333333333333333333333333333e+00;
  static constexpr double C7 = 0.25e+00;
  static constexpr double C8 = 0.307692307692307692307692307692e+00;
  static constexpr double C9 = 0.651282051282051282051282051282e+00;
  static constexpr double C10 = 0.6e+00;
  static constexpr double C11 = 0.857142857142857142857142857142e+00;
  static constexpr double C14 = 0.1e+00;
  static constexpr double C15 = 0.2e+00;
  static constexpr double C16 = 0.777777777777777777777777777778e+00;

  static constexpr double B1 = 5.42937341165687622380535766363e-2;
  static constexpr double B6 = 4.45031289275240888144113950566e0;
  static constexpr double B7 = 1.89151789931450038304281599044e0;
  static constexpr double B8 = -5.8012039600105847814672114227e0;
  static constexpr double B9 = 3.1116436695781989440891606237e-1;
  static constexpr double B10 = -1.52160949662516078556178806805e-1;
  static constexpr double B11 = 2.01365400804030348374776537501e-1;
  static constexpr double B12 = 4.47106157277725905176885569043e-2;

  static constexpr double BHH1 = 0.244094488188976377952755905512e+00;
  static constexpr double BHH2 = 0.733846688281611857341361741547e+00;
  static constexpr double BHH3 = 0.220588235294117647058823529412e-01;

  static constexpr double ER1 = 0.1312004499419488073250102996e-01;
  static constexpr double ER6 = -0.1225156446376204440720569753e+01;
  static constexpr double ER7 = -0.4957589496572501915214079952e+00;
  static constexpr double ER8 = 0.1664377182454986536961530415e+01;
  static constexpr double ER9 = -0.3503288487499736816886487290e+00;
  static constexpr double ER10 = 0.3341791187130174790297318841e+00;
  static constexpr double ER11 = 0.8192320648511571246570742613e-01;
  static constexpr double ER12 = -0.2235530786388629525884427845e-01;

  static constexpr double A21 = 5.26001519587677318785587544488e-2;
  static constexpr double A31 = 1.97250569845378994544595329183e-2;
  static constexpr double A32 = 5.91751709536136983633785987549e-2;
  static constexpr double A41 = 2.95875854768068491816892993775e-2;
  static constexpr double A43 = 8.87627564304205475450678981324e-2;
  static constexpr double A51 = 2.41365134159266685502369798665e-1;
  static constexpr double A53 = -8.84549479328286085344864962717e-1;
  static constexpr double A54 = 9.24834003261792003115737966543e-1;
  static constexpr double A61 = 3.7037037037037037037037037037e-2;
  static constexpr double A64 = 1.70828608729473871279604482173e-1;
  static constexpr double A65 = 1.25467687566822425016691814123e-1;
  static constexpr double A71 = 3.7109375e-2;
  static constexpr double A74 = 1.70252211019544039314978060272e-1;
  static constexpr double A75 = 6.02165389804559606850219397283e-2;
  static constexpr double A76 = -1.7578125e-2;
  static constexpr double A81 = 3.70920001185047927108779319836e-2;
  static constexpr double A84 = 1.70383925712239993810214054705e-1;
  static constexpr double A85 = 1.07262030446373284651809199168e-1;
  static constexpr double A86 = -1.53194377486244017527936158236e-2;
  static constexpr double A87 = 8.27378916381402288758473766002e-3;
  static constexpr double A91 = 6.24110958716075717114429577812e-1;
  static constexpr double A94 = -3.36089262944694129406857109825e0;
  static constexpr double A95 = -8.68219346841726006818189891453e-1;
  static constexpr double A96 = 2.75920996994467083049415600797e1;
  static constexpr double A97 = 2.01540675504778934086186788979e1;
  static constexpr double A98 = -4.34898841810699588477366255144e1;
  static constexpr double A101 = 4.77662536438264365890433908527e-1;
  static constexpr double A104 = -2.48811461997166764192642586468e0;
  static constexpr double A105 = -5.90290826836842996371446475743e-1;
  static constexpr double A106 = 2.12300514481811942347288949897e1;
  static constexpr double A107 = 1.52792336328824235832596922938e1;
  static constexpr double A108 = -3.32882109689848629194453265587e1;
  static constexpr double A109 = -2.03312017085086261358222928593e-2;
  static constexpr double A111 = -9.3714243008598732571704021658e-1;
  static constexpr double A114 = 5.18637242884406370830023853209e0;
  static constexpr double A115 = 1.09143734899672957818500254654e0;
  static constexpr double A116 = -8.14978701074692612513997267357e0;
  static constexpr double A117 = -1.85200656599969598641566180701e1;
  static constexpr double A118 = 2.27394870993505042818970056734e1;
  static constexpr double A119 = 2.49360555267965238987089396762e0;
  static constexpr double A1110 = -3.0467644718982195003823669022e0;
  static constexpr double A121 = 2.27331014751653820792359768449e0;
  static constexpr double A124 = -1.05344954667372501984066689879e1;
  static constexpr double A125 = -2.00087205822486249909675718444e0;
  static constexpr double A126 = -1.79589318631187989172765950534e1;
  static constexpr double A127 = 2.79488845294199600508499808837e1;
  static constexpr double A128 = -2.85899827713502369474065508674e0;
  static constexpr double A129 = -8.87285693353062954433549289258e0;
  static constexpr double A1210 = 1.23605671757943030647266201528e1;
  static constexpr double A1211 = 6.43392746015763530355970484046e-1;

  static constexpr double A141 = 5.61675022830479523392909219681e-2;
  static constexpr double A147 = 2.53500210216624811088794765333e-1;
  static constexpr double A148 = -2.46239037470802489917441475441e-1;
  static constexpr double A149 = -1.24191423263816360469010140626e-1;
  static constexpr double A1410 = 1.5329179827876569731206322685e-1;
  static constexpr double A1411 = 8.20105229563468988491666602057e-3;
  static constexpr double A1412 = 7.56789766054569976138603589584e-3;
  static constexpr double A1413 = -8.298e-3;
  static constexpr double A151 = 3.18346481635021405060768473261e-2;
  static constexpr double A156 = 2.83009096723667755288322961402e-2;
  static constexpr double A157 = 5.35419883074385676223797384372e-2;
  static constexpr double A158 = -5.49237485713909884646569340306e-2;
  static constexpr double A1511 = -1.08347328697249322858509316994e-4;
  static constexpr double A1512 = 3.82571090835658412954920192323e-4;
  static constexpr double A1513 = -3.40465008687404560802977114492e-4;
  static constexpr double A1514 = 1.41312443674632500278074618366e-1;
  static constexpr double A161 = -4.28896301583791923408573538692e-1;
  static constexpr double A166 = -4.69762141536116384314449447206e0;
  static constexpr double A167 = 7.68342119606259904184240953878e0;
  static constexpr double A168 = 4.06898981839711007970213554331e0;
  static constexpr double A169 = 3.56727187455281109270669543021e-1;
  static constexpr double A1613 = -1.39902416515901462129418009734e-3;
  static constexpr double A1614 = 2.9475147891527723389556272149e0;
  static constexpr double A1615 = -9.15095847217987001081870187138e0;

  static constexpr double D41 = -0.84289382761090128651353491142e+01;
  static constexpr double D46 = 0.56671495351937776962531783590e+00;
  static constexpr double D47 = -0.30689499459498916912797304727e+01;
  static constexpr double D48 = 0.23846676565120698287728149680e+01;
  static constexpr double D49 = 0.21170345824450282767155149946e+01;
  static constexpr double D410 = -0.87139158377797299206789907490e+00;
  static constexpr double D411 = 0.22404374302607882758541771650e+01;
  static constexpr double D412 = 0.63157877876946881815570249290e+00;
  static constexpr double D413 = -0.88990336451333310820698117400e-01;
  static constexpr double D414 = 0.18148505520854727256656404962e+02;
  static constexpr double D415 = -0.91946323924783554000451984436e+01;
  static constexpr double D416 = -0.44360363875948939664310572000e+01;
  static constexpr double D51 = 0.10427508642579134603413151009e+02;
  static constexpr double D56 = 0.24228349177525818288430175319e+03;
  static constexpr double D57 = 0.16520045171727028198505394887e+03;
  static constexpr double D58 = -0.37454675472269020279518312152e+03;
  static constexpr double D59 = -0.22113666853125306036270938578e+02;
  static constexpr double D510 = 0.77334326684722638389603898808e+01;
  static constexpr double D511 = -0.30674084731089398182061213626e+02;
  static constexpr double D512 = -0.93321305264302278729567221706e+01;
  static constexpr double D513 = 0.15697238121770843886131091075e+02;
  static constexpr double D514 = -0.31139403219565177677282850411e+02;
  static constexpr double D515 = -0.93529243588444783865713862664e+01;
  static constexpr double D516 = 0.35816841486394083752465898540e+02;
  static constexpr double D61 = 0.19985053242002433820987653617e+02;
  static constexpr double D66 = -0.38703730874935176555105901742e+03;
  static constexpr double D67 = -0.18917813819516756882830838328e+03;
  static constexpr double D68 = 0.52780815920542364900561016686e+03;
  static constexpr double D69 = -0.11573902539959630126141871134e+02;
  static constexpr double D610 = 0.68812326946963000169666922661e+01;
  static constexpr double D611 = -0.10006050966910838403183860980e+01;
  static constexpr double D612 = 0.77771377980534432092869265740e+00;
  static constexpr double D613 = -0.27782057523535084065932004339e+01;
  static constexpr double D614 = -0.60196695231264120758267380846e+02;
  static constexpr double D615 = 0.84320405506677161018159903784e+02;
  static constexpr double D616 = 0.11992291136182789328035130030e+02;
  static constexpr double D71 = -0.25693933462703749003312586129e+02;
  static constexpr double D76 = -0.15418974869023643374053993627e+03;
  static constexpr double D77 = -0.23152937917604549567536039109e+03;
  static constexpr double D78 = 0.35763911791061412378285349910e+03;
  static constexpr double D79 = 0.93405324183624310003907691704e+02;
  static constexpr double D710 = -0.37458323136451633156875139351e+02;
  static constexpr double D711 = 0.10409964950896230045147246184e+03;
  static constexpr double D712 = 0.29840293426660503123344363579e+02;
  static constexpr double D713 = -0.43533456590011143754432175058e+02;
  static constexpr double D714 = 0.96324553959188282948394950600e+02;
  static constexpr double D715 = -0.39177261675615439165231486172e+02;
  static constexpr double D716 = -0.14972683625798562581422125276e+03;
};

}  // namespace nmodes
