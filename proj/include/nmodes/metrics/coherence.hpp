#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "nmodes/types.hpp"

namespace nmodes {

namespace detail {

/// In-place iterative radix-2 FFT; x.size() must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> step(std::cos(ang), std::sin(ang));
    for (std::size_t base = 0; base < n; base += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[base + k];
        const std::complex<double> v = x[base + k + len / 2] * w;
        x[base + k] = u + v;
        x[base + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
}

}  // namespace detail

struct CoherenceOptions {
  int segment = 1024;        // Welch segment length, power of two
  double overlap = 0.5;      // fraction of segment shared by neighbors
  double power_floor = 1e-12;  // bin retention threshold relative to peak power
};

/**
 * Minimum over frequency of the Welch magnitude-squared coherence
 * |G_ab|^2 / (G_aa G_bb), Hann-windowed segments, global means removed.
 *
 * The DC bin is excluded and bins are retained only where the pooled
 * auto-power product exceeds power_floor times its peak, so roundoff-level
 * bins cannot drag the minimum down. If no bin survives (both signals
 * silent), the result is 1 and *degenerate is set.
 */
inline double min_msc_coherence(const VectorXd& a, const VectorXd& b, double rate_hz,
                                const CoherenceOptions& opts = {},
                                bool* degenerate = nullptr) {
  if (degenerate) *degenerate = false;
  if (a.size() != b.size()) throw DimensionError("min_msc_coherence: length mismatch");
  if (!(rate_hz > 0.0)) throw DomainError("min_msc_coherence: rate must be positive");
  const int seg = opts.segment;
  if (seg < 8 || (seg & (seg - 1)) != 0)
    throw DomainError("min_msc_coherence: segment length must be a power of two >= 8");
  const int hop = static_cast<int>(seg * (1.0 - opts.overlap));
  if (hop < 1) throw DomainError("min_msc_coherence: overlap too large");
  const Eigen::Index n = a.size();
  if (n < seg + 3 * hop)
    throw DomainError("min_msc_coherence: signals shorter than 4 Welch segments");

  const double mean_a = a.mean(), mean_b = b.mean();
  std::vector<double> window(seg);
  for (int k = 0; k < seg; ++k)
    window[k] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * k / seg));

  const int half = seg / 2;
  std::vector<double> gaa(half + 1, 0.0), gbb(half + 1, 0.0);
  std::vector<std::complex<double>> gab(half + 1, {0.0, 0.0});
  std::vector<std::complex<double>> fa(seg), fb(seg);

  for (Eigen::Index off = 0; off + seg <= n; off += hop) {
    for (int k = 0; k < seg; ++k) {
      fa[k] = window[k] * (a[off + k] - mean_a);
      fb[k] = window[k] * (b[off + k] - mean_b);
    }
    detail::fft_radix2(fa);
    detail::fft_radix2(fb);
    for (int k = 0; k <= half; ++k) {
      gaa[k] += std::norm(fa[k]);
      gbb[k] += std::norm(fb[k]);
      gab[k] += std::conj(fa[k]) * fb[k];
    }
  }

  double peak = 0.0;
  for (int k = 1; k <= half; ++k) peak = std::max(peak, gaa[k] * gbb[k]);

  double min_msc = 1.0;
  bool any = false;
  for (int k = 1; k <= half; ++k) {
    const double pooled = gaa[k] * gbb[k];
    if (pooled <= opts.power_floor * peak || pooled <= 0.0) continue;
    any = true;
    min_msc = std::min(min_msc, std::norm(gab[k]) / pooled);
  }
  if (!any) {
    if (degenerate) *degenerate = true;
    return 1.0;
  }
  return min_msc;
}

}  // namespace nmodes
