#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nmodes/types.hpp"

namespace nmodes {

/**
 * Discrete Fréchet distance between two scalar sequences under the
 * absolute-difference ground metric: the minimum over monotone couplings of
 * the maximum pointwise distance, by the standard dynamic program with a
 * rolling row (O(|a||b|) time, O(|b|) space).
 */
inline double discrete_frechet(const VectorXd& a, const VectorXd& b) {
  const Eigen::Index na = a.size(), nb = b.size();
  if (na == 0 || nb == 0) throw DomainError("discrete_frechet: empty sequence");

  std::vector<double> row(static_cast<std::size_t>(nb));
  row[0] = std::abs(a[0] - b[0]);
  for (Eigen::Index j = 1; j < nb; ++j)
    row[j] = std::max(row[j - 1], std::abs(a[0] - b[j]));

  std::vector<double> next(static_cast<std::size_t>(nb));
  for (Eigen::Index i = 1; i < na; ++i) {
    next[0] = std::max(row[0], std::abs(a[i] - b[0]));
    for (Eigen::Index j = 1; j < nb; ++j) {
      const double reach = std::min({row[j], row[j - 1], next[j - 1]});
      next[j] = std::max(reach, std::abs(a[i] - b[j]));
    }
    row.swap(next);
  }
  return row[static_cast<std::size_t>(nb - 1)];
}

}  // namespace nmodes
