#pragma once

// Shared fixtures: the cylindrical-rod parameter set used across the suite
// (radius 0.02 m, density 1062 kg/m^3, length 0.4 m, Young modulus 0.66 MPa)
// and seeded random-state helpers.

#include <random>

#include "nmodes/models/planar_arm.hpp"

namespace nmodes::testing {

inline SoftArmParams study_rod(int n_bodies) {
  SoftArmParams p;
  p.radius = 0.02;
  p.density = 1062.0;
  p.rest_length = 0.4;
  p.young_modulus = 0.66e6;
  p.poisson = 0.5;
  p.n_bodies = n_bodies;
  return p;
}

inline ModelPtr study_pcc(int n) { return build_pcc(study_rod(n)); }
inline ModelPtr study_rigid(int n = 10) {
  return build_rigid_chain(rigid_chain_from_rod(study_rod(n)));
}

inline VectorXd random_config(std::mt19937& rng, int n, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = dist(rng);
  return q;
}

}  // namespace nmodes::testing
