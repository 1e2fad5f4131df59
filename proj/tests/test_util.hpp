#pragma once

#include <cmath>
#include <vector>

#include "entgame/prob.hpp"

namespace entgame::testing {

// Random pmf with an occasional zero entry.
inline Pmf random_pmf(Rng& rng, int size, double zero_prob = 0.1) {
  std::vector<double> w(size);
  double s = 0.0;
  for (double& v : w) {
    v = rng.uniform() < zero_prob ? 0.0 : -std::log(1.0 - rng.uniform());
    s += v;
  }
  if (s == 0.0) w[rng.below(size)] = 1.0;
  return Pmf::from_weights(std::move(w));
}

inline JointPmf random_joint(Rng& rng, int nx, int ny, double zero_prob = 0.1) {
  const Pmf flat = random_pmf(rng, nx * ny, zero_prob);
  return JointPmf(nx, ny, flat.probs());
}

// Row-stochastic channel as a vector of rows.
inline std::vector<Pmf> random_channel(Rng& rng, int nin, int nout) {
  std::vector<Pmf> rows;
  for (int i = 0; i < nin; ++i) rows.push_back(random_pmf(rng, nout, 0.2));
  return rows;
}

inline int random_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(hi - lo + 1));
}

}  // namespace entgame::testing
