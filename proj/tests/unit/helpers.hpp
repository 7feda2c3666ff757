#pragma once

#include <cmath>
#include <vector>

#include "streamcqr/pilot_grid.hpp"
#include "streamcqr/renewable.hpp"
#include "streamcqr/rng.hpp"
#include "streamcqr/simbench.hpp"

namespace testing {

using namespace streamcqr;

inline double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline double normal(CounterRng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Model-1 style stream: given x law, m and sigma.
template <class M, class S>
Chunk draw(CounterRng& rng, std::size_t n, M m, S sigma, double xlo = 0.0, double xhi = 1.0) {
  Chunk c;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = uniform(rng, xlo, xhi);
    c.push_back(x, m(x) + sigma(x) * normal(rng));
  }
  return c;
}

/// Pilot grids from a validation sample with the default levels.
inline PilotGrids grids_for(const Chunk& validation, Interval domain, std::size_t grid_size, int degree = 3) {
  PilotConfig pc;
  pc.domain = domain;
  pc.grid_size = grid_size;
  pc.degree = degree;
  return build_grids(validation, pc);
}

/// State fed with `data` in one chunk at bandwidth h.
inline RenewableState fitted_state(const Chunk& validation, const Chunk& data, Interval domain, std::size_t grid_size,
                                   double h, double alpha = 0.1) {
  const PilotGrids g = grids_for(validation, domain, grid_size);
  StateConfig sc;
  sc.domain = domain;
  sc.alpha = alpha;
  RenewableState st = init_state(g.grid, g.nodes, sc);
  update_chunk(st, data, h);
  return st;
}

}  // namespace testing
