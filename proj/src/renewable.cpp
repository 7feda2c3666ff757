#include "streamcqr/renewable.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "streamcqr/errors.hpp"
#include "streamcqr/lpi.hpp"
#include "streamcqr/numerics.hpp"

namespace streamcqr {

PiecewisePolynomial indicator(const Interval& I) { return PiecewisePolynomial::constant(I.lo, I.hi, 1.0, true); }

double covariate_weight(const StateConfig& config, double x) noexcept {
  if (config.W.empty()) return config.domain.contains(x) ? 1.0 : 0.0;
  return config.W(x);
}

void validate_chunk(const Chunk& chunk) {
  if (chunk.x.size() != chunk.y.size()) throw DataError("chunk: x and y lengths differ");
  for (std::size_t j = 0; j < chunk.x.size(); ++j) {
    if (!std::isfinite(chunk.x[j]) || !std::isfinite(chunk.y[j])) {
      throw DataError("chunk: non-finite value in row " + std::to_string(j + 1));
    }
  }
}

RenewableState init_state(std::vector<double> grid, std::vector<std::vector<double>> nodes, StateConfig config,
                          BandwidthState bandwidth) {
  if (!(config.domain.lo < config.domain.hi) || !std::isfinite(config.domain.lo) ||
      !std::isfinite(config.domain.hi)) {
    throw InvalidArgument("init_state: domain must be a finite interval with lo < hi");
  }
  if (config.degree < 1) throw InvalidArgument("init_state: interpolation degree must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 0.5)) throw InvalidArgument("init_state: alpha must lie in (0, 0.5)");
  if (grid.empty()) throw InvalidArgument("init_state: covariate grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || !config.domain.contains(grid[i])) {
      throw InvalidArgument("init_state: grid points must lie in the domain");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidArgument("init_state: grid must be strictly increasing");
  }
  if (nodes.size() != grid.size()) throw InvalidArgument("init_state: one node set per grid point required");
  for (const auto& g : nodes) validate_nodes(g, config.degree);

  RenewableState st;
  st.config = std::move(config);
  st.grid = std::move(grid);
  st.nodes = std::move(nodes);
  st.fX.assign(st.grid.size(), 0.0);
  st.S.resize(st.grid.size());
  for (std::size_t i = 0; i < st.grid.size(); ++i) st.S[i].assign(st.nodes[i].size(), 0.0);
  st.bandwidth = std::move(bandwidth);
  st.fingerprint = config_fingerprint(st);
  return st;
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ULL;
    }
  }
  void f64(double v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
};

}  // namespace

std::uint64_t config_fingerprint(const RenewableState& st) {
  Fnv f;
  f.u64(st.grid.size());
  for (double g : st.grid) f.f64(g);
  for (const auto& ns : st.nodes) {
    f.u64(ns.size());
    for (double v : ns) f.f64(v);
  }
  f.u64(static_cast<std::uint64_t>(st.config.kernel.type()));
  f.u64(static_cast<std::uint64_t>(st.config.degree));
  f.f64(st.config.alpha);
  f.f64(st.config.domain.lo);
  f.f64(st.config.domain.hi);
  f.u64(st.config.W.pieces().size());
  for (const auto& p : st.config.W.pieces()) {
    f.f64(p.lo);
    f.f64(p.hi);
    f.u64(p.lo_closed ? 1 : 0);
    f.f64(p.poly.center);
    for (double c : p.poly.coeffs) f.f64(c);
  }
  return f.h;
}

namespace {

// Per grid point workspace: compensated density sum and difference bins over node positions.
struct PointAccumulator {
  CompensatedSum density;
  std::vector<CompensatedSum> bins;  // bins[p] collects weights whose sub-CDF indicator starts at node p
  bool touched = false;
};

void add_sample(PointAccumulator& acc, const std::vector<double>& nodes, double w, double y) {
  acc.touched = true;
  acc.density.add(w);
  // I(y < y_ij) holds for j >= p
  const std::size_t p = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), y) - nodes.begin());
  if (p < nodes.size()) acc.bins[p].add(w);
}

void commit(RenewableState& st, std::vector<PointAccumulator>& acc, const Chunk& chunk) {
  const std::uint64_t n = chunk.size();
  const std::uint64_t N_new = st.N + n;
  const double keep = static_cast<double>(st.N) / static_cast<double>(N_new);
  const double inv = 1.0 / static_cast<double>(N_new);
  for (std::size_t i = 0; i < st.grid.size(); ++i) {
    st.fX[i] = keep * st.fX[i] + acc[i].density.value() * inv;
    auto& row = st.S[i];
    if (!acc[i].touched) {
      for (double& v : row) v *= keep;
      continue;
    }
    CompensatedSum run;
    for (std::size_t j = 0; j < row.size(); ++j) {
      run.add(acc[i].bins[j].value());
      row[j] = keep * row[j] + run.value() * inv;
    }
  }
  CompensatedSum wy, wy2;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = covariate_weight(st.config, chunk.x[j]);
    if (w == 0.0) continue;
    wy.add(w * chunk.y[j]);
    wy2.add(w * chunk.y[j] * chunk.y[j]);
  }
  st.E_WY = keep * st.E_WY + wy.value() * inv;
  st.E_WY2 = keep * st.E_WY2 + wy2.value() * inv;
  st.N = N_new;
}

std::vector<PointAccumulator> make_accumulators(const RenewableState& st) {
  std::vector<PointAccumulator> acc(st.grid.size());
  for (std::size_t i = 0; i < st.grid.size(); ++i) acc[i].bins.resize(st.nodes[i].size());
  return acc;
}

}  // namespace

void update_chunk(RenewableState& st, const Chunk& chunk, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("update_chunk: bandwidth must be positive and finite");
  validate_chunk(chunk);
  if (chunk.empty()) return;
  auto acc = make_accumulators(st);
  const Kernel& K = st.config.kernel;
  const double reach = K.support_radius() * h;
  for (std::size_t j = 0; j < chunk.size(); ++j) {
    const double xj = chunk.x[j], yj = chunk.y[j];
    auto first = std::lower_bound(st.grid.begin(), st.grid.end(), xj - reach);
    for (auto it = first; it != st.grid.end() && *it <= xj + reach; ++it) {
      const double w = scaled_kernel(K, xj - *it, h);
      if (w <= 0.0) continue;
      const auto i = static_cast<std::size_t>(it - st.grid.begin());
      add_sample(acc[i], st.nodes[i], w, yj);
    }
  }
  commit(st, acc, chunk);
}

void update_chunk(RenewableState& st, const Chunk& chunk, std::span<const double> h_per_point) {
  if (h_per_point.size() != st.grid.size()) throw InvalidArgument("update_chunk: one bandwidth per grid point required");
  for (double h : h_per_point)
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("update_chunk: bandwidths must be positive and finite");
  validate_chunk(chunk);
  if (chunk.empty()) return;
  auto acc = make_accumulators(st);
  const Kernel& K = st.config.kernel;
  for (std::size_t i = 0; i < st.grid.size(); ++i) {
    const double h = h_per_point[i];
    for (std::size_t j = 0; j < chunk.size(); ++j) {
      const double w = scaled_kernel(K, chunk.x[j] - st.grid[i], h);
      if (w > 0.0) add_sample(acc[i], st.nodes[i], w, chunk.y[j]);
    }
  }
  commit(st, acc, chunk);
}

double ingest(RenewableState& st, const Chunk& chunk) {
  validate_chunk(chunk);
  if (chunk.empty()) return 0.0;
  BandwidthState next = st.bandwidth;
  if (next.variable()) {
    const auto h = next_variable_bandwidths(next, chunk.size());
    update_chunk(st, chunk, h);
    st.bandwidth = std::move(next);
    double s = 0.0;
    for (double v : h) s += v;
    return s / static_cast<double>(h.size());
  }
  const double h = next_bandwidth(next, chunk.size());
  update_chunk(st, chunk, h);
  st.bandwidth = std::move(next);
  return h;
}

}  // namespace streamcqr
