#include "streamcqr/pilot_grid.hpp"

#include <algorithm>
#include <cmath>

#include "streamcqr/errors.hpp"

namespace streamcqr {

double check_loss(double u, double tau) noexcept { return u * (tau - (u <= 0.0 ? 1.0 : 0.0)); }

std::vector<double> uniform_taus(std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t j = 0; j < count; ++j) t[j] = static_cast<double>(j + 1) / static_cast<double>(count + 1);
  return t;
}

std::vector<double> even_grid(const Interval& I, std::size_t size) {
  if (size == 0) throw InvalidArgument("even_grid: size must be positive");
  if (size == 1) return {0.5 * (I.lo + I.hi)};
  std::vector<double> g(size);
  for (std::size_t i = 0; i < size; ++i) {
    g[i] = i + 1 == size ? I.hi : I.lo + I.length() * static_cast<double>(i) / static_cast<double>(size - 1);
  }
  return g;
}

std::vector<std::size_t> nearest_covariates(double x, const Chunk& data, std::size_t k) {
  if (k > data.size()) throw InvalidArgument("nearest_covariates: k exceeds the sample size");
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto closer = [&](std::size_t a, std::size_t b) {
    const double da = std::abs(data.x[a] - x), db = std::abs(data.x[b] - x);
    if (da != db) return da < db;
    if (data.x[a] != data.x[b]) return data.x[a] < data.x[b];
    return a < b;
  };
  std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), closer);
  idx.resize(k);
  std::sort(idx.begin(), idx.end(), closer);
  return idx;
}

double sample_quantile(std::vector<double> ys, double tau) {
  if (ys.empty()) throw InvalidArgument("sample_quantile: empty sample");
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("sample_quantile: tau must lie in (0, 1)");
  const double kt = static_cast<double>(ys.size()) * tau;
  const double r = std::round(kt);
  const double rank = std::abs(kt - r) < 1e-9 ? r : std::ceil(kt);
  const std::size_t pos = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  std::nth_element(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(pos), ys.end());
  return ys[pos];
}

double local_quantile(double x, const Chunk& data, double tau, std::size_t k) {
  if (k == 0 || data.empty()) throw InvalidArgument("local_quantile: empty neighbourhood");
  const auto idx = nearest_covariates(x, data, k);
  std::vector<double> ys;
  ys.reserve(k);
  for (std::size_t i : idx) ys.push_back(data.y[i]);
  return sample_quantile(std::move(ys), tau);
}

std::vector<double> dedup_nodes(std::vector<double> v, std::size_t min_size, bool* jittered) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (jittered) *jittered = false;
  if (v.size() >= min_size || v.empty()) return v;
  if (jittered) *jittered = true;
  const double lo = v.front(), hi = v.back();
  const double eps = hi > lo ? 1e-9 * (hi - lo) : 1e-9 * std::max(1.0, std::abs(lo));
  // spread min_size nodes symmetrically around the distinct values by eps steps
  std::vector<double> out = v;
  for (std::size_t k = 1; out.size() < min_size; ++k) {
    out.push_back(hi + static_cast<double>(k) * eps);
    if (out.size() < min_size) out.push_back(lo - static_cast<double>(k) * eps);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PilotGrids build_grids(const Chunk& validation, const PilotConfig& config) {
  validate_chunk(validation);
  const std::size_t ntau = config.taus.size();
  if (ntau == 0) throw InvalidArgument("build_grids: no quantile levels");
  for (std::size_t j = 0; j < ntau; ++j) {
    if (!(config.taus[j] > 0.0 && config.taus[j] < 1.0) || (j > 0 && !(config.taus[j] > config.taus[j - 1]))) {
      throw InvalidArgument("build_grids: quantile levels must be strictly increasing in (0, 1)");
    }
  }
  const auto frac_k = static_cast<std::size_t>(std::floor(config.neighbour_fraction * static_cast<double>(validation.size())));
  const std::size_t k = std::max(frac_k, ntau);
  if (validation.size() < k || validation.empty()) {
    throw DataError("build_grids: too few validation samples for the neighbourhood size");
  }
  PilotGrids out;
  out.grid = even_grid(config.domain, config.grid_size);
  out.nodes.reserve(out.grid.size());
  const std::size_t min_size = static_cast<std::size_t>(config.degree) + 1;
  for (double x : out.grid) {
    const auto idx = nearest_covariates(x, validation, k);
    std::vector<double> ys;
    ys.reserve(k);
    for (std::size_t i : idx) ys.push_back(validation.y[i]);
    std::sort(ys.begin(), ys.end());
    std::vector<double> q(ntau);
    for (std::size_t j = 0; j < ntau; ++j) q[j] = sample_quantile(ys, config.taus[j]);
    bool jit = false;
    out.nodes.push_back(dedup_nodes(std::move(q), min_size, &jit));
    if (jit) ++out.jittered;
  }
  return out;
}

}  // namespace streamcqr
