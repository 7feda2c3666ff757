#include "streamcqr/cv.hpp"

#include <cmath>
#include <limits>

#include "streamcqr/errors.hpp"
#include "streamcqr/wcqr.hpp"

namespace streamcqr {

std::vector<double> default_ch_candidates() {
  std::vector<double> c(16);
  for (int k = 0; k < 16; ++k) c[static_cast<std::size_t>(k)] = std::pow(10.0, -3.0 + k / 3.0);
  return c;
}

CvResult cross_validate_Ch(const Chunk& validation, std::size_t folds, std::span<const double> candidates,
                           const Interval& domain, const FoldPredictor& predict) {
  validate_chunk(validation);
  if (folds < 2) throw InvalidArgument("cross-validation needs at least two folds");
  if (candidates.empty()) throw InvalidArgument("cross-validation needs at least one candidate");
  for (double c : candidates)
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("bandwidth constants must be positive");
  if (validation.size() < folds * 10) throw DataError("validation sample too small for the number of folds");

  CvResult res;
  res.candidates.assign(candidates.begin(), candidates.end());
  if (candidates.size() == 1) {
    res.C_h = candidates.front();
    res.scores.assign(1, 0.0);
    return res;
  }
  std::vector<Chunk> train(folds), test(folds);
  double mean_y2 = 0.0;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    const std::size_t f = i % folds;
    mean_y2 += validation.y[i] * validation.y[i];
    for (std::size_t g = 0; g < folds; ++g) {
      if (g == f) {
        if (domain.contains(validation.x[i])) test[g].push_back(validation.x[i], validation.y[i]);
      } else {
        train[g].push_back(validation.x[i], validation.y[i]);
      }
    }
  }
  mean_y2 /= static_cast<double>(validation.size());
  const double inf = std::numeric_limits<double>::infinity();
  for (double C : candidates) {
    double total = 0.0;
    std::size_t count = 0;
    bool failed = false;
    for (std::size_t f = 0; f < folds && !failed; ++f) {
      if (test[f].empty()) continue;
      std::vector<double> pred;
      try {
        pred = predict(train[f], test[f].x, C);
      } catch (const Error&) {
        failed = true;
        break;
      }
      for (std::size_t j = 0; j < pred.size(); ++j) {
        if (!std::isfinite(pred[j])) {
          failed = true;
          break;
        }
        const double e = test[f].y[j] - pred[j];
        total += e * e;
        ++count;
      }
    }
    res.scores.push_back(failed || count == 0 ? inf : total / static_cast<double>(count));
  }
  const double abs_tol = 1e-12 * std::max(1.0, mean_y2);
  std::size_t best = 0;
  for (std::size_t k = 1; k < res.scores.size(); ++k) {
    const double a = res.scores[k], b = res.scores[best];
    if (!std::isfinite(a)) continue;
    if (!std::isfinite(b)) {
      best = k;
      continue;
    }
    const double tol = 1e-9 * std::max(std::abs(a), std::abs(b)) + abs_tol;
    if (a < b - tol || (std::abs(a - b) <= tol && res.candidates[k] < res.candidates[best])) best = k;
  }
  res.C_h = res.candidates[best];
  return res;
}

CvResult estimate_Ch(const Chunk& validation, const PilotGrids& grids, const StateConfig& config, std::size_t folds,
                     std::span<const double> candidates, MeanMode mode) {
  const auto defaults = default_ch_candidates();
  if (candidates.empty()) candidates = defaults;
  const RenewableState blank = init_state(grids.grid, grids.nodes, config);
  const Interval range{grids.grid.front(), grids.grid.back()};
  auto predict = [&](const Chunk& train, std::span<const double> xs, double C) {
    RenewableState st = blank;
    update_chunk(st, train, std::pow(C, 0.2) * std::pow(static_cast<double>(train.size()), -0.2));
    Estimator est(std::move(st), EstimatorOptions{false, true});
    const auto curve = est.mean(mode);
    std::vector<double> out(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) out[j] = curve(xs[j]);
    return out;
  };
  return cross_validate_Ch(validation, folds, candidates, range, predict);
}

CvResult estimate_Ch(const Chunk& validation, const PilotConfig& pilot, const StateConfig& config, std::size_t folds,
                     std::span<const double> candidates, MeanMode mode) {
  return estimate_Ch(validation, build_grids(validation, pilot), config, folds, candidates, mode);
}

}  // namespace streamcqr
