#pragma once

#include <functional>
#include <span>
#include <vector>

#include "streamcqr/pilot_grid.hpp"
#include "streamcqr/renewable.hpp"
#include "streamcqr/wcqr.hpp"

namespace streamcqr {

/// 16 log-spaced values over [1e-3, 1e2], three per decade.
std::vector<double> default_ch_candidates();

struct CvResult {
  double C_h = 0.0;
  std::vector<double> candidates;
  std::vector<double> scores;  ///< mean held-out squared error; +inf when a fit failed
};

/// Fits on the training folds with constant C and predicts at x_eval; NaN marks an undefined prediction.
using FoldPredictor =
    std::function<std::vector<double>(const Chunk& train, std::span<const double> x_eval, double C)>;

/// K-fold cross-validation of the bandwidth constant. Fold of sample i is i % folds. Only held-out
/// points with x inside `domain` are scored. Ties (relative 1e-9, absolute 1e-12 * max(1, mean y^2))
/// go to the smaller candidate.
CvResult cross_validate_Ch(const Chunk& validation, std::size_t folds, std::span<const double> candidates,
                           const Interval& domain, const FoldPredictor& predict);

/// Cross-validated C_h for the mean curve of the given mode with h = C^(1/5) n_train^(-1/5), on fixed
/// pilot grids.
CvResult estimate_Ch(const Chunk& validation, const PilotGrids& grids, const StateConfig& config,
                     std::size_t folds = 10, std::span<const double> candidates = {},
                     MeanMode mode = MeanMode::Ntm);

/// Same, building the pilot grids from the validation sample first.
CvResult estimate_Ch(const Chunk& validation, const PilotConfig& pilot, const StateConfig& config,
                     std::size_t folds = 10, std::span<const double> candidates = {},
                     MeanMode mode = MeanMode::Ntm);

}  // namespace streamcqr
