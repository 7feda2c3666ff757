#include "streamcqr/weights.hpp"

#include <cmath>

#include "streamcqr/errors.hpp"

namespace streamcqr {

void validate_weight(const WeightFunction& J) {
  for (const auto& p : J.pieces()) {
    if (p.lo < 0.0 || p.hi > 1.0) throw InvalidArgument("weight function support must lie in [0, 1]");
  }
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidArgument("alpha must lie in (0, 0.5)");
}

}  // namespace

WeightFunction trimmed_component(double alpha, TrimSide side) {
  check_alpha(alpha);
  const double level = 1.0 / (0.5 - alpha);
  if (side == TrimSide::Lower) return WeightFunction::constant(alpha, 0.5, level, true);
  return WeightFunction::constant(0.5, 1.0 - alpha, level, false);
}

WeightFunction mean_weight(double alpha, double w) {
  if (!std::isfinite(w)) throw InvalidArgument("mixing weight must be finite");
  return WeightFunction::combine(w, trimmed_component(alpha, TrimSide::Lower), 1.0 - w,
                                 trimmed_component(alpha, TrimSide::Upper));
}

WeightFunction sd_weight(double alpha, double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw InvalidArgument("theta must be finite and >= 0");
  return WeightFunction::combine(-theta, trimmed_component(alpha, TrimSide::Lower), theta,
                                 trimmed_component(alpha, TrimSide::Upper));
}

}  // namespace streamcqr
