#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamcqr/bandwidth.hpp"
#include "streamcqr/error_law.hpp"
#include "streamcqr/kernel.hpp"
#include "streamcqr/pilot_grid.hpp"
#include "streamcqr/renewable.hpp"
#include "streamcqr/rng.hpp"
#include "streamcqr/wcqr.hpp"

namespace streamcqr {

enum class ErrorKind { Normal, Laplace, T3, Pareto3, F10_6, F4_6, Lognormal };

ErrorKind parse_error_kind(const std::string& name);
std::string error_kind_name(ErrorKind kind);

/// Centered error law; unit variance except for Pareto(3) and the F laws, which are centered only.
ErrorLaw make_error_law(ErrorKind kind);

/// Y = m(X) + sigma(X) e with the covariate law and estimation interval.
struct RegressionModel {
  int id = 1;
  Interval domain;
  double m(double x) const;
  double sigma(double x) const;
  double covariate_quantile(double u) const;
  ModelOracle oracle() const;
};

RegressionModel make_model(int id);

/// Stochastic description of one simulated stream.
struct StreamSpec {
  int model = 1;
  ErrorKind error = ErrorKind::Normal;
  double lambda = 1.0;  ///< contamination multiplier; 5% of errors are scaled by it
  double sigma_scale = 1.0;
};

/// Standard deviation of the contaminated error: sd(e) sqrt(0.95 + 0.05 lambda^2).
double mixture_sd(const ErrorLaw& law, double lambda);

/// N draws; deterministic in the generator state.
Chunk generate(const StreamSpec& spec, std::size_t N, CounterRng& rng);

/// Consecutive chunks of the given size; the last one may be shorter.
std::vector<Chunk> split_chunks(const Chunk& data, std::size_t chunk_size);

/// First n rows.
Chunk head(const Chunk& data, std::size_t n);

double nw_mean(const Chunk& data, double h, double x, const Kernel& kernel = Kernel());
double nw_sd(const Chunk& data, double h, double x, const Kernel& kernel = Kernel());

/// Cross-validated NW bandwidth constant (h = C^(1/5) n^(-1/5)).
double nw_cross_validate(const Chunk& validation, const Interval& domain, std::size_t folds = 10,
                         const Kernel& kernel = Kernel());

enum class LocalEstimator { Ntm, Bctm, Rtsd };

/// Average over chunks of the per-chunk estimator with h_t = C^(1/5) n_t^(-1/5). Chunks with fewer
/// samples than the largest node set are unusable; throws ChunkTooSmall when none is usable.
/// Grid points are averaged over the chunks that produced them.
CurveEstimate simple_average_estimator(const std::vector<Chunk>& chunks, const PilotGrids& grids,
                                       const StateConfig& config, double C_h, LocalEstimator which,
                                       bool symmetric_model);

/// Mean over grid points of squared error; NaN estimates are ignored. NaN if none is finite.
double ase(const std::vector<double>& estimate, const std::vector<double>& truth);
/// ASE(a) / ASE(b); throws InvalidArgument on a zero denominator.
double rase(double ase_a, double ase_b);

struct ScenarioConfig {
  std::string name = "scenario";
  StreamSpec stream;
  std::size_t N_T = 20000;
  std::vector<std::size_t> chunk_sizes{1000};
  std::uint64_t seed = 1;
  std::size_t replications = 50;
  std::size_t validation_size = 2000;
  std::size_t grid_size = 100;
  std::size_t tau_count = 99;
  int degree = 3;
  double alpha = 0.1;
  std::size_t folds = 10;
  std::vector<double> candidates;  ///< empty: default grid
  double fixed_C_h = 0.0;          ///< > 0 skips cross-validation of the WCQR constant
  double fixed_C_nw = 0.0;         ///< > 0 skips cross-validation of the NW constant
  int symmetric = -1;              ///< -1: from the error law, 0/1: forced
  /// RASE pairs "a/b" over: oracle_ntm, oracle_bctm, oracle_rtsd, renewable_*, average_*, nw, nwsd.
  std::vector<std::string> pairs{"oracle_ntm/renewable_ntm", "nw/renewable_ntm", "nw/renewable_bctm",
                                 "nwsd/renewable_rtsd"};
};

struct ReportRow {
  std::string scenario;
  std::string estimator_pair;
  std::string statistic;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

/// Per-replication RASE values for one pair at one chunk size; NaN marks a failed replication.
struct PairSamples {
  std::string scenario;
  std::string pair;
  std::vector<double> values;
};

struct ScenarioResult {
  std::vector<ReportRow> rows;
  std::vector<PairSamples> samples;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

std::string report_csv(const std::vector<ReportRow>& rows);

}  // namespace streamcqr
