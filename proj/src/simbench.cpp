#include "streamcqr/simbench.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "streamcqr/cv.hpp"
#include "streamcqr/errors.hpp"

namespace streamcqr {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

ErrorKind parse_error_kind(const std::string& name) {
  if (name == "normal") return ErrorKind::Normal;
  if (name == "laplace") return ErrorKind::Laplace;
  if (name == "t3") return ErrorKind::T3;
  if (name == "pareto3") return ErrorKind::Pareto3;
  if (name == "f10_6") return ErrorKind::F10_6;
  if (name == "f4_6") return ErrorKind::F4_6;
  if (name == "lognormal") return ErrorKind::Lognormal;
  throw InvalidArgument("unknown error law '" + name + "'");
}

std::string error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Normal:
      return "normal";
    case ErrorKind::Laplace:
      return "laplace";
    case ErrorKind::T3:
      return "t3";
    case ErrorKind::Pareto3:
      return "pareto3";
    case ErrorKind::F10_6:
      return "f10_6";
    case ErrorKind::F4_6:
      return "f4_6";
    case ErrorKind::Lognormal:
      return "lognormal";
  }
  return "unknown";
}

ErrorLaw make_error_law(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Normal:
      return normal_law();
    case ErrorKind::Laplace:
      return standardized(laplace_law());
    case ErrorKind::T3:
      return standardized(student_t_law(3.0));
    case ErrorKind::Pareto3:
      return centered(pareto_law(3.0));
    case ErrorKind::F10_6:
      return centered(fisher_f_law(10.0, 6.0));
    case ErrorKind::F4_6:
      return centered(fisher_f_law(4.0, 6.0));
    case ErrorKind::Lognormal:
      return standardized(lognormal_law(0.0, 1.0));
  }
  throw InvalidArgument("unknown error law");
}

double RegressionModel::m(double x) const {
  if (id == 1) return std::sin(2.0 * x) + 2.0 * std::exp(-16.0 * x * x);
  return x * std::sin(kTwoPi * x);
}

double RegressionModel::sigma(double x) const {
  if (id == 1) return 0.5;
  return 2.0 + std::cos(kTwoPi * x);
}

double RegressionModel::covariate_quantile(double u) const {
  if (id == 1) return boost::math::quantile(boost::math::normal_distribution<double>(), u);
  return u;
}

ModelOracle RegressionModel::oracle() const {
  ModelOracle o;
  if (id == 1) {
    o.m = [](double x) { return std::sin(2.0 * x) + 2.0 * std::exp(-16.0 * x * x); };
    o.dm = [](double x) { return 2.0 * std::cos(2.0 * x) - 64.0 * x * std::exp(-16.0 * x * x); };
    o.d2m = [](double x) { return -4.0 * std::sin(2.0 * x) + (2048.0 * x * x - 64.0) * std::exp(-16.0 * x * x); };
    o.sigma = [](double) { return 0.5; };
    o.dsigma = [](double) { return 0.0; };
    o.d2sigma = [](double) { return 0.0; };
    o.fx = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); };
    o.dfx = [](double x) { return -x * std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); };
  } else {
    o.m = [](double x) { return x * std::sin(kTwoPi * x); };
    o.dm = [](double x) { return std::sin(kTwoPi * x) + kTwoPi * x * std::cos(kTwoPi * x); };
    o.d2m = [](double x) {
      return 2.0 * kTwoPi * std::cos(kTwoPi * x) - kTwoPi * kTwoPi * x * std::sin(kTwoPi * x);
    };
    o.sigma = [](double x) { return 2.0 + std::cos(kTwoPi * x); };
    o.dsigma = [](double x) { return -kTwoPi * std::sin(kTwoPi * x); };
    o.d2sigma = [](double x) { return -kTwoPi * kTwoPi * std::cos(kTwoPi * x); };
    o.fx = [](double x) { return x >= 0.0 && x <= 1.0 ? 1.0 : 0.0; };
    o.dfx = [](double) { return 0.0; };
  }
  return o;
}

RegressionModel make_model(int id) {
  if (id == 1) return RegressionModel{1, Interval{-1.5, 1.5}};
  if (id == 2) return RegressionModel{2, Interval{0.0, 1.0}};
  throw InvalidArgument("model id must be 1 or 2");
}

double mixture_sd(const ErrorLaw& law, double lambda) {
  return std::sqrt(law.variance * (0.95 + 0.05 * lambda * lambda));
}

Chunk generate(const StreamSpec& spec, std::size_t N, CounterRng& rng) {
  if (!(spec.lambda >= 1.0)) throw InvalidArgument("contamination multiplier must be >= 1");
  const RegressionModel model = make_model(spec.model);
  const ErrorLaw law = make_error_law(spec.error);
  Chunk out;
  out.x.reserve(N);
  out.y.reserve(N);
  for (std::size_t j = 0; j < N; ++j) {
    const double x = model.covariate_quantile(rng.uniform());
    double e = law.quantile(rng.uniform());
    if (rng.uniform() < 0.05) e *= spec.lambda;
    out.push_back(x, model.m(x) + spec.sigma_scale * model.sigma(x) * e);
  }
  return out;
}

std::vector<Chunk> split_chunks(const Chunk& data, std::size_t chunk_size) {
  if (chunk_size == 0) throw InvalidArgument("chunk size must be positive");
  std::vector<Chunk> out;
  for (std::size_t s = 0; s < data.size(); s += chunk_size) {
    const std::size_t e = std::min(data.size(), s + chunk_size);
    Chunk c;
    c.x.assign(data.x.begin() + static_cast<std::ptrdiff_t>(s), data.x.begin() + static_cast<std::ptrdiff_t>(e));
    c.y.assign(data.y.begin() + static_cast<std::ptrdiff_t>(s), data.y.begin() + static_cast<std::ptrdiff_t>(e));
    out.push_back(std::move(c));
  }
  return out;
}

Chunk head(const Chunk& data, std::size_t n) {
  n = std::min(n, data.size());
  Chunk c;
  c.x.assign(data.x.begin(), data.x.begin() + static_cast<std::ptrdiff_t>(n));
  c.y.assign(data.y.begin(), data.y.begin() + static_cast<std::ptrdiff_t>(n));
  return c;
}

namespace {

bool nw_moments(const Chunk& data, double h, double x, const Kernel& k, double& mean, double& mass) {
  CompensatedSum w, wy;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double kw = scaled_kernel(k, data.x[j] - x, h);
    if (kw > 0.0) {
      w.add(kw);
      wy.add(kw * data.y[j]);
    }
  }
  mass = w.value();
  if (!(mass > 0.0)) return false;
  mean = wy.value() / mass;
  return true;
}

}  // namespace

double nw_mean(const Chunk& data, double h, double x, const Kernel& kernel) {
  if (!(h > 0.0)) throw InvalidArgument("nw_mean: bandwidth must be positive");
  double m = 0.0, mass = 0.0;
  if (!nw_moments(data, h, x, kernel, m, mass)) throw DataError("nw_mean: zero kernel mass at x");
  return m;
}

double nw_sd(const Chunk& data, double h, double x, const Kernel& kernel) {
  if (!(h > 0.0)) throw InvalidArgument("nw_sd: bandwidth must be positive");
  double m = 0.0, mass = 0.0;
  if (!nw_moments(data, h, x, kernel, m, mass)) throw DataError("nw_sd: zero kernel mass at x");
  CompensatedSum r;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double kw = scaled_kernel(kernel, data.x[j] - x, h);
    if (kw > 0.0) r.add(kw * (data.y[j] - m) * (data.y[j] - m));
  }
  return std::sqrt(std::max(0.0, r.value() / mass));
}

double nw_cross_validate(const Chunk& validation, const Interval& domain, std::size_t folds, const Kernel& kernel) {
  const auto cands = default_ch_candidates();
  auto predict = [&](const Chunk& train, std::span<const double> xs, double C) {
    const double h = std::pow(C, 0.2) * std::pow(static_cast<double>(train.size()), -0.2);
    std::vector<double> out(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      double m = kNaN, mass = 0.0;
      out[j] = nw_moments(train, h, xs[j], kernel, m, mass) ? m : kNaN;
    }
    return out;
  };
  return cross_validate_Ch(validation, folds, cands, domain, predict).C_h;
}

CurveEstimate simple_average_estimator(const std::vector<Chunk>& chunks, const PilotGrids& grids,
                                       const StateConfig& config, double C_h, LocalEstimator which,
                                       bool symmetric_model) {
  std::size_t max_nodes = 0;
  for (const auto& ns : grids.nodes) max_nodes = std::max(max_nodes, ns.size());
  const std::size_t q = grids.grid.size();
  std::vector<double> sum(q, 0.0);
  std::vector<std::size_t> count(q, 0);
  const RenewableState blank = init_state(grids.grid, grids.nodes, config);
  std::size_t usable = 0;
  for (const auto& chunk : chunks) {
    if (chunk.size() < max_nodes) continue;
    RenewableState st = blank;
    update_chunk(st, chunk, std::pow(C_h, 0.2) * std::pow(static_cast<double>(chunk.size()), -0.2));
    try {
      Estimator est(std::move(st), EstimatorOptions{symmetric_model, true});
      CurveEstimate c = which == LocalEstimator::Ntm    ? est.mean(MeanMode::Ntm)
                        : which == LocalEstimator::Bctm ? est.mean(MeanMode::Bctm)
                                                        : est.sd(SdMode::Rtsd);
      for (std::size_t i = 0; i < q; ++i) {
        if (std::isfinite(c.values[i])) {
          sum[i] += c.values[i];
          ++count[i];
        }
      }
      ++usable;
    } catch (const Error&) {
      // a chunk whose local estimator fails contributes nothing
    }
  }
  if (usable == 0) throw ChunkTooSmall("no chunk is large enough for a local estimator");
  std::vector<double> v(q, kNaN);
  for (std::size_t i = 0; i < q; ++i)
    if (count[i] > 0) v[i] = sum[i] / static_cast<double>(count[i]);
  const CurveKind kind = which == LocalEstimator::Rtsd ? CurveKind::Sd : CurveKind::Mean;
  return CurveEstimate::from_values(kind, grids.grid, std::move(v), config.degree);
}

double ase(const std::vector<double>& estimate, const std::vector<double>& truth) {
  if (estimate.size() != truth.size()) throw InvalidArgument("ase: size mismatch");
  CompensatedSum s;
  std::size_t n = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    if (!std::isfinite(estimate[i])) continue;
    const double e = estimate[i] - truth[i];
    s.add(e * e);
    ++n;
  }
  return n == 0 ? kNaN : s.value() / static_cast<double>(n);
}

double rase(double ase_a, double ase_b) {
  if (ase_b == 0.0) throw InvalidArgument("rase: zero denominator");
  return ase_a / ase_b;
}

namespace {

struct Replication {
  const ScenarioConfig& cfg;
  RegressionModel model;
  Chunk data;
  PilotGrids grids;
  StateConfig state_config;
  double C_h = 1.0;
  double C_nw = 1.0;
  bool symmetric = false;
  std::vector<double> truth_m, truth_sd;
  std::map<std::string, double> cache;  // estimator name -> ASE (NaN on failure)
  std::optional<Estimator> oracle;
  bool oracle_failed = false;

  double nw_ase(bool sd) {
    const double h = std::pow(C_nw, 0.2) * std::pow(static_cast<double>(data.size()), -0.2);
    std::vector<double> v(grids.grid.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = sd ? nw_sd(data, h, grids.grid[i]) : nw_mean(data, h, grids.grid[i]);
    return ase(v, sd ? truth_sd : truth_m);
  }

  static double estimator_ase(const Estimator& est, const std::string& what, const std::vector<double>& tm,
                              const std::vector<double>& ts) {
    if (what == "ntm") return ase(est.mean(MeanMode::Ntm).values, tm);
    if (what == "bctm") return ase(est.mean(MeanMode::Bctm).values, tm);
    if (what == "rtsd") return ase(est.sd(SdMode::Rtsd).values, ts);
    throw InvalidArgument("unknown estimator '" + what + "'");
  }
};

struct ChunkPlan {
  std::size_t size;
  std::vector<Chunk> chunks;
  std::optional<Estimator> renewable;
  bool renewable_failed = false;
};

double evaluate_name(Replication& rep, ChunkPlan& plan, const std::string& name) {
  const auto slash = name.find('_');
  const std::string family = name.substr(0, slash);
  const std::string what = slash == std::string::npos ? "" : name.substr(slash + 1);
  const std::string key = (family == "renewable" || family == "average") ? name + "@" + std::to_string(plan.size) : name;
  if (auto it = rep.cache.find(key); it != rep.cache.end()) return it->second;
  double value = kNaN;
  try {
    if (name == "nw") {
      value = rep.nw_ase(false);
    } else if (name == "nwsd") {
      value = rep.nw_ase(true);
    } else if (family == "oracle") {
      if (!rep.oracle && !rep.oracle_failed) {
        RenewableState st = init_state(rep.grids.grid, rep.grids.nodes, rep.state_config);
        update_chunk(st, rep.data, oracle_bandwidth(rep.C_h, static_cast<double>(rep.data.size())));
        rep.oracle.emplace(std::move(st), EstimatorOptions{rep.symmetric, false});
      }
      if (rep.oracle) value = Replication::estimator_ase(*rep.oracle, what, rep.truth_m, rep.truth_sd);
    } else if (family == "renewable") {
      if (!plan.renewable && !plan.renewable_failed) {
        BandwidthState bw;
        bw.mode = BandwidthMode::Renewable;
        bw.C_h = rep.C_h;
        RenewableState st = init_state(rep.grids.grid, rep.grids.nodes, rep.state_config, bw);
        for (const auto& c : plan.chunks) ingest(st, c);
        plan.renewable.emplace(std::move(st), EstimatorOptions{rep.symmetric, false});
      }
      if (plan.renewable) value = Replication::estimator_ase(*plan.renewable, what, rep.truth_m, rep.truth_sd);
    } else if (family == "average") {
      const LocalEstimator which = what == "ntm"    ? LocalEstimator::Ntm
                                   : what == "bctm" ? LocalEstimator::Bctm
                                                    : LocalEstimator::Rtsd;
      const auto c = simple_average_estimator(plan.chunks, rep.grids, rep.state_config, rep.C_h, which, rep.symmetric);
      value = ase(c.values, what == "rtsd" ? rep.truth_sd : rep.truth_m);
    } else {
      throw InvalidArgument("unknown estimator '" + name + "'");
    }
  } catch (const InvalidArgument&) {
    throw;
  } catch (const Error&) {
    if (family == "oracle") rep.oracle_failed = !rep.oracle;
    if (family == "renewable") plan.renewable_failed = !plan.renewable;
    value = kNaN;
  }
  rep.cache[key] = value;
  return value;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  if (cfg.chunk_sizes.empty() || cfg.replications == 0) throw InvalidArgument("scenario needs chunk sizes and replications");
  if (cfg.validation_size > cfg.N_T) throw InvalidArgument("validation set larger than the stream");
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& p : cfg.pairs) {
    const auto s = p.find('/');
    if (s == std::string::npos) throw InvalidArgument("estimator pair must read 'a/b': " + p);
    pairs.emplace_back(p.substr(0, s), p.substr(s + 1));
  }
  const RegressionModel model = make_model(cfg.stream.model);
  const ErrorLaw law = make_error_law(cfg.stream.error);
  const double sd_factor = cfg.stream.sigma_scale * mixture_sd(law, cfg.stream.lambda);
  const bool symmetric = cfg.symmetric < 0 ? law.symmetric : cfg.symmetric == 1;

  // samples[chunk index][pair index][replication]
  std::vector<std::vector<std::vector<double>>> samples(
      cfg.chunk_sizes.size(), std::vector<std::vector<double>>(pairs.size(), std::vector<double>(cfg.replications, kNaN)));
  std::vector<std::vector<char>> unavailable(cfg.chunk_sizes.size(), std::vector<char>(pairs.size(), 0));
  const CounterRng root(cfg.seed);
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    CounterRng rng = root.child(r);
    Replication rep{cfg, model, generate(cfg.stream, cfg.N_T, rng), {}, {}, 1.0, 1.0, symmetric, {}, {}, {}, {}, false};
    const Chunk val = head(rep.data, cfg.validation_size);
    PilotConfig pilot;
    pilot.domain = model.domain;
    pilot.grid_size = cfg.grid_size;
    pilot.taus = uniform_taus(cfg.tau_count);
    pilot.degree = cfg.degree;
    rep.state_config = StateConfig{model.domain, Kernel(), cfg.degree, cfg.alpha, {}};
    try {
      rep.grids = build_grids(val, pilot);
      rep.C_h = cfg.fixed_C_h > 0.0 ? cfg.fixed_C_h
                                    : estimate_Ch(val, rep.grids, rep.state_config, cfg.folds, cfg.candidates,
                                                              symmetric ? MeanMode::Ntm : MeanMode::Bctm)
                                                      .C_h;
      rep.C_nw = cfg.fixed_C_nw > 0.0 ? cfg.fixed_C_nw : nw_cross_validate(val, model.domain, cfg.folds);
    } catch (const InvalidArgument&) {
      throw;
    } catch (const Error&) {
      continue;  // whole replication failed
    }
    for (double x : rep.grids.grid) {
      rep.truth_m.push_back(model.m(x));
      rep.truth_sd.push_back(model.sigma(x) * sd_factor);
    }
    for (std::size_t c = 0; c < cfg.chunk_sizes.size(); ++c) {
      ChunkPlan plan{cfg.chunk_sizes[c], split_chunks(rep.data, cfg.chunk_sizes[c]), std::nullopt, false};
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const double a = evaluate_name(rep, plan, pairs[p].first);
        const double b = evaluate_name(rep, plan, pairs[p].second);
        if (std::isfinite(a) && std::isfinite(b) && b > 0.0) samples[c][p][r] = a / b;
        const bool avg = pairs[p].first.rfind("average", 0) == 0 || pairs[p].second.rfind("average", 0) == 0;
        if (avg && !std::isfinite(std::isfinite(a) ? b : a)) unavailable[c][p] = 1;
      }
    }
  }

  ScenarioResult res;
  for (std::size_t c = 0; c < cfg.chunk_sizes.size(); ++c) {
    const std::string scen = cfg.name + "_n" + std::to_string(cfg.chunk_sizes[c]);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& v = samples[c][p];
      CompensatedSum s;
      std::size_t n = 0;
      for (double x : v)
        if (std::isfinite(x)) {
          s.add(x);
          ++n;
        }
      const double mean = n ? s.value() / static_cast<double>(n) : kNaN;
      double ss = 0.0;
      for (double x : v)
        if (std::isfinite(x)) ss += (x - mean) * (x - mean);
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : (n == 1 ? 0.0 : kNaN);
      res.rows.push_back(ReportRow{scen, cfg.pairs[p], "rase", mean, sd, n, cfg.seed});
      if (n < cfg.replications) {
        res.rows.push_back(ReportRow{scen, cfg.pairs[p], unavailable[c][p] ? "unavailable" : "failures",
                                     static_cast<double>(cfg.replications - n), 0.0, cfg.replications, cfg.seed});
      }
      res.samples.push_back(PairSamples{scen, cfg.pairs[p], v});
    }
  }
  return res;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "scenario,estimator_pair,statistic,mean,sd,replications,seed\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.scenario << ',' << r.estimator_pair << ',' << r.statistic << ',';
    std::snprintf(buf, sizeof buf, "%.10g", r.mean);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.10g", r.sd);
    os << buf << ',' << r.replications << ',' << r.seed << '\n';
  }
  return os.str();
}

}  // namespace streamcqr
