#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "streamcqr/errors.hpp"
#include "streamcqr/wcqr.hpp"

using namespace streamcqr;
using doctest::Approx;

namespace {

InterpolatedCDF identity_cdf() {
  std::vector<double> nodes;
  for (int j = 0; j <= 20; ++j) nodes.push_back(j / 20.0);
  return InterpolatedCDF(nodes, nodes, 3);
}

struct Fit {
  RenewableState state;
  RegressionModel model;
};

// Pilot grids from the first 2000 rows, then one chunk with h = C^(1/5) N^(-1/5).
Fit fit_stream(const StreamSpec& spec, std::size_t N, std::uint64_t seed, std::size_t grid_size = 30,
               double C = 0.05) {
  CounterRng rng(seed);
  const Chunk data = generate(spec, N, rng);
  const RegressionModel model = make_model(spec.model);
  const PilotGrids g = testing::grids_for(head(data, 2000), model.domain, grid_size);
  StateConfig sc;
  sc.domain = model.domain;
  RenewableState st = init_state(g.grid, g.nodes, sc);
  update_chunk(st, data, std::pow(C, 0.2) * std::pow(static_cast<double>(N), -0.2));
  return {std::move(st), model};
}

double curve_ase(const CurveEstimate& c, const std::function<double(double)>& truth) {
  std::vector<double> t;
  for (double x : c.grid) t.push_back(truth(x));
  return ase(c.values, t);
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

// State whose responses all equal c, on node sets spaced delta apart around c.
RenewableState constant_state(double c, double delta, std::size_t grid_size = 5) {
  std::vector<double> grid;
  for (std::size_t i = 0; i < grid_size; ++i) grid.push_back(0.1 + 0.8 * i / (grid_size - 1.0));
  std::vector<double> nodes;
  for (int j = -4; j <= 4; ++j) nodes.push_back(c + delta * (j + 0.37));
  StateConfig sc;
  sc.domain = {0.0, 1.0};
  RenewableState st = init_state(grid, std::vector<std::vector<double>>(grid_size, nodes), sc);
  CounterRng rng(1);
  Chunk data;
  for (int j = 0; j < 2000; ++j) data.push_back(rng.uniform(), c);
  update_chunk(st, data, 0.2);
  return st;
}

}  // namespace

TEST_SUITE("wcqr") {
  TEST_CASE("trimmed components") {
    const WeightFunction L = trimmed_component(0.1, TrimSide::Lower);
    CHECK(L(0.1) == Approx(2.5));
    CHECK(L(0.3) == Approx(2.5));
    CHECK(L(0.5) == Approx(2.5));
    CHECK(L(0.05) == 0.0);
    CHECK(L(0.55) == 0.0);
    for (double a : {0.01, 0.1, 0.25, 0.4, 0.49}) {
      CHECK(trimmed_component(a, TrimSide::Lower).integral() == Approx(1.0).epsilon(1e-14));
      CHECK(trimmed_component(a, TrimSide::Upper).integral() == Approx(1.0).epsilon(1e-14));
    }
    const WeightFunction U = trimmed_component(0.49, TrimSide::Upper);
    CHECK(U(0.505) == Approx(100.0));
    CHECK(U(0.51) == Approx(100.0));
    CHECK(U(0.5) == 0.0);
    CHECK(U(0.52) == 0.0);
    CHECK_THROWS_AS(trimmed_component(0.5, TrimSide::Lower), InvalidArgument);
    CHECK_THROWS_AS(trimmed_component(0.0, TrimSide::Upper), InvalidArgument);
  }

  TEST_CASE("mean weights") {
    const WeightFunction L = trimmed_component(0.1, TrimSide::Lower);
    const WeightFunction U = trimmed_component(0.1, TrimSide::Upper);
    const WeightFunction J = mean_weight(0.1, 0.5);
    for (double t = 0.0; t <= 1.0; t += 0.01) CHECK(J(t) == Approx(0.5 * L(t) + 0.5 * U(t)));
    CHECK(J(0.3) == Approx(1.25));
    for (double w : {-1.0, 0.0, 0.3, 0.5, 1.0, 2.5}) CHECK(mean_weight(0.1, w).integral() == Approx(1.0).epsilon(1e-14));
    const WeightFunction J1 = mean_weight(0.1, 1.0);
    for (double t = 0.0; t <= 1.0; t += 0.01) CHECK(J1(t) == Approx(L(t)));
  }

  TEST_CASE("sd weights") {
    const WeightFunction J = sd_weight(0.1, 1.0);
    CHECK(J(0.3) == Approx(-2.5));
    CHECK(J(0.7) == Approx(2.5));
    CHECK(J(0.95) == 0.0);
    for (double th : {0.0, 0.5, 1.0, 3.0}) CHECK(std::abs(sd_weight(0.1, th).integral()) < 1e-15);
    const WeightFunction Z = sd_weight(0.1, 0.0);
    for (double t = 0.0; t <= 1.0; t += 0.05) CHECK(Z(t) == 0.0);
    CHECK_THROWS_AS(sd_weight(0.1, -1.0), InvalidArgument);
  }

  TEST_CASE("WCQR integrals against the identity CDF") {
    const InterpolatedCDF F = identity_cdf();
    CHECK(wcqr_integral(F, PiecewisePolynomial::constant(0.0, 1.0, 1.0)) == Approx(0.5).epsilon(1e-12));
    CHECK(wcqr_integral(F, mean_weight(0.1, 0.5)) == Approx(0.5).epsilon(1e-12));
    CHECK(wcqr_integral(F, sd_weight(0.1, 1.0)) == Approx(0.4).epsilon(1e-12));
    CHECK(wcqr_integral(F, trimmed_component(0.1, TrimSide::Lower)) == Approx(0.3).epsilon(1e-12));
  }

  TEST_CASE("WCQR integral is linear in J") {
    const ErrorLaw g = normal_law();
    std::vector<double> nodes, values;
    for (int j = 0; j <= 40; ++j) {
      nodes.push_back(-3.0 + 0.15 * j + 0.01 * std::sin(j));
      values.push_back(g.cdf(nodes.back()));
    }
    const InterpolatedCDF F(nodes, values, 3);
    const WeightFunction L = trimmed_component(0.1, TrimSide::Lower);
    const WeightFunction U = trimmed_component(0.1, TrimSide::Upper);
    for (auto [a, b] : {std::pair{0.3, 0.7}, std::pair{-1.0, 2.0}, std::pair{2.5, 0.0}}) {
      const double lhs = wcqr_integral(F, PiecewisePolynomial::combine(a, L, b, U));
      const double rhs = a * wcqr_integral(F, L) + b * wcqr_integral(F, U);
      CHECK(lhs == Approx(rhs).epsilon(1e-12));
    }
    const WeightFunction* Js[] = {&L, &U};
    const auto both = wcqr_integrals(F, Js);
    CHECK(both[0] == wcqr_integral(F, L));
    CHECK(both[1] == wcqr_integral(F, U));
    // Gaussian lower component: 2.5 int_{0.1}^{0.5} Phi^-1 = 2.5 (phi(Phi^-1(0.9)) - phi(0))
    CHECK(both[0] == Approx(2.5 * (g.pdf(1.2815515655446004) - g.pdf(0.0))).epsilon(1e-3));
  }

  TEST_CASE("constant responses give a constant curve") {
    const double c = 1.7, delta = 0.5;
    const RenewableState st = constant_state(c, delta);
    const CurveEstimate curve = curve_estimate(st, mean_weight(0.1, 0.5));
    for (double v : curve.values) CHECK(std::abs(v - c) <= 2 * delta);
    const Estimator est(st);
    for (double v : est.mean(MeanMode::Ntm).values) CHECK(std::abs(v - c) <= 2 * delta);
    for (double v : est.mean(MeanMode::Bctm).values) CHECK(std::abs(v - c) <= 2 * delta);
  }

  TEST_CASE("curve interpolant reproduces the grid values") {
    const Fit f = fit_stream(StreamSpec{2, ErrorKind::Normal}, 5000, 4);
    const CurveEstimate c = Estimator(f.state).mean(MeanMode::Ntm);
    REQUIRE(c.complete());
    for (std::size_t i = 0; i < c.grid.size(); ++i) CHECK(c(c.grid[i]) == c.values[i]);
  }

  TEST_CASE("ASE of the trimmed mean decreases with N") {
    const StreamSpec spec{2, ErrorKind::Normal};
    const RegressionModel model = make_model(2);
    int better = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Fit small = fit_stream(spec, 2000, seed);
      const Fit big = fit_stream(spec, 20000, seed);
      const auto truth = [&](double x) { return model.m(x); };
      better += curve_ase(curve_estimate(big.state, mean_weight(0.1, 0.5)), truth) <
                curve_ase(curve_estimate(small.state, mean_weight(0.1, 0.5)), truth);
    }
    CHECK(better == 3);
  }

  TEST_CASE("antisymmetric weight gives a flat curve on homoscedastic data") {
    CounterRng rng(31);
    const Chunk data = testing::draw(rng, 20000, [](double x) { return 1.0 + x; }, [](double) { return 0.5; });
    const RenewableState st = testing::fitted_state(head(data, 2000), data, {0.0, 1.0}, 30, 0.12);
    const CurveEstimate c = curve_estimate(st, sd_weight(0.1, 1.0));
    CHECK(sd_of(c.values) < 0.05 * mean_of(c.values));
  }

  TEST_CASE("interpolated density") {
    SUBCASE("uniform covariates integrate to one") {
      CounterRng rng(8);
      Chunk data;
      for (int j = 0; j < 10000; ++j) data.push_back(rng.uniform(), testing::normal(rng));
      StateConfig sc;
      sc.domain = {0.0, 1.0};
      RenewableState st = init_state(even_grid(sc.domain, 100), std::vector<std::vector<double>>(100, {-2, -1, 0, 1, 2}), sc);
      update_chunk(st, data, 0.02);
      const Estimator est(st);
      CHECK(est.weighted_integral([](double) { return 1.0; }) == Approx(1.0).epsilon(0.03));
    }
    SUBCASE("Gaussian covariates match the normal density at zero") {
      CounterRng rng(12);
      Chunk data;
      for (int j = 0; j < 10000; ++j) data.push_back(testing::normal(rng), 0.0);
      StateConfig sc;
      sc.domain = {-1.5, 1.5};
      RenewableState st = init_state(even_grid(sc.domain, 31), std::vector<std::vector<double>>(31, {-2, -1, 0, 1, 2}), sc);
      update_chunk(st, data, oracle_bandwidth(1.0, 10000));
      const CurveEstimate d = interpolated_density(st);
      CHECK(d(0.0) == Approx(0.3989422804).epsilon(0.05));
    }
    SUBCASE("a single grid point gives a constant") {
      StateConfig sc;
      sc.domain = {0.0, 1.0};
      RenewableState st = init_state({0.5}, {{-2, -1, 0, 1, 2}}, sc);
      update_chunk(st, Chunk{{0.4, 0.6}, {0.0, 1.0}}, 0.5);
      const CurveEstimate d = interpolated_density(st);
      CHECK(d(0.1) == d(0.9));
      CHECK(d(0.3) == st.fX[0]);
    }
  }

  TEST_CASE("w estimation") {
    SUBCASE("symmetric errors give w close to one half") {
      const Fit f = fit_stream(StreamSpec{1, ErrorKind::Normal}, 20000, 99);
      CHECK(std::abs(Estimator(f.state).estimate_w().w_hat - 0.5) < 0.05);
    }
    SUBCASE("coincident components are degenerate") {
      const RenewableState st = constant_state(0.0, 1e-10);
      CHECK_THROWS_AS(Estimator(st).estimate_w(), DegenerateSeparation);
      CHECK_THROWS_AS(estimate_w(st), DegenerateSeparation);
    }
    SUBCASE("centered Pareto errors: w departs from one half and BCTM satisfies the moment condition") {
      const StreamSpec spec{1, ErrorKind::Pareto3};
      const Fit f = fit_stream(spec, 20000, 5, 40, 0.005);
      const Estimator est(f.state);
      const double w = est.estimate_w().w_hat;
      CHECK(std::abs(w - 0.5) > 0.2);
      const CurveEstimate bctm = est.mean(MeanMode::Bctm);
      CounterRng rng(CounterRng(5).child(1));
      const Chunk fresh = generate(spec, 20000, rng);
      std::vector<double> d;
      for (std::size_t j = 0; j < fresh.size(); ++j) {
        const double x = fresh.x[j];
        d.push_back(f.model.domain.contains(x) ? bctm(x) - fresh.y[j] : 0.0);
      }
      CHECK(std::abs(mean_of(d)) < 2.0 * sd_of(d) / std::sqrt(static_cast<double>(d.size())));
    }
  }

  TEST_CASE("theta estimation") {
    SUBCASE("Gaussian errors give theta near 1 / c0") {
      const Fit f = fit_stream(StreamSpec{1, ErrorKind::Normal}, 20000, 17);
      const double theta = Estimator(f.state, {true, false}).estimate_theta().theta_hat;
      CHECK(theta == Approx(0.8951).epsilon(0.05));
    }
    SUBCASE("second moment below the squared mean") {
      Fit f = fit_stream(StreamSpec{1, ErrorKind::Normal}, 5000, 17);
      f.state.E_WY2 = 0.0;
      CHECK_THROWS_AS(Estimator(f.state, {true, false}).estimate_theta(), NegativeVariance);
    }
    SUBCASE("vanishing scale component") {
      RenewableState st = constant_state(2.0, 1e-10);
      st.E_WY2 += 1.0;
      const Estimator est(st, {true, false});
      CHECK_THROWS_AS(est.estimate_theta(), ZeroDenominator);
    }
    SUBCASE("doubling sigma doubles the scale curve and keeps theta") {
      StreamSpec spec{1, ErrorKind::Normal};
      const Fit a = fit_stream(spec, 20000, 23);
      spec.sigma_scale = 2.0;
      const Fit b = fit_stream(spec, 20000, 23);
      const Estimator ea(a.state, {true, false}), eb(b.state, {true, false});
      const double ta = ea.estimate_theta().theta_hat, tb = eb.estimate_theta().theta_hat;
      CHECK(tb == Approx(ta).epsilon(0.05));
      const auto ca = ea.curve(sd_weight(0.1, ta)).values, cb = eb.curve(sd_weight(0.1, tb)).values;
      std::vector<double> ratio;
      for (std::size_t i = 0; i < ca.size(); ++i) ratio.push_back(cb[i] / ca[i]);
      CHECK(mean_of(ratio) == Approx(2.0).epsilon(0.05));
    }
  }

  TEST_CASE("mean facades") {
    SUBCASE("symmetric model: NTM and BCTM agree within Monte Carlo error") {
      std::vector<std::vector<double>> ntm, bctm;
      for (std::uint64_t r = 0; r < 6; ++r) {
        const Fit f = fit_stream(StreamSpec{2, ErrorKind::Normal}, 5000, 1000 + r, 20);
        const Estimator est(f.state);
        ntm.push_back(est.mean(MeanMode::Ntm).values);
        bctm.push_back(est.mean(MeanMode::Bctm).values);
      }
      std::size_t inside = 0, total = 0;
      for (std::size_t i = 0; i < ntm[0].size(); ++i) {
        std::vector<double> col;
        for (const auto& v : ntm) col.push_back(v[i]);
        const double sd = sd_of(col);
        for (std::size_t r = 0; r < ntm.size(); ++r, ++total) inside += std::abs(ntm[r][i] - bctm[r][i]) < 2.0 * sd;
      }
      CHECK(static_cast<double>(inside) / total >= 0.9);
    }
    SUBCASE("asymmetric errors: BCTM beats NTM") {
      const Fit f = fit_stream(StreamSpec{1, ErrorKind::Pareto3}, 20000, 41, 40, 0.005);
      const Estimator est(f.state);
      const auto truth = [&](double x) { return f.model.m(x); };
      CHECK(curve_ase(est.mean(MeanMode::Bctm), truth) < 0.5 * curve_ase(est.mean(MeanMode::Ntm), truth));
    }
    SUBCASE("lenient mode records skipped points") {
      StateConfig sc;
      sc.domain = {0.0, 1.0};
      RenewableState st = init_state({0.1, 0.5, 0.9}, std::vector<std::vector<double>>(3, {-2, -1, 0, 1, 2}), sc);
      CounterRng rng(3);
      Chunk data;
      for (int j = 0; j < 500; ++j) data.push_back(0.4 + 0.2 * rng.uniform(), testing::normal(rng));
      update_chunk(st, data, 0.15);
      CHECK_THROWS_AS(Estimator(st).mean(MeanMode::Ntm), GridPointError);
      const CurveEstimate c = Estimator(st, {false, true}).mean(MeanMode::Ntm);
      CHECK(c.skipped == std::vector<std::size_t>{0, 2});
      CHECK(std::isnan(c.values[0]));
      CHECK(std::isfinite(c.values[1]));
    }
  }

  TEST_CASE("sd facades") {
    SUBCASE("RTSD recovers a constant sigma") {
      // covariates extend past the estimation interval so the density estimate has no boundary bias
      CounterRng rng(77);
      const Chunk data =
          testing::draw(rng, 20000, [](double x) { return 1.0 + x; }, [](double) { return 0.5; }, -0.25, 1.25);
      const RenewableState st = testing::fitted_state(head(data, 2000), data, {0.0, 1.0}, 30, 0.12);
      const CurveEstimate sd = Estimator(st, {true, false}).sd(SdMode::Rtsd);
      std::size_t close = 0;
      for (double v : sd.values) close += std::abs(v - 0.5) < 0.05;
      CHECK(close >= 0.9 * sd.values.size());
    }
    SUBCASE("NTSD over RTSD equals one over theta") {
      const Fit f = fit_stream(StreamSpec{2, ErrorKind::Normal}, 5000, 9, 20);
      const Estimator est(f.state, {true, false});
      const double theta = est.estimate_theta().theta_hat;
      const auto n = est.sd(SdMode::Ntsd).values, r = est.sd(SdMode::Rtsd).values;
      for (std::size_t i = 0; i < n.size(); ++i) CHECK(n[i] / r[i] == Approx(1.0 / theta).epsilon(1e-12));
    }
    SUBCASE("heteroscedastic Model 2: RTSD tracks the sigma shape") {
      const Fit f = fit_stream(StreamSpec{2, ErrorKind::Normal}, 20000, 13, 30, 0.01);
      const CurveEstimate sd = Estimator(f.state, {true, false}).sd(SdMode::Rtsd);
      std::vector<double> truth;
      for (double x : sd.grid) truth.push_back(f.model.sigma(x));
      const double ms = mean_of(sd.values), mt = mean_of(truth);
      double sxy = 0, sxx = 0, syy = 0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        sxy += (sd.values[i] - ms) * (truth[i] - mt);
        sxx += (sd.values[i] - ms) * (sd.values[i] - ms);
        syy += (truth[i] - mt) * (truth[i] - mt);
      }
      CHECK(sxy / std::sqrt(sxx * syy) > 0.9);
    }
  }

  TEST_CASE("location and scale equivariance") {
    CounterRng rng(55);
    const Chunk data = testing::draw(rng, 8000, [](double x) { return std::sin(3 * x); }, [](double) { return 0.4; });
    auto transformed = [&](double a, double s) {
      Chunk c;
      for (std::size_t j = 0; j < data.size(); ++j) c.push_back(data.x[j], a + s * data.y[j]);
      return c;
    };
    const RenewableState base = testing::fitted_state(head(data, 2000), data, {0.0, 1.0}, 15, 0.15);
    const Chunk shifted = transformed(3.0, 1.0);
    const RenewableState sh = testing::fitted_state(head(shifted, 2000), shifted, {0.0, 1.0}, 15, 0.15);
    const Chunk scaled = transformed(0.0, 2.5);
    const RenewableState sc = testing::fitted_state(head(scaled, 2000), scaled, {0.0, 1.0}, 15, 0.15);
    const WeightFunction Jm = mean_weight(0.1, 0.5), Js = sd_weight(0.1, 1.0);
    const auto m0 = curve_estimate(base, Jm).values, s0 = curve_estimate(base, Js).values;
    const auto m1 = curve_estimate(sh, Jm).values, s1 = curve_estimate(sh, Js).values;
    const auto m2 = curve_estimate(sc, Jm).values, s2 = curve_estimate(sc, Js).values;
    for (std::size_t i = 0; i < m0.size(); ++i) {
      CHECK(m1[i] == Approx(m0[i] + 3.0).epsilon(1e-9));
      CHECK(s1[i] == Approx(s0[i]).epsilon(1e-8));
      CHECK(m2[i] == Approx(2.5 * m0[i]).epsilon(1e-9));
      CHECK(s2[i] == Approx(2.5 * s0[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("weighted quantile integral identity holds in Monte Carlo") {
    // r(x; J) = m(x) + sigma(x) int J F^-1 when int J = 1; a light-tailed law keeps the sample mean
    // close to Gaussian so two standard errors is a fair band
    const ErrorLaw law = make_error_law(ErrorKind::Normal);
    const WeightFunction J = trimmed_component(0.1, TrimSide::Lower);
    const double cJ = weighted_integral(J, [&](double t) { return law.quantile(t); });
    const StreamSpec spec{2, ErrorKind::Normal};
    const RegressionModel model = make_model(2);
    CounterRng rng(606);
    const Chunk data = generate(spec, 10000, rng);
    std::vector<double> d;
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double x = data.x[j];
      d.push_back(model.m(x) + model.sigma(x) * cJ - data.y[j]);
    }
    // W = 1 on [0, 1] and E[2 + cos(2 pi X)] = 2 for X ~ U(0, 1)
    const double lhs = 2.0 * cJ;
    CHECK(std::abs(mean_of(d) - lhs) < 2.0 * sd_of(d) / std::sqrt(static_cast<double>(d.size())));
  }

  TEST_CASE("trimming resists gross outliers") {
    CounterRng rng(404);
    const auto m = [](double x) { return std::sin(3 * x); };
    const Chunk clean = testing::draw(rng, 20000, m, [](double) { return 0.4; });
    Chunk dirty = clean;
    for (std::size_t j = 0; j < dirty.size(); j += 20) dirty.y[j] = 1e6;  // alpha / 2 of the rows at alpha = 0.1
    const RenewableState a = testing::fitted_state(head(clean, 2000), clean, {0.0, 1.0}, 20, 0.12);
    const RenewableState b = testing::fitted_state(head(clean, 2000), dirty, {0.0, 1.0}, 20, 0.12);
    const auto ca = Estimator(a).mean(MeanMode::Ntm), cb = Estimator(b).mean(MeanMode::Ntm);
    const double mc_sd = std::sqrt(curve_ase(ca, m));
    std::vector<double> diff;
    for (std::size_t i = 0; i < ca.values.size(); ++i) diff.push_back(std::abs(cb.values[i] - ca.values[i]));
    std::nth_element(diff.begin(), diff.begin() + diff.size() / 2, diff.end());
    CHECK(diff[diff.size() / 2] < 10.0 * mc_sd);
  }
}
