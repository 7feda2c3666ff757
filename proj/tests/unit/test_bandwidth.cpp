#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "streamcqr/bandwidth.hpp"
#include "streamcqr/cv.hpp"
#include "streamcqr/errors.hpp"
#include "streamcqr/kernel.hpp"
#include "streamcqr/optimal_weights.hpp"
#include "streamcqr/weights.hpp"

using namespace streamcqr;
using doctest::Approx;

namespace {

ModelOracle linear_oracle(double slope, double sigma) {
  ModelOracle o;
  o.m = [slope](double x) { return slope * x; };
  o.dm = [slope](double) { return slope; };
  o.d2m = [](double) { return 0.0; };
  o.sigma = [sigma](double) { return sigma; };
  o.dsigma = [](double) { return 0.0; };
  o.d2sigma = [](double) { return 0.0; };
  o.fx = [](double) { return 1.0; };
  o.dfx = [](double) { return 0.0; };
  return o;
}

// Midpoint rule on an M x M grid over [a, b]^2 of (min(s,t) - s t) g(s) g(t).
double brute_force_SJ(const WeightFunction& J, const ErrorLaw& law, double a, double b, int M) {
  std::vector<double> s(M), g(M);
  const double step = (b - a) / M;
  for (int k = 0; k < M; ++k) {
    s[k] = a + (k + 0.5) * step;
    g[k] = J(s[k]) / law.pdf(law.quantile(s[k]));
  }
  long double acc = 0.0L;
  for (int i = 0; i < M; ++i) {
    long double row = 0.0L;
    for (int j = 0; j < M; ++j) row += (std::min(s[i], s[j]) - s[i] * s[j]) * g[j];
    acc += row * g[i];
  }
  return static_cast<double>(acc) * step * step;
}

}  // namespace

TEST_SUITE("bandwidth") {
  TEST_CASE("error function examples") {
    const std::vector<double> H{0.1}, n{100};
    CHECK(error_function(H, n, 1.0, 1.0) == Approx(0.1001).epsilon(1e-14));
    // one chunk: B^2 h^4 + Sigma / (N h)
    const double B = 0.7, S = 2.3, h = 0.21, N = 513;
    CHECK(error_function(std::vector<double>{h}, std::vector<double>{N}, B, S) ==
          Approx(B * B * std::pow(h, 4) + S / (N * h)).epsilon(1e-14));
    CHECK_THROWS_AS(error_function(std::vector<double>{0.0}, std::vector<double>{1.0}, 1, 1), InvalidArgument);
  }

  TEST_CASE("error function decomposes into past and increment terms") {
    CounterRng rng(314);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int T = 2 + static_cast<int>(rng.uniform() * 10);
      std::vector<double> H, n;
      for (int s = 0; s < T; ++s) {
        H.push_back(testing::uniform(rng, 0.01, 1.0));
        n.push_back(std::floor(testing::uniform(rng, 1, 5000)));
      }
      const double B = testing::uniform(rng, -3, 3), Sigma = testing::uniform(rng, 0.01, 5);
      const std::span<const double> Hp(H.data(), T - 1), np(n.data(), T - 1);
      double Nprev = 0.0;
      for (int s = 0; s < T - 1; ++s) Nprev += n[s];
      const double Nt = Nprev + n[T - 1];
      const double lhs = error_function(H, n, B, Sigma);
      const double rhs = (Nprev / Nt) * (Nprev / Nt) * error_function(Hp, np, B, Sigma) +
                         (n[T - 1] / Nt) * (n[T - 1] / Nt) * error_increment(H[T - 1], n[T - 1], Hp, np, B, Sigma);
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("oracle bandwidth") {
    CHECK(oracle_bandwidth(1.0, 1e5) == Approx(0.1).epsilon(1e-15));
    CHECK(oracle_bandwidth(32.0, 1e5) == Approx(0.2).epsilon(1e-15));
    CHECK(oracle_bandwidth(7.0, 1.0) == Approx(std::pow(7.0, 0.2)).epsilon(1e-15));
    CHECK_THROWS_AS(oracle_bandwidth(0.0, 10.0), InvalidArgument);
  }

  TEST_CASE("renewable recursion hand case") {
    BandwidthState bw;
    bw.C_h = 1.0;
    const double h1 = next_bandwidth(bw, 100000);
    const double h2 = next_bandwidth(bw, 100000);
    CHECK(h1 == Approx(0.1).epsilon(1e-15));
    CHECK(bw.S_h == Approx(1000.0).epsilon(1e-14));
    CHECK(h2 == Approx(0.1).epsilon(1e-15));
    CHECK(bw.t == 2);
    BandwidthState one;
    one.C_h = 1.0;
    CHECK(next_bandwidth(one, 1) == 1.0);
    CHECK_THROWS_AS(next_bandwidth(one, 0), InvalidArgument);
  }

  TEST_CASE("oracle mode uses one bandwidth for every chunk") {
    BandwidthState bw;
    bw.mode = BandwidthMode::Oracle;
    bw.C_h = 32.0;
    bw.N_total = 100000;
    for (std::uint64_t n : {10u, 1000u, 7u}) CHECK(next_bandwidth(bw, n) == Approx(0.2).epsilon(1e-15));
    BandwidthState bad;
    bad.mode = BandwidthMode::Oracle;
    CHECK_THROWS_AS(next_bandwidth(bad, 10), InvalidArgument);
  }

  TEST_CASE("recursion tracks the oracle rate") {
    for (double C : {0.01, 1.0, 50.0}) {
      for (std::uint64_t n : {10u, 1000u}) {
        BandwidthState bw;
        bw.C_h = C;
        double N = 0.0;
        for (int t = 1; t <= 1000; ++t) {
          const double h = next_bandwidth(bw, n);
          N += static_cast<double>(n);
          const double ratio = h * std::pow(N, 0.2) / std::pow(C, 0.2);
          CHECK(ratio >= 0.7);
          CHECK(ratio <= 1.5);
        }
      }
    }
  }

  TEST_CASE("recursion is scale consistent") {
    for (double s : {0.5, 2.0, 3.0}) {
      BandwidthState a, b;
      a.C_h = 0.3;
      b.C_h = 0.3 * std::pow(s, 5);
      for (int t = 1; t <= 100; ++t) {
        const double r = next_bandwidth(b, 500) / next_bandwidth(a, 500);
        CHECK(r >= std::min(std::pow(s, 0.9), std::pow(s, 1.1)) - 1e-12);
        CHECK(r <= std::max(std::pow(s, 0.9), std::pow(s, 1.1)) + 1e-12);
      }
    }
  }

  TEST_CASE("recursion agrees with the sub-optimal fixed point") {
    BandwidthState bw;
    bw.C_h = 0.8;
    for (int t = 1; t <= 30; ++t) {
      const double S_prev = bw.S_h;
      const double h = next_bandwidth(bw, 2000);
      if (t >= 5) {
        const double fp = fixed_point_bandwidth(bw.C_h, S_prev, 2000);
        CHECK(std::abs(h / fp - 1.0) < 0.1);
      }
    }
    const double h = fixed_point_bandwidth(2.0, 3.0, 5.0);
    CHECK(h * h * h * (3.0 + 5.0 * h * h) == Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("variable bandwidths run the recursion per grid point") {
    BandwidthState bw;
    bw.C_h_x = {1.0, 32.0};
    const auto h1 = next_variable_bandwidths(bw, 100000);
    CHECK(h1[0] == Approx(0.1).epsilon(1e-15));
    CHECK(h1[1] == Approx(0.2).epsilon(1e-15));
    const auto h2 = next_variable_bandwidths(bw, 100000);
    CHECK(h2[0] == Approx(0.1).epsilon(1e-14));
    BandwidthState scalar;
    CHECK_THROWS_AS(next_variable_bandwidths(scalar, 10), InvalidArgument);
  }

  TEST_CASE("cross-validation edge cases") {
    CounterRng rng(2);
    const Chunk data = testing::draw(rng, 600, [](double x) { return std::sin(4 * x); }, [](double) { return 0.3; });
    const PilotGrids g = testing::grids_for(data, {0.0, 1.0}, 10);
    StateConfig sc;
    sc.domain = {0.0, 1.0};
    const std::vector<double> single{0.37};
    CHECK(estimate_Ch(data, g, sc, 10, single).C_h == 0.37);
    CHECK_THROWS_AS(estimate_Ch(head(data, 99), g, sc, 10, single), DataError);
    CHECK_THROWS_AS(estimate_Ch(data, g, sc, 1, single), InvalidArgument);

    Chunk flat;
    for (std::size_t j = 0; j < 600; ++j) flat.push_back(data.x[j], 2.0);
    PilotConfig pc;
    pc.domain = {0.0, 1.0};
    pc.grid_size = 10;
    const std::vector<double> cands{0.01, 0.1, 1.0, 10.0};
    const CvResult r = estimate_Ch(flat, pc, sc, 10, cands);
    CHECK(r.C_h == 0.01);
    CHECK(r.scores.size() == cands.size());
  }

  TEST_CASE("cross-validation curve is U-shaped on Model 1") {
    std::vector<double> cands;
    for (int k = 0; k <= 12; ++k) cands.push_back(std::pow(10.0, -2.0 + k / 3.0));
    int u_shaped = 0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
      CounterRng rng(CounterRng(880).child(s));
      const Chunk val = generate(StreamSpec{1, ErrorKind::Normal}, 2000, rng);
      PilotConfig pc;
      pc.domain = make_model(1).domain;
      StateConfig sc;
      sc.domain = pc.domain;
      const CvResult r = estimate_Ch(val, pc, sc, 10, cands, MeanMode::Ntm);
      const auto best = std::min_element(r.scores.begin(), r.scores.end()) - r.scores.begin();
      u_shaped += best > 0 && best + 1 < static_cast<long>(r.scores.size());
    }
    CHECK(u_shaped >= 8);
  }

  TEST_CASE("asymptotic constants") {
    const KernelMoments km = kernel_moments(Kernel());
    const ErrorLaw g = normal_law();
    SUBCASE("linear mean, constant sigma, uniform design: no bias") {
      const AsymptoticConstants c = asymptotic_constants(linear_oracle(2.0, 0.5), g, mean_weight(0.1, 0.5), 0.3, km);
      CHECK(std::abs(c.B_mx) < 1e-12);
      CHECK(c.Sigma_mx > 0.0);
    }
    SUBCASE("variance constant is positive for several laws and weights") {
      for (const ErrorLaw& law : {normal_law(), logistic_law(), make_error_law(ErrorKind::Pareto3)}) {
        for (double w : {0.2, 0.5, 0.9}) {
          CHECK(asymptotic_constants(linear_oracle(1.0, 0.7), law, mean_weight(0.1, w), 0.0, km).Sigma_mx > 0.0);
        }
      }
    }
    SUBCASE("S_J double integral matches brute force") {
      const WeightFunction J = mean_weight(0.1, 0.5);
      const double sigma = 0.5;
      const AsymptoticConstants c = asymptotic_constants(linear_oracle(1.0, sigma), g, J, 0.0, km);
      const double SJ = c.Sigma_mx / (km.k02 * sigma * sigma);
      const double brute = brute_force_SJ(J, g, 0.1, 0.9, 4000);
      CHECK(std::abs(SJ - brute) < 1e-6);
    }
    SUBCASE("curvature creates bias and a finite constant") {
      ModelOracle o = linear_oracle(1.0, 0.5);
      o.d2m = [](double) { return -4.0; };
      const AsymptoticConstants c = asymptotic_constants(o, g, mean_weight(0.1, 0.5), 0.0, km);
      // symmetric J integrating to one: B = k21 m'' / 2
      CHECK(c.B_mx == Approx(0.1 * -4.0).epsilon(1e-9));
      CHECK(c.C_h_x == Approx(c.Sigma_mx / (4 * c.B_mx * c.B_mx)));
    }
  }
}
