#include "transitnet/common.hpp"
#include "transitnet/stats.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace transitnet;

namespace {

std::vector<XY> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> x(0, 100), y(-50, 50);
  std::vector<XY> pts(n);
  for (auto& p : pts) p = {x(rng), y(rng)};
  return pts;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

}  // namespace

TEST(PowerLaw, ExactDataIsRecovered) {
  std::vector<XY> pts;
  for (double x : {1.0, 10.0, 100.0, 1000.0}) pts.push_back({x, 2 * std::pow(x, 0.95)});
  const auto f = fit_power_law(pts);
  EXPECT_NEAR(f.beta, 0.95, 1e-9);
  EXPECT_NEAR(f.Y, 2.0, 1e-9);
  EXPECT_NEAR(f.r2, 1.0, 1e-9);
  EXPECT_NEAR(f.beta_stderr, 0.0, 1e-9);
  EXPECT_EQ(f.n, 4u);
}

TEST(PowerLaw, ConstantYGivesFlatSlope) {
  const auto f = fit_power_law({{1, 7}, {5, 7}, {30, 7}, {200, 7}});
  EXPECT_NEAR(f.beta, 0.0, 1e-12);
  EXPECT_NEAR(f.Y, 7.0, 1e-9);
  EXPECT_GE(f.r2, 0.0);
  EXPECT_LE(f.r2, 1.0);
}

TEST(PowerLaw, NoisyDataWithinTolerance) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> lx(0, std::log(1e4));
  std::normal_distribution<double> noise(0, 0.1);
  for (int c = 0; c < 20; ++c) {
    std::vector<XY> pts;
    for (int i = 0; i < 300; ++i) {
      const double x = std::exp(lx(rng));
      pts.push_back({x, 2 * std::pow(x, 0.95) * std::exp(noise(rng))});
    }
    const auto f = fit_power_law(pts);
    EXPECT_NEAR(f.beta, 0.95, 0.05);
    EXPECT_GT(f.Y, 0);
    EXPECT_GE(f.r2, 0.9);
  }
}

TEST(PowerLaw, RejectsBadInput) {
  EXPECT_EQ(kind_of([] { fit_power_law({{1, 1}, {2, 2}}); }), ErrorKind::data);
  EXPECT_EQ(kind_of([] { fit_power_law({{1, 1}, {2, 0}, {3, 3}}); }), ErrorKind::data);
  EXPECT_EQ(kind_of([] { fit_power_law({{-1, 1}, {2, 2}, {3, 3}}); }), ErrorKind::data);
  EXPECT_EQ(kind_of([] { fit_power_law({{4, 1}, {4, 2}, {4, 3}}); }), ErrorKind::data);
}

TEST(NwSmooth, ConstantResponse) {
  std::mt19937_64 rng(52);
  auto pts = random_points(rng, 30);
  for (auto& p : pts) p.y = 3.5;
  for (double h : {0.5, 3.0, 100.0}) {
    for (const auto& v : nw_smooth(pts, h, {0, 17, 55.5, 100})) {
      ASSERT_TRUE(v);
      EXPECT_NEAR(*v, 3.5, 1e-12);
    }
  }
}

TEST(NwSmooth, SinglePoint) {
  for (const auto& v : nw_smooth({{4, -2}}, 1.0, {3, 4, 6})) {
    ASSERT_TRUE(v);
    EXPECT_DOUBLE_EQ(*v, -2.0);
  }
}

TEST(NwSmooth, SymmetricPair) {
  for (double h : {0.1, 1.0, 50.0}) {
    const auto v = nw_smooth({{0, 0}, {2, 4}}, h, {1.0});
    ASSERT_TRUE(v[0]);
    EXPECT_NEAR(*v[0], 2.0, 1e-12);
  }
}

TEST(NwSmooth, UnderflowIsUndefinedNotACrash) {
  const auto v = nw_smooth({{0, 1}, {1, 2}}, 1e-3, {0.0, 500.0});
  ASSERT_TRUE(v[0]);
  EXPECT_FALSE(v[1]);
}

TEST(NwSmooth, MatchesOracle) {
  std::mt19937_64 rng(53);
  for (int c = 0; c < 100; ++c) {
    const auto pts = random_points(rng, 1 + c % 40);
    const double h = 0.5 + (c % 13);
    const std::vector<double> grid{0, 12.5, 50, 99};
    const auto v = nw_smooth(pts, h, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double want = oracle::nw(pts, h, grid[i]);
      if (std::isnan(want)) {
        EXPECT_FALSE(v[i]);
      } else {
        ASSERT_TRUE(v[i]);
        EXPECT_NEAR(*v[i], want, 1e-9 * std::max(1.0, std::abs(want)));
      }
    }
  }
}

TEST(NwSmooth, BoundedOrderFreeAndMeanLimit) {
  std::mt19937_64 rng(54);
  for (int c = 0; c < 200; ++c) {
    auto pts = random_points(rng, 2 + c % 25);
    const double h = 0.3 + (c % 9) * 2.0;
    const auto grid = evaluation_grid(pts, 20);
    const auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(), [](auto a, auto b) { return a.y < b.y; });
    const auto v = nw_smooth(pts, h, grid);
    for (const auto& x : v) {
      if (!x) continue;
      EXPECT_GE(*x, lo->y - 1e-9);
      EXPECT_LE(*x, hi->y + 1e-9);
    }
    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto w = nw_smooth(shuffled, h, grid);
    for (std::size_t i = 0; i < v.size(); ++i) {
      ASSERT_EQ(v[i].has_value(), w[i].has_value());
      if (v[i]) {
        EXPECT_NEAR(*v[i], *w[i], 1e-9);
      }
    }
    double mean = 0;
    for (const auto& p : pts) mean += p.y;
    mean /= static_cast<double>(pts.size());
    for (const auto& x : nw_smooth(pts, 1e6 * 100, grid)) {
      ASSERT_TRUE(x);
      EXPECT_NEAR(*x, mean, 1e-6 * std::max(1.0, std::abs(mean)));
    }
  }
}

TEST(NwSmooth, RejectsBadInput) {
  EXPECT_EQ(kind_of([] { nw_smooth({}, 1.0, {0.0}); }), ErrorKind::data);
  EXPECT_EQ(kind_of([] { nw_smooth({{0, 0}}, 0.0, {0.0}); }), ErrorKind::data);
}

TEST(Grid, LogSpacedForPositiveX) {
  const auto g = evaluation_grid({{1, 0}, {1000, 0}}, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NEAR(g[0], 1, 1e-9);
  EXPECT_NEAR(g[1], 10, 1e-9);
  EXPECT_NEAR(g[3], 1000, 1e-9);
  const auto lin = evaluation_grid({{0, 0}, {3, 0}}, 4);
  EXPECT_NEAR(lin[1], 1, 1e-12);
}

TEST(Bandwidth, CandidatesSpanRange) {
  std::vector<XY> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({static_cast<double>(i * 10), 0});
  const auto c = bandwidth_candidates(pts, 30);
  ASSERT_EQ(c.size(), 30u);
  EXPECT_NEAR(c.front(), 9.0, 1e-9);
  EXPECT_NEAR(c.back(), 90.0, 1e-9);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_NEAR(c[i] / c[i - 1], c[1] / c[0], 1e-9);
}

TEST(Bandwidth, LooErrorMatchesOracle) {
  std::mt19937_64 rng(55);
  for (int c = 0; c < 50; ++c) {
    auto pts = random_points(rng, 6 + c % 20);
    if (c % 3 == 0) pts.push_back(pts[0]);
    for (double h : {0.5, 5.0, 40.0}) {
      const double want = oracle::loo_error(pts, h);
      const double got = loo_cv_error(pts, h);
      if (std::isinf(want)) {
        EXPECT_TRUE(std::isinf(got));
      } else {
        EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, want));
      }
    }
  }
}

TEST(Bandwidth, SelectionIsOracleArgmin) {
  std::mt19937_64 rng(56);
  for (int c = 0; c < 30; ++c) {
    const auto pts = random_points(rng, 8 + c % 15);
    const auto cands = bandwidth_candidates(pts);
    double best_h = 0, best = std::numeric_limits<double>::infinity();
    for (double h : cands) {
      const double e = oracle::loo_error(pts, h);
      if (e < best) best = e, best_h = h;
    }
    EXPECT_DOUBLE_EQ(select_bandwidth_cv(pts), best_h);
  }
}

TEST(Bandwidth, SharpFeatureWantsSmallerBandwidth) {
  std::mt19937_64 rng(60);
  std::normal_distribution<double> noise(0, 0.3);
  std::vector<XY> sharp, flat;
  for (int i = 0; i <= 80; ++i) {
    const double x = i;
    const double y = std::sin(x / 12) + noise(rng);
    flat.push_back({x, y});
    sharp.push_back({x, y + (std::abs(x - 40) <= 2 ? 6.0 : 0.0)});
  }
  auto argmin = [](const std::vector<XY>& pts) {
    double best_h = 0, best = std::numeric_limits<double>::infinity();
    for (double h : bandwidth_candidates(pts)) {
      const double e = oracle::loo_error(pts, h);
      if (e < best) best = e, best_h = h;
    }
    return best_h;
  };
  const double hs = select_bandwidth_cv(sharp);
  const double hf = select_bandwidth_cv(flat);
  EXPECT_DOUBLE_EQ(hs, argmin(sharp));
  EXPECT_DOUBLE_EQ(hf, argmin(flat));
  EXPECT_LT(hs, hf);
}

TEST(Bandwidth, DuplicatedDataKeepsBandwidth) {
  std::mt19937_64 rng(57);
  for (int c = 0; c < 10; ++c) {
    const auto pts = random_points(rng, 12);
    auto twice = pts;
    twice.insert(twice.end(), pts.begin(), pts.end());
    EXPECT_DOUBLE_EQ(select_bandwidth_cv(twice), select_bandwidth_cv(pts));
  }
}

TEST(Bandwidth, NoiselessLinearFiveFollowsLooCurve) {
  const std::vector<XY> pts{{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}};
  const auto cands = bandwidth_candidates(pts);
  double best_h = 0, best = std::numeric_limits<double>::infinity();
  for (double h : cands) {
    const double e = oracle::loo_error(pts, h);
    if (e < best) best = e, best_h = h;
  }
  EXPECT_DOUBLE_EQ(select_bandwidth_cv(pts), best_h);
  // Leaving out an endpoint of a line always pulls the prediction inward, so
  // wide kernels lose and the minimum sits below the largest candidate.
  EXPECT_LT(best_h, cands.back());
}

TEST(Bandwidth, RejectsDegenerateInput) {
  EXPECT_EQ(kind_of([] { select_bandwidth_cv({{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}}); }), ErrorKind::data);
  EXPECT_EQ(kind_of([] { select_bandwidth_cv({{1, 1}, {2, 2}, {3, 3}, {4, 4}}); }), ErrorKind::data);
}

TEST(Bootstrap, DeterministicPerSeed) {
  std::mt19937_64 rng(58);
  const auto pts = random_points(rng, 40);
  const auto grid = evaluation_grid(pts, 15);
  const auto a = bootstrap_ci(pts, 8.0, 200, grid, 9);
  const auto b = bootstrap_ci(pts, 8.0, 200, grid, 9);
  const auto c = bootstrap_ci(pts, 8.0, 200, grid, 10);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_NE(a.low, c.low);
}

TEST(Bootstrap, ConstantDataHasZeroWidth) {
  std::vector<XY> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({static_cast<double>(i), 4.0});
  const auto band = bootstrap_ci(pts, 2.0, 100, {0, 5, 19}, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_TRUE(band.low[i] && band.high[i]);
    EXPECT_NEAR(*band.low[i], 4.0, 1e-12);
    EXPECT_NEAR(*band.high[i], 4.0, 1e-12);
  }
}

TEST(Bootstrap, RejectsTooFewResamples) {
  EXPECT_EQ(kind_of([] { bootstrap_ci({{0, 0}, {1, 1}}, 1.0, 99, {0.5}, 1); }), ErrorKind::data);
  EXPECT_EQ(kind_of([] { bootstrap_ci({{0, 0}, {1, 1}}, 1.0, 100, {0.5}, 1, 1.5); }), ErrorKind::data);
}

TEST(KernelFit, BandContainsEstimate) {
  std::mt19937_64 rng(59);
  for (int c = 0; c < 10; ++c) {
    std::vector<XY> pts;
    std::lognormal_distribution<double> x(3, 1);
    std::normal_distribution<double> noise(0, 0.3);
    for (int i = 0; i < 60; ++i) {
      const double xi = x(rng);
      pts.push_back({xi, xi * std::exp(noise(rng))});
    }
    const auto f = kernel_fit(pts, 100, c, 25);
    EXPECT_GT(f.h, 0);
    ASSERT_EQ(f.grid.size(), 25u);
    EXPECT_TRUE(std::is_sorted(f.grid.begin(), f.grid.end()));
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
      if (!f.smoothed[i]) continue;
      ASSERT_TRUE(f.ci_low[i] && f.ci_high[i]);
      EXPECT_LE(*f.ci_low[i], *f.smoothed[i]);
      EXPECT_GE(*f.ci_high[i], *f.smoothed[i]);
    }
  }
}

TEST(KernelFit, ReportFiles) {
  fixture::TempDir dir("stats");
  std::vector<XY> pts;
  for (int i = 1; i <= 30; ++i) pts.push_back({static_cast<double>(i), 2.0 * i});
  const auto fit = kernel_fit(pts, 100, 4, 10);
  write_curve_csv(dir.file("curve.csv"), fit);
  write_regression_report(dir.file("r.json"), fit_power_law(pts), fit);
  EXPECT_EQ(fixture::read_file(dir.file("curve.csv")).substr(0, 29), "grid,smoothed,ci_low,ci_high\n");
  const auto j = nlohmann::json::parse(fixture::read_file(dir.file("r.json")));
  for (const char* key : {"beta", "Y", "r2", "beta_stderr", "h", "B", "seed"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["B"], 100);
}
