#include "transitnet/stats.hpp"

#include "transitnet/common.hpp"
#include "transitnet/csv.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace transitnet {

RegressionFit fit_power_law(const std::vector<XY>& points) {
  if (points.size() < 3) throw_data("power-law fit needs at least 3 points");
  const double n = static_cast<double>(points.size());
  std::vector<double> lx, ly;
  for (const auto& p : points) {
    if (!(p.x > 0) || !(p.y > 0)) throw_data("power-law fit needs strictly positive x and y");
    lx.push_back(std::log(p.x));
    ly.push_back(std::log(p.y));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0)) throw_data("power-law fit: zero variance in x");

  RegressionFit fit;
  fit.n = points.size();
  fit.beta = sxy / sxx;
  const double intercept = my - fit.beta * mx;
  fit.Y = std::exp(intercept);
  double ssr = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (intercept + fit.beta * lx[i]);
    ssr += r * r;
  }
  fit.r2 = syy > 0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  fit.beta_stderr = std::sqrt(ssr / (n - 2) / sxx);
  return fit;
}

namespace {

// Weighted mean around a reference value so that constant data come back exactly.
std::optional<double> nw_at(const std::vector<XY>& points, double h, double x, double min_y, double max_y,
                            std::size_t skip_begin = 0, std::size_t skip_end = 0) {
  const double inv = 1.0 / (2.0 * h * h);
  double dmin = std::numeric_limits<double>::infinity();
  bool any_raw = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i >= skip_begin && i < skip_end) continue;
    const double d = (x - points[i].x) * (x - points[i].x) * inv;
    dmin = std::min(dmin, d);
    any_raw = any_raw || std::exp(-d) > 0;
  }
  if (!any_raw) return std::nullopt;
  double ref = std::numeric_limits<double>::quiet_NaN();
  double sw = 0, swy = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i >= skip_begin && i < skip_end) continue;
    const double d = (x - points[i].x) * (x - points[i].x) * inv;
    const double w = std::exp(-(d - dmin));
    if (std::isnan(ref)) ref = points[i].y;
    sw += w;
    swy += w * (points[i].y - ref);
  }
  return std::clamp(ref + swy / sw, min_y, max_y);
}

std::pair<double, double> y_range(const std::vector<XY>& points) {
  auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                      [](const XY& a, const XY& b) { return a.y < b.y; });
  return {lo->y, hi->y};
}

std::pair<double, double> x_range(const std::vector<XY>& points) {
  auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                      [](const XY& a, const XY& b) { return a.x < b.x; });
  return {lo->x, hi->x};
}

}  // namespace

std::vector<std::optional<double>> nw_smooth(const std::vector<XY>& points, double h,
                                             const std::vector<double>& grid) {
  if (points.empty()) throw_data("kernel smoother needs at least one point");
  if (!(h > 0)) throw_data("kernel bandwidth must be positive");
  const auto [min_y, max_y] = y_range(points);
  std::vector<std::optional<double>> out;
  out.reserve(grid.size());
  for (double x : grid) out.push_back(nw_at(points, h, x, min_y, max_y));
  return out;
}

std::vector<double> evaluation_grid(const std::vector<XY>& points, std::size_t size) {
  if (points.empty() || size == 0) return {};
  const auto [lo, hi] = x_range(points);
  if (size == 1 || lo == hi) return {lo};
  std::vector<double> grid(size);
  const bool log_spaced = lo > 0;
  for (std::size_t i = 0; i < size; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(size - 1);
    grid[i] = log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo + f * (hi - lo);
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

std::vector<double> bandwidth_candidates(const std::vector<XY>& points, std::size_t count) {
  const auto [lo, hi] = x_range(points);
  const double range = hi - lo;
  if (!(range > 0)) throw_data("bandwidth selection: all x values are equal");
  std::vector<double> xs;
  for (const auto& p : points) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  const auto distinct = static_cast<double>(std::unique(xs.begin(), xs.end()) - xs.begin());
  const double first = range / distinct;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = first * std::pow(range / first, f);
  }
  out.back() = range;
  return out;
}

double loo_cv_error(const std::vector<XY>& points, double h) {
  std::vector<XY> sorted = points;
  std::stable_sort(sorted.begin(), sorted.end(), [](const XY& a, const XY& b) { return a.x < b.x; });
  const auto [min_y, max_y] = y_range(sorted);
  double err = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].x == sorted[i].x) ++j;
    if (j - i == sorted.size()) return std::numeric_limits<double>::infinity();
    auto m = nw_at(sorted, h, sorted[i].x, min_y, max_y, i, j);
    if (!m) return std::numeric_limits<double>::infinity();
    for (std::size_t k = i; k < j; ++k) err += (sorted[k].y - *m) * (sorted[k].y - *m);
    i = j;
  }
  return err;
}

double select_bandwidth_cv(const std::vector<XY>& points, std::size_t candidates) {
  if (points.size() < 5) throw_data("bandwidth selection needs at least 5 points");
  const auto hs = bandwidth_candidates(points, candidates);
  double best_h = hs.front();
  double best = std::numeric_limits<double>::infinity();
  for (double h : hs) {
    const double e = loo_cv_error(points, h);
    if (e < best) {
      best = e;
      best_h = h;
    }
  }
  return best_h;
}

namespace {

double percentile(std::vector<double>& v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

ConfidenceBand bootstrap_ci(const std::vector<XY>& points, double h, std::size_t B,
                            const std::vector<double>& grid, std::uint64_t seed, double level) {
  if (B < 100) throw_data("bootstrap needs at least 100 resamples");
  if (!(level > 0 && level < 1)) throw_data("confidence level must be in (0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::vector<std::vector<double>> at(grid.size());
  std::vector<XY> sample(points.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (auto& s : sample) s = points[pick(rng)];
    auto m = nw_smooth(sample, h, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (m[g]) at[g].push_back(*m[g]);
    }
  }
  ConfidenceBand band;
  const double tail = (1.0 - level) / 2.0;
  for (auto& values : at) {
    if (values.empty()) {
      band.low.emplace_back();
      band.high.emplace_back();
      continue;
    }
    band.low.push_back(percentile(values, tail));
    band.high.push_back(percentile(values, 1.0 - tail));
  }
  return band;
}

KernelFit kernel_fit(const std::vector<XY>& points, std::size_t B, std::uint64_t seed, std::size_t grid_size) {
  KernelFit fit;
  fit.B = B;
  fit.seed = seed;
  fit.h = select_bandwidth_cv(points);
  fit.grid = evaluation_grid(points, grid_size);
  fit.smoothed = nw_smooth(points, fit.h, fit.grid);
  auto band = bootstrap_ci(points, fit.h, B, fit.grid, seed);
  fit.ci_low = std::move(band.low);
  fit.ci_high = std::move(band.high);
  for (std::size_t g = 0; g < fit.grid.size(); ++g) {
    const auto& m = fit.smoothed[g];
    if (!m) continue;
    fit.ci_low[g] = fit.ci_low[g] ? std::min(*fit.ci_low[g], *m) : *m;
    fit.ci_high[g] = fit.ci_high[g] ? std::max(*fit.ci_high[g], *m) : *m;
  }
  return fit;
}

void write_curve_csv(const std::string& path, const KernelFit& fit) {
  auto cell = [](const std::optional<double>& v) { return v ? csv::fmt_double(*v) : std::string(); };
  csv::Writer w(path, {"grid", "smoothed", "ci_low", "ci_high"});
  for (std::size_t g = 0; g < fit.grid.size(); ++g) {
    w.row("{},{},{},{}", csv::fmt_double(fit.grid[g]), cell(fit.smoothed[g]), cell(fit.ci_low[g]),
          cell(fit.ci_high[g]));
  }
}

void write_regression_report(const std::string& path, const RegressionFit& reg, const KernelFit& fit) {
  nlohmann::ordered_json j;
  j["beta"] = reg.beta;
  j["Y"] = reg.Y;
  j["r2"] = reg.r2;
  j["beta_stderr"] = reg.beta_stderr;
  j["beta_uncertainty"] = "standard error";
  j["n"] = reg.n;
  j["h"] = fit.h;
  j["B"] = fit.B;
  j["seed"] = fit.seed;
  std::ofstream out(path);
  if (!out) throw_artifact("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace transitnet
