#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace transitnet {

struct XY {
  double x = 0;
  double y = 0;
};

struct RegressionFit {
  double beta = 0;
  double Y = 0;
  double r2 = 0;
  double beta_stderr = 0;
  std::size_t n = 0;
};

// OLS of ln y on ln x: y = Y * x^beta.
RegressionFit fit_power_law(const std::vector<XY>& points);

// Gaussian-kernel Nadaraya-Watson estimate at each grid point. nullopt where
// every kernel weight underflows to zero.
std::vector<std::optional<double>> nw_smooth(const std::vector<XY>& points, double h,
                                             const std::vector<double>& grid);

// `size` points, log-spaced over the x range when x > 0, linear otherwise.
std::vector<double> evaluation_grid(const std::vector<XY>& points, std::size_t size = 100);

// Geometric candidates spanning [range/n, range], n counting distinct x values.
std::vector<double> bandwidth_candidates(const std::vector<XY>& points, std::size_t count = 30);

// Summed squared leave-one-out error. Every point sharing the held-out x is
// left out with it. Infinite if some prediction is undefined.
double loo_cv_error(const std::vector<XY>& points, double h);

// Candidate with the smallest LOO error; ties go to the smaller h.
double select_bandwidth_cv(const std::vector<XY>& points, std::size_t candidates = 30);

struct ConfidenceBand {
  std::vector<std::optional<double>> low;
  std::vector<std::optional<double>> high;
};

// Pairs bootstrap with percentile bands.
ConfidenceBand bootstrap_ci(const std::vector<XY>& points, double h, std::size_t B,
                            const std::vector<double>& grid, std::uint64_t seed, double level = 0.95);

struct KernelFit {
  double h = 0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  std::vector<std::optional<double>> smoothed;
  std::vector<std::optional<double>> ci_low;
  std::vector<std::optional<double>> ci_high;
};

// CV bandwidth, smoother on the grid and a bootstrap band widened where
// needed so that it contains the point estimate.
KernelFit kernel_fit(const std::vector<XY>& points, std::size_t B = 500, std::uint64_t seed = 1,
                     std::size_t grid_size = 100);

void write_curve_csv(const std::string& path, const KernelFit& fit);
void write_regression_report(const std::string& path, const RegressionFit& reg, const KernelFit& fit);

}  // namespace transitnet
