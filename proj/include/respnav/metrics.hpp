#pragma once

#include "respnav/recon.hpp"
#include "respnav/types.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace respnav {

// Shannon entropy (bits) of a 256-bin histogram after min/max normalization
// of the slice. A constant slice has entropy 0.
double histogram_entropy(Image const &img);

// Anisotropic TV: sum of absolute forward differences along both axes, no wrap.
double total_variation(Image const &img);

// median(|HH|) / 0.6745 over the finest diagonal db8 detail band. Odd
// extents drop their last row/column. Throws TooSmall below 16 x 16.
double sigma_noise(Image const &img);

struct SliceMetrics
{
  int slice = 0;
  int phase = 0;
  double entropy = 0.0;
  double tv = 0.0;
  double sigma = 0.0;
};

struct Summary
{
  double mean = 0.0;
  double std = 0.0; // sample standard deviation
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

// Mean, sample std and the normal-approximation 95 % interval mean +- 1.96 std / sqrt(n).
Summary summarize(std::span<double const> values);

struct MethodMetrics
{
  std::string name;
  std::vector<SliceMetrics> samples;
  Summary entropy;
  Summary tv;
  Summary sigma;
};

// Every (slice, phase) of the series; slices are z-planes.
MethodMetrics evaluate(std::string const &name, VolumeSeries const &series);

struct TTest
{
  double t = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  bool degenerate = false; // zero variance of the differences with nonzero mean
};

// Paired two-sided Student's t-test over a - b. Throws InsufficientSamples if n < 3.
TTest paired_t_test(std::span<double const> a, std::span<double const> b);

struct Comparison
{
  std::string a;
  std::string b;
  TTest entropy;
  TTest tv;
  TTest sigma;
};

// Pairs samples by (slice, phase). Throws ConfigMismatch if the sets differ.
Comparison compare(MethodMetrics const &a, MethodMetrics const &b);

struct MetricsReport
{
  std::vector<MethodMetrics> methods;
  std::vector<Comparison> comparisons; // every unordered pair
};

MetricsReport build_report(std::vector<MethodMetrics> methods);

// Text table: one row per method, mean +- std [95 % CI] per metric, then p-values.
std::string format_table(MetricsReport const &report);

// Spearman rank correlation with average ranks for ties; 0 if either side is constant.
double rank_correlation(std::span<double const> a, std::span<double const> b);

void to_json(nlohmann::json &j, MetricsReport const &r);

} // namespace respnav
