#include "respnav/metrics.hpp"

#include "respnav/error.hpp"
#include "respnav/wavelet.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace respnav {

double histogram_entropy(Image const &img)
{
  if (img.data.empty()) {
    return 0.0;
  }
  auto const [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  double const range = *hi - *lo;
  if (!(range > 0.0)) {
    return 0.0;
  }
  std::array<std::size_t, 256> counts{};
  for (double v : img.data) {
    auto const bin = static_cast<std::size_t>(std::clamp((v - *lo) / range * 256.0, 0.0, 255.0));
    ++counts[bin];
  }
  double const total = static_cast<double>(img.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c > 0) {
      double const p = static_cast<double>(c) / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double total_variation(Image const &img)
{
  double tv = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x + 1 < img.width; ++x) {
      tv += std::abs(img(x + 1, y) - img(x, y));
    }
  }
  for (int y = 0; y + 1 < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      tv += std::abs(img(x, y + 1) - img(x, y));
    }
  }
  return tv;
}

double sigma_noise(Image const &img)
{
  if (img.width < 16 || img.height < 16) {
    throw TooSmall(fmt::format("slice {}x{} is below 16x16", img.width, img.height));
  }
  Image even(img.width & ~1, img.height & ~1);
  for (int y = 0; y < even.height; ++y) {
    for (int x = 0; x < even.width; ++x) {
      even(x, y) = img(x, y);
    }
  }
  static Wavelet const db8 = Wavelet::daubechies(8);
  Image const hh = diagonal_detail(even, db8);
  std::vector<double> mags(hh.data.size());
  std::transform(hh.data.begin(), hh.data.end(), mags.begin(), [](double v) { return std::abs(v); });
  // Median of an even count is the mean of the two middle values.
  std::size_t const mid = mags.size() / 2;
  std::nth_element(mags.begin(), mags.begin() + static_cast<long>(mid), mags.end());
  double median = mags[mid];
  if (mags.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(mags.begin(), mags.begin() + static_cast<long>(mid)));
  }
  return median / 0.6745;
}

Summary summarize(std::span<double const> values)
{
  Summary s;
  s.n = values.size();
  if (s.n == 0) {
    return s;
  }
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - s.mean) * (v - s.mean);
    }
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  double const half = 1.96 * s.std / std::sqrt(static_cast<double>(s.n));
  s.ci_low = s.mean - half;
  s.ci_high = s.mean + half;
  return s;
}

MethodMetrics evaluate(std::string const &name, VolumeSeries const &series)
{
  MethodMetrics m;
  m.name = name;
  for (std::size_t p = 0; p < series.volumes.size(); ++p) {
    auto const &vol = series.volumes[p];
    for (int z = 0; z < vol.nz; ++z) {
      Image const slice = slice_z(vol, z);
      m.samples.push_back({z, static_cast<int>(p), histogram_entropy(slice), total_variation(slice),
                           sigma_noise(slice)});
    }
  }
  std::vector<double> h, tv, sigma;
  for (auto const &s : m.samples) {
    h.push_back(s.entropy);
    tv.push_back(s.tv);
    sigma.push_back(s.sigma);
  }
  m.entropy = summarize(h);
  m.tv = summarize(tv);
  m.sigma = summarize(sigma);
  return m;
}

TTest paired_t_test(std::span<double const> a, std::span<double const> b)
{
  if (a.size() != b.size()) {
    throw ConfigMismatch("paired t-test needs equally sized samples");
  }
  TTest r;
  r.n = a.size();
  if (r.n < 3) {
    throw InsufficientSamples(fmt::format("paired t-test needs n >= 3 (got {})", r.n));
  }
  std::vector<double> d(r.n);
  for (std::size_t i = 0; i < r.n; ++i) {
    d[i] = a[i] - b[i];
  }
  Summary const s = summarize(d);
  if (s.std == 0.0) {
    if (s.mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), s.mean);
      r.p = 0.0;
      r.degenerate = true;
    }
    return r;
  }
  r.t = s.mean / (s.std / std::sqrt(static_cast<double>(r.n)));
  boost::math::students_t dist(static_cast<double>(r.n - 1));
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

Comparison compare(MethodMetrics const &a, MethodMetrics const &b)
{
  std::map<std::pair<int, int>, SliceMetrics const *> index;
  for (auto const &s : b.samples) {
    index[{s.slice, s.phase}] = &s;
  }
  if (index.size() != a.samples.size() || b.samples.size() != a.samples.size()) {
    throw ConfigMismatch(fmt::format("'{}' and '{}' cover different (slice, phase) sets", a.name, b.name));
  }
  std::array<std::vector<double>, 3> xa, xb;
  for (auto const &s : a.samples) {
    auto const it = index.find({s.slice, s.phase});
    if (it == index.end()) {
      throw ConfigMismatch(fmt::format("'{}' lacks slice {} phase {}", b.name, s.slice, s.phase));
    }
    xa[0].push_back(s.entropy);
    xa[1].push_back(s.tv);
    xa[2].push_back(s.sigma);
    xb[0].push_back(it->second->entropy);
    xb[1].push_back(it->second->tv);
    xb[2].push_back(it->second->sigma);
  }
  return {a.name, b.name, paired_t_test(xa[0], xb[0]), paired_t_test(xa[1], xb[1]), paired_t_test(xa[2], xb[2])};
}

MetricsReport build_report(std::vector<MethodMetrics> methods)
{
  MetricsReport r;
  r.methods = std::move(methods);
  for (std::size_t i = 0; i < r.methods.size(); ++i) {
    for (std::size_t j = i + 1; j < r.methods.size(); ++j) {
      r.comparisons.push_back(compare(r.methods[i], r.methods[j]));
    }
  }
  return r;
}

std::string format_table(MetricsReport const &report)
{
  auto const cell = [](Summary const &s, int digits) {
    return fmt::format("{:.{}f} +- {:.{}f} [{:.{}f}, {:.{}f}]", s.mean, digits, s.std, digits, s.ci_low, digits,
                       s.ci_high, digits);
  };
  std::string out = fmt::format("{:<10} {:<34} {:<40} {:<34}\n", "Method", "H (bits)", "TV", "sigma_noise");
  for (auto const &m : report.methods) {
    out += fmt::format("{:<10} {:<34} {:<40} {:<34}\n", m.name, cell(m.entropy, 3), cell(m.tv, 2),
                       cell(m.sigma, 4));
  }
  out += "\nPaired t-tests (two-sided)\n";
  for (auto const &c : report.comparisons) {
    out += fmt::format("{} vs {}: H t={:.3f} p={:.3g} | TV t={:.3f} p={:.3g} | sigma t={:.3f} p={:.3g} (n={})\n", c.a,
                       c.b, c.entropy.t, c.entropy.p, c.tv.t, c.tv.p, c.sigma.t, c.sigma.p, c.entropy.n);
  }
  return out;
}

namespace {

std::vector<double> ranks(std::span<double const> v)
{
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
      ++j;
    }
    double const avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      r[order[k]] = avg;
    }
    i = j + 1;
  }
  return r;
}

} // namespace

double rank_correlation(std::span<double const> a, std::span<double const> b)
{
  if (a.size() != b.size() || a.size() < 2) {
    throw ConfigMismatch("rank correlation needs two equally sized samples of size >= 2");
  }
  auto const ra = ranks(a);
  auto const rb = ranks(b);
  Summary const sa = summarize(ra);
  Summary const sb = summarize(rb);
  if (sa.std == 0.0 || sb.std == 0.0) {
    return 0.0;
  }
  double cov = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - sa.mean) * (rb[i] - sb.mean);
  }
  cov /= static_cast<double>(ra.size() - 1);
  return cov / (sa.std * sb.std);
}

namespace {

nlohmann::json summary_json(Summary const &s)
{
  return {{"mean", s.mean}, {"std", s.std}, {"ci95", {s.ci_low, s.ci_high}}, {"n", s.n}};
}

nlohmann::json ttest_json(TTest const &t)
{
  // JSON has no infinity; degenerate tests report t as null.
  nlohmann::json j = {{"p", t.p}, {"n", t.n}, {"degenerate", t.degenerate}};
  j["t"] = std::isfinite(t.t) ? nlohmann::json(t.t) : nlohmann::json(nullptr);
  return j;
}

} // namespace

void to_json(nlohmann::json &j, MetricsReport const &r)
{
  nlohmann::json methods = nlohmann::json::array();
  for (auto const &m : r.methods) {
    nlohmann::json samples = nlohmann::json::array();
    for (auto const &s : m.samples) {
      samples.push_back({{"slice", s.slice}, {"phase", s.phase}, {"H", s.entropy}, {"TV", s.tv}, {"sigma_noise", s.sigma}});
    }
    methods.push_back({{"name", m.name},
                       {"H", summary_json(m.entropy)},
                       {"TV", summary_json(m.tv)},
                       {"sigma_noise", summary_json(m.sigma)},
                       {"samples", samples}});
  }
  nlohmann::json comps = nlohmann::json::array();
  for (auto const &c : r.comparisons) {
    comps.push_back({{"a", c.a},
                     {"b", c.b},
                     {"H", ttest_json(c.entropy)},
                     {"TV", ttest_json(c.tv)},
                     {"sigma_noise", ttest_json(c.sigma)}});
  }
  j = {{"methods", methods}, {"comparisons", comps}};
}

} // namespace respnav
