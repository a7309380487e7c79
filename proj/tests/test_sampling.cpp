#include "respnav/error.hpp"
#include "respnav/sampling.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace respnav;

namespace {

std::vector<PeCoord> coords(std::initializer_list<std::pair<int, int>> list)
{
  std::vector<PeCoord> out;
  for (auto [ky, kz] : list) {
    out.push_back({ky, kz});
  }
  return out;
}

} // namespace

// Expected coordinates from tests/oracles/spoke_oracle.py.
TEST(Spoke, MatchesOracleSquareGrid)
{
  PatternConfig c;
  c.ny = 32;
  c.nz = 32;
  c.spoke_len = 8;
  EXPECT_EQ(generate_spoke(1, c), coords({{0, 0}, {-2, 1}, {-3, 3}, {-5, 4}, {-6, 6}, {-8, 7}, {-9, 9}, {-11, 10}}));
}

TEST(Spoke, MatchesOracleDefaultGrid)
{
  PatternConfig const c;
  EXPECT_EQ(generate_spoke(0, c), coords({{0, 0}, {2, 0}, {4, 0}, {6, 0}, {8, 0}, {10, 0}, {12, 0}, {14, 0},
                                          {17, 0}, {19, 0}, {21, 0}, {23, 0}, {25, 0}, {27, 0}, {29, 0}, {31, 0}}));
  EXPECT_EQ(generate_spoke(3, c), coords({{0, 0}, {1, 0}, {3, 1}, {4, 1}, {5, 2}, {6, 2}, {8, 3}, {9, 3},
                                          {10, 3}, {11, 4}, {13, 4}, {14, 5}, {15, 5}, {16, 6}, {18, 6}, {19, 6}}));
  EXPECT_EQ(generate_spoke(7, c),
            coords({{0, 0}, {-1, 0}, {-2, -1}, {-3, -1}, {-4, -2}, {-5, -2}, {-6, -3}, {-7, -3}, {-8, -4},
                    {-9, -4}, {-10, -5}, {-11, -5}, {-11, -6}, {-12, -6}, {-13, -7}, {-14, -7}}));
}

TEST(Spoke, Properties)
{
  for (auto [ny, nz, u] : {std::tuple{64, 18, 16}, std::tuple{32, 32, 8}, std::tuple{16, 8, 8}, std::tuple{64, 8, 16},
                           std::tuple{32, 8, 16}}) {
    PatternConfig c;
    c.ny = ny;
    c.nz = nz;
    c.spoke_len = u;
    for (int i = 0; i < 500; ++i) {
      auto const s = generate_spoke(i, c);
      ASSERT_EQ(s.size(), static_cast<std::size_t>(u));
      EXPECT_EQ(s.front(), (PeCoord{0, 0}));
      std::set<std::pair<int, int>> seen;
      double last = 0.0;
      for (auto const &p : s) {
        EXPECT_GE(p.ky, -ny / 2);
        EXPECT_LT(p.ky, ny / 2);
        EXPECT_GE(p.kz, -nz / 2);
        EXPECT_LT(p.kz, nz / 2);
        EXPECT_TRUE(seen.insert({p.ky, p.kz}).second) << "duplicate in spoke " << i;
        double const r = normalized_radius(p, c);
        EXPECT_GE(r, last - 1e-12) << "spoke " << i;
        last = r;
      }
    }
  }
}

TEST(Spoke, OverlongSpokesStayDistinct)
{
  // More samples than lattice points along the ray: monotone radius is not
  // achievable, distinct in-grid points still are.
  for (auto [ny, nz, u] : {std::tuple{8, 8, 8}, std::tuple{64, 64, 64}}) {
    PatternConfig c;
    c.ny = ny;
    c.nz = nz;
    c.spoke_len = u;
    for (int i = 0; i < 100; ++i) {
      std::set<std::pair<int, int>> seen;
      for (auto const &p : generate_spoke(i, c)) {
        EXPECT_TRUE(p.ky >= -ny / 2 && p.ky < ny / 2 && p.kz >= -nz / 2 && p.kz < nz / 2);
        EXPECT_TRUE(seen.insert({p.ky, p.kz}).second) << "duplicate in spoke " << i;
      }
    }
  }
}

TEST(Spoke, ZeroIncrementRepeats)
{
  PatternConfig c;
  c.spoke_angle_increment = 0.0;
  EXPECT_EQ(generate_spoke(0, c), generate_spoke(1, c));
  EXPECT_EQ(generate_spoke(0, c), generate_spoke(17, c));
}

TEST(Spoke, AzimuthFollowsIncrement)
{
  PatternConfig const c;
  double const kz_scale = (c.nz / 2.0 - 1.0) / (c.ny / 2.0 - 1.0);
  for (int i = 0; i < 100; ++i) {
    double sy = 0.0, sz = 0.0;
    for (auto const &p : generate_spoke(i, c)) {
      sy += p.ky;
      sz += p.kz / kz_scale;
    }
    double const theta = i * c.spoke_angle_increment;
    double const diff = std::remainder(std::atan2(sz, sy) - theta, 2.0 * std::numbers::pi);
    EXPECT_LT(std::abs(diff), 0.15) << "spoke " << i;
  }
}

TEST(Schedule, NavigationLine)
{
  PatternConfig c;
  c.spoke_len = 6;
  EXPECT_EQ(navigation_line(c), coords({{-3, 0}, {-2, 0}, {-1, 0}, {0, 0}, {1, 0}, {2, 0}}));
}

TEST(Schedule, Invariants)
{
  PatternConfig c;
  c.total_dur_s = 12.5;
  auto const s = generate_schedule(c);
  ASSERT_EQ(s.readouts.size(), c.readout_count());
  EXPECT_EQ(s.readouts.size(), static_cast<std::size_t>(std::floor(12.5 / 0.0033)));
  for (std::size_t i = 0; i < s.readouts.size(); ++i) {
    EXPECT_EQ(s.readouts[i].index, static_cast<int>(i));
    EXPECT_DOUBLE_EQ(s.readouts[i].time_s, i * c.tr_s);
  }
  ASSERT_EQ(s.nav_events.size(), 13u);
  auto const line = navigation_line(c);
  for (std::size_t e = 0; e < s.nav_events.size(); ++e) {
    auto const &ev = s.nav_events[e];
    EXPECT_EQ(ev.nav_id, static_cast<int>(e));
    EXPECT_GE(ev.time_s, e * c.nav_interval_s - 1e-9);
    ASSERT_EQ(ev.end_index - ev.start_index, c.spoke_len);
    for (int k = 0; k < c.spoke_len; ++k) {
      auto const &r = s.readouts[static_cast<std::size_t>(ev.start_index + k)];
      EXPECT_EQ(r.role, Role::Navigation);
      EXPECT_EQ((PeCoord{r.ky, r.kz}), line[static_cast<std::size_t>(k)]);
    }
  }
  // Each readout belongs to the latest navigation event at or before it.
  std::size_t next = 0;
  int current = -1;
  for (auto const &r : s.readouts) {
    while (next < s.nav_events.size() && s.nav_events[next].start_index <= r.index) {
      current = s.nav_events[next++].nav_id;
    }
    EXPECT_EQ(r.nav_id, current);
  }
  EXPECT_EQ(s.nav_events.front().start_index, 0);
}

TEST(Schedule, ImagingReadoutsFollowSpokes)
{
  PatternConfig c;
  c.total_dur_s = 3.0;
  auto const s = generate_schedule(c);
  int spoke = 0;
  std::size_t i = 0;
  while (i < s.readouts.size()) {
    if (s.readouts[i].role == Role::Navigation) {
      ++i;
      continue;
    }
    auto const expected = generate_spoke(spoke++, c);
    for (std::size_t k = 0; k < expected.size() && i < s.readouts.size(); ++k, ++i) {
      ASSERT_EQ(s.readouts[i].role, Role::Imaging) << "navigation block split a spoke at " << i;
      EXPECT_EQ((PeCoord{s.readouts[i].ky, s.readouts[i].kz}), expected[k]);
    }
  }
}

TEST(Schedule, LongScanNavigationCount)
{
  PatternConfig c;
  c.total_dur_s = 318.0;
  auto const s = generate_schedule(c);
  EXPECT_NEAR(static_cast<double>(s.nav_events.size()), 318.0, 1.0);
}

TEST(Schedule, ShorterThanOneInterval)
{
  PatternConfig c;
  c.total_dur_s = 0.5;
  auto const s = generate_schedule(c);
  ASSERT_EQ(s.nav_events.size(), 1u);
  EXPECT_EQ(s.nav_events[0].time_s, 0.0);
}

TEST(Schedule, ValidationErrors)
{
  PatternConfig c;
  c.total_dur_s = c.tr_s * 3;
  EXPECT_THROW(generate_schedule(c), ConfigError);
  c = PatternConfig{};
  c.spoke_len = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PatternConfig{};
  c.ny = 63;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PatternConfig{};
  c.spoke_len = 80;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PatternConfig{};
  c.tr_s = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Schedule, JsonRoundTrip)
{
  auto const s = generate_schedule(fixtures::small_pattern(2.0));
  nlohmann::json const j = s;
  auto const back = j.get<SamplingSchedule>();
  ASSERT_EQ(back.readouts.size(), s.readouts.size());
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.nav_events.size(), s.nav_events.size());
}

TEST(Schedule, IndexNavigationOnHandBuiltSchedule)
{
  SamplingSchedule s;
  s.config = fixtures::small_pattern(1.0);
  auto add = [&](Role role, int ky) {
    ReadoutDescriptor r;
    r.index = static_cast<int>(s.readouts.size());
    r.time_s = r.index * s.config.tr_s;
    r.ky = ky;
    r.role = role;
    s.readouts.push_back(r);
  };
  for (int k = -4; k < 4; ++k) {
    add(Role::Navigation, k);
  }
  add(Role::Imaging, 5);
  add(Role::Imaging, 6);
  for (int k = -4; k < 4; ++k) {
    add(Role::Navigation, k);
  }
  add(Role::Imaging, 7);
  index_navigation(s);
  ASSERT_EQ(s.nav_events.size(), 2u);
  EXPECT_EQ(s.nav_events[1].start_index, 10);
  EXPECT_EQ(s.nav_events[1].end_index, 18);
  EXPECT_EQ(s.readouts[9].nav_id, 0);
  EXPECT_EQ(s.readouts[18].nav_id, 1);
}

TEST(Undersampling, CountsDistinctCells)
{
  SamplingSchedule s;
  s.config = fixtures::small_pattern(1.0);
  // Phase 0: (0,0) three times and (1,0) once. Phase 1: (2,1), (3,1).
  std::vector<std::pair<int, int>> const pe{{0, 0}, {0, 0}, {1, 0}, {0, 0}, {2, 1}, {3, 1}};
  std::vector<int> const phase{0, 0, 0, 0, 1, 1};
  for (std::size_t i = 0; i < pe.size(); ++i) {
    ReadoutDescriptor r;
    r.index = static_cast<int>(i);
    r.ky = pe[i].first;
    r.kz = pe[i].second;
    s.readouts.push_back(r);
  }
  auto const rep = undersampling_report(s, phase, 2);
  ASSERT_EQ(rep.phases.size(), 2u);
  EXPECT_EQ(rep.phases[0].readouts, 4u);
  EXPECT_EQ(rep.phases[0].distinct, 2u);
  EXPECT_DOUBLE_EQ(rep.phases[0].r_factor, 32.0 * 8.0 / 2.0);
  EXPECT_EQ(rep.phases[1].distinct, 2u);

  std::vector<std::size_t> const only{0, 1, 4, 5};
  auto const sub = undersampling_report(s, phase, 2, std::span<std::size_t const>(only));
  EXPECT_EQ(sub.phases[0].distinct, 1u);
  EXPECT_GE(sub.phases[0].r_factor, rep.phases[0].r_factor);

  std::vector<int> const empty_phase{0, 0, 0, 0, 0, 0};
  EXPECT_THROW(undersampling_report(s, empty_phase, 2), EmptyBin);
}

TEST(Undersampling, RestrictionNeverLowersR)
{
  auto const s = generate_schedule(fixtures::small_pattern(6.0));
  std::vector<int> phase(s.readouts.size());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    phase[i] = static_cast<int>(i % 3);
  }
  auto const full = undersampling_report(s, phase, 3);
  std::vector<std::size_t> half;
  for (std::size_t i = 0; i < s.readouts.size(); i += 2) {
    half.push_back(i);
  }
  auto const sub = undersampling_report(s, phase, 3, std::span<std::size_t const>(half));
  for (int p = 0; p < 3; ++p) {
    EXPECT_GE(sub.phases[p].r_factor, full.phases[p].r_factor);
  }
}
