#include "respnav/binning.hpp"

#include "respnav/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace respnav {

StateMap cluster_states(MotionTrace const &trace)
{
  StateMap map;
  map.mode = TraceMode::TwoD;
  map.navigators = trace.count();
  for (std::size_t i = 0; i < trace.count(); ++i) {
    map.states[{trace.ap[i], trace.si[i]}].push_back(static_cast<int>(i));
  }
  return map;
}

StateMap cluster_states(Trace1D const &trace, Quantizer const &q)
{
  if (q.buckets < 1) {
    throw ConfigError("quantizer needs at least one bucket");
  }
  StateMap map;
  map.mode = TraceMode::OneD;
  map.navigators = trace.scores.size();
  if (trace.scores.empty()) {
    return map;
  }
  auto const [lo, hi] = std::minmax_element(trace.scores.begin(), trace.scores.end());
  double const range = *hi - *lo;
  for (std::size_t i = 0; i < trace.scores.size(); ++i) {
    int bucket = 0;
    if (range > 0.0) {
      bucket = static_cast<int>(std::floor((trace.scores[i] - *lo) / range * q.buckets));
      bucket = std::clamp(bucket, 0, q.buckets - 1);
    }
    map.states[{bucket, 0}].push_back(static_cast<int>(i));
  }
  return map;
}

StateKey modal_state(StateMap const &map)
{
  if (map.states.empty()) {
    throw EmptyBin("no states to select from");
  }
  auto better = [](auto const &x, auto const &y) {
    if (x.second.size() != y.second.size()) {
      return x.second.size() > y.second.size();
    }
    long const nx = static_cast<long>(x.first.a) * x.first.a + static_cast<long>(x.first.b) * x.first.b;
    long const ny = static_cast<long>(y.first.a) * y.first.a + static_cast<long>(y.first.b) * y.first.b;
    if (nx != ny) {
      return nx < ny;
    }
    return x.first < y.first;
  };
  auto best = map.states.begin();
  for (auto it = map.states.begin(); it != map.states.end(); ++it) {
    if (better(*it, *best)) {
      best = it;
    }
  }
  return best->first;
}

std::vector<int> assign_cardiac_phases(std::span<double const> times, std::span<double const> triggers, int phases)
{
  if (phases < 1) {
    throw ConfigError("cardiac phase count must be >= 1");
  }
  if (triggers.size() < 2) {
    throw NoTriggers("need at least two trigger times to bracket readouts");
  }
  std::vector<int> out(times.size(), -1);
  for (std::size_t i = 0; i < times.size(); ++i) {
    double const t = times[i];
    auto const next = std::upper_bound(triggers.begin(), triggers.end(), t);
    if (next == triggers.begin() || next == triggers.end()) {
      continue;
    }
    double const start = *(next - 1);
    double const rr = *next - start;
    int const p = static_cast<int>(std::floor(phases * (t - start) / rr));
    out[i] = std::clamp(p, 0, phases - 1);
  }
  return out;
}

namespace {

BinSelection gather(StateMap const &states, std::set<int> const &navs, RawDataset const &raw, int phases)
{
  BinSelection bins;
  bins.states = states;
  bins.phases = phases;
  bins.selected_navigators.assign(navs.begin(), navs.end());
  std::vector<double> times;
  for (auto const &r : raw.schedule.readouts) {
    if (navs.contains(r.nav_id)) {
      bins.selected_readouts.push_back(static_cast<std::size_t>(r.index));
      times.push_back(r.time_s);
    }
  }
  bins.cardiac_phase_of_readout = assign_cardiac_phases(times, raw.trigger_times_s, phases);
  bins.dropped = static_cast<std::size_t>(
      std::count(bins.cardiac_phase_of_readout.begin(), bins.cardiac_phase_of_readout.end(), -1));
  std::size_t const total = std::max<std::size_t>(states.navigators, 1);
  bins.fraction_selected = static_cast<double>(navs.size()) / static_cast<double>(total);
  return bins;
}

} // namespace

BinSelection select_bin(StateMap const &states, RawDataset const &raw, int phases)
{
  if (states.navigators != raw.schedule.nav_events.size()) {
    throw ConfigMismatch(fmt::format("state map covers {} navigators, dataset has {}", states.navigators,
                                     raw.schedule.nav_events.size()));
  }
  StateKey const key = modal_state(states);
  auto const &members = states.states.at(key);
  BinSelection bins = gather(states, std::set<int>(members.begin(), members.end()), raw, phases);
  bins.selected_state = key;
  return bins;
}

BinSelection select_all(RawDataset const &raw, int phases)
{
  StateMap all;
  all.mode = TraceMode::TwoD;
  all.navigators = raw.schedule.nav_events.size();
  std::set<int> navs;
  for (std::size_t i = 0; i < all.navigators; ++i) {
    all.states[{0, 0}].push_back(static_cast<int>(i));
    navs.insert(static_cast<int>(i));
  }
  return gather(all, navs, raw, phases);
}

UndersamplingReport undersampling_report(RawDataset const &raw, BinSelection const &bins)
{
  std::vector<int> labels(raw.schedule.readouts.size(), -1);
  for (std::size_t k = 0; k < bins.selected_readouts.size(); ++k) {
    labels[bins.selected_readouts[k]] = bins.cardiac_phase_of_readout[k];
  }
  return undersampling_report(raw.schedule, labels, bins.phases, std::span<std::size_t const>(bins.selected_readouts));
}

void to_json(nlohmann::json &j, StateMap const &m)
{
  nlohmann::json states = nlohmann::json::array();
  for (auto const &[key, navs] : m.states) {
    states.push_back({{"key", {key.a, key.b}}, {"navigators", navs}});
  }
  j = {{"mode", m.mode == TraceMode::TwoD ? "2d" : "1d"}, {"navigators", m.navigators}, {"states", states}};
}

void from_json(nlohmann::json const &j, StateMap &m)
{
  m.mode = j.at("mode").get<std::string>() == "1d" ? TraceMode::OneD : TraceMode::TwoD;
  m.navigators = j.at("navigators").get<std::size_t>();
  m.states.clear();
  for (auto const &s : j.at("states")) {
    auto const key = s.at("key").get<std::array<int, 2>>();
    m.states[{key[0], key[1]}] = s.at("navigators").get<std::vector<int>>();
  }
}

void to_json(nlohmann::json &j, BinSelection const &b)
{
  j = {{"states", b.states},
       {"selected_state", {b.selected_state.a, b.selected_state.b}},
       {"selected_navigators", b.selected_navigators},
       {"selected_readouts", b.selected_readouts},
       {"cardiac_phase_of_readout", b.cardiac_phase_of_readout},
       {"fraction_selected", b.fraction_selected},
       {"phases", b.phases},
       {"dropped", b.dropped}};
}

void from_json(nlohmann::json const &j, BinSelection &b)
{
  b.states = j.at("states").get<StateMap>();
  auto const key = j.at("selected_state").get<std::array<int, 2>>();
  b.selected_state = {key[0], key[1]};
  b.selected_navigators = j.at("selected_navigators").get<std::vector<int>>();
  b.selected_readouts = j.at("selected_readouts").get<std::vector<std::size_t>>();
  b.cardiac_phase_of_readout = j.at("cardiac_phase_of_readout").get<std::vector<int>>();
  b.fraction_selected = j.at("fraction_selected").get<double>();
  b.phases = j.at("phases").get<int>();
  b.dropped = j.at("dropped").get<std::size_t>();
  if (b.cardiac_phase_of_readout.size() != b.selected_readouts.size()) {
    throw FormatError("bins: phase labels do not match selected readouts");
  }
}

} // namespace respnav
