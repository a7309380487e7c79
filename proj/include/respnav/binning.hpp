#pragma once

#include "respnav/motion.hpp"
#include "respnav/phantom.hpp"
#include "respnav/sampling.hpp"

#include <json.hpp>

#include <compare>
#include <map>
#include <span>
#include <vector>

namespace respnav {

enum class TraceMode
{
  TwoD,
  OneD
};

// 2-D mode: (ap, si) in pixels. 1-D mode: (bucket, 0).
struct StateKey
{
  int a = 0;
  int b = 0;
  friend auto operator<=>(StateKey const &, StateKey const &) = default;
};

struct StateMap
{
  TraceMode mode = TraceMode::TwoD;
  std::map<StateKey, std::vector<int>> states; // navigator indices (0-based) per state
  std::size_t navigators = 0;
};

struct Quantizer
{
  int buckets = 8;
};

StateMap cluster_states(MotionTrace const &trace);
// Equal-width buckets over the observed score range; a constant trace is one bucket.
StateMap cluster_states(Trace1D const &trace, Quantizer const &quantizer = {});

// Largest count; ties go to the smallest |key|, then lexicographic.
StateKey modal_state(StateMap const &map);

struct BinSelection
{
  StateMap states;
  StateKey selected_state;
  std::vector<int> selected_navigators;
  std::vector<std::size_t> selected_readouts;  // ascending readout indices
  std::vector<int> cardiac_phase_of_readout;   // parallel to selected_readouts; -1 when dropped
  double fraction_selected = 0.0;
  int phases = 1;
  std::size_t dropped = 0; // selected readouts not bracketed by triggers
};

// Phase = floor(P * elapsed / RR) using the bracketing trigger pair; -1 for
// readouts before the first or at/after the last trigger. Throws NoTriggers
// with fewer than two triggers.
std::vector<int> assign_cardiac_phases(std::span<double const> times_s, std::span<double const> triggers_s,
                                       int phases);

// Gathers every readout governed by a navigator of the modal state.
BinSelection select_bin(StateMap const &states, RawDataset const &raw, int phases);

// Every readout, as used by the reconstruction without respiration gating.
BinSelection select_all(RawDataset const &raw, int phases);

UndersamplingReport undersampling_report(RawDataset const &raw, BinSelection const &bins);

void to_json(nlohmann::json &j, StateMap const &m);
void from_json(nlohmann::json const &j, StateMap &m);
void to_json(nlohmann::json &j, BinSelection const &b);
void from_json(nlohmann::json const &j, BinSelection &b);

} // namespace respnav
