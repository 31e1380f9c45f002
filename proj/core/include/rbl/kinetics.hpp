#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbl/explore.hpp"
#include "rbl/moves.hpp"
#include "rbl/text_format.hpp"

namespace rbl {

// Splittable seed stream; advances state and returns the next 64-bit value.
uint64_t splitmix64_next(uint64_t& state);

struct RateConstants {
  double k1 = 1.0;  // unimolecular, 1/time
  double k2 = 1.0;  // bimolecular, 1/(conc*time)
};

struct SimParams {
  RateConstants rates{};
  double t_max = 1.0;
  uint64_t seed = 0;
  double volume = 1.0;     // converts finite pool counts to concentrations
  uint64_t max_events = 0;  // safety cap; 0 = unlimited

  bool record_events = true;  // full event log (needed to write a trace file)
  bool record_visits = false;  // per-canonical-state entry counts and times
  std::vector<double> checkpoints;  // times to sample observer positions
};

struct TraceEvent {
  double t = 0;
  MoveKind kind = MoveKind::Form;
  int32_t pool = -1;  // pool entry index for draw/return
  double delta_e = 0;
  uint64_t state = 0;  // canonical digest of the configuration after the move
  Move move{};         // in-memory only; not serialized
  std::string label;
  std::vector<std::string> atoms;     // instance names the move touches
  std::vector<int64_t> pool_totals;   // cumulative returns minus draws
  std::vector<int> positions;         // unwrapped, one per observer
  int par = 0;  // width of the matched parallel region after the move, 0=none
};

struct VisitStat {
  int64_t entries = 0;
  double time = 0;
};

struct SimTrace {
  RateConstants rates{};
  double t_max = 0;
  uint64_t seed = 0;
  std::vector<std::string> observers;
  std::vector<std::string> pools;   // aliases, index-parallel to pool columns
  std::vector<double> pool_concs;   // effective concentrations at t = 0
  std::optional<FuelDecl> fuel;

  std::vector<int> initial_positions;
  uint64_t initial_state = 0;  // canonical digest of the starting configuration
  std::vector<TraceEvent> events;  // empty unless record_events
  uint64_t event_count = 0;
  bool stalled = false;       // no enabled move before t_max
  bool event_capped = false;  // max_events cut the run short
  double end_time = 0;

  std::vector<int> final_positions;
  std::vector<int64_t> final_pool_totals;
  uint64_t position_changes = 0;

  std::vector<double> checkpoints;
  std::vector<std::vector<int>> checkpoint_positions;  // [observer][checkpoint]
  std::map<uint64_t, VisitStat> visits;  // canonical digest -> stats

  SystemConfiguration final_config;  // in-memory only
};

// Exact stochastic simulation: propensity k1 for unimolecular moves (breaks,
// recolors, forms, pool returns), k2 * [pool] for draws, and every move into
// higher energy scaled by exp(-dE). Deterministic for a given seed: the
// trajectory's generator is seeded with the first value of the splitmix64
// stream over params.seed, so simulate(b, p) reproduces ensemble member 0.
SimTrace simulate(const ConfigBundle& b, const SimParams& p);

// Independent trajectories; member i takes the i-th splitmix64 stream value
// as its generator seed, so results do not depend on the worker count.
std::vector<SimTrace> simulate_ensemble(const ConfigBundle& b,
                                        const SimParams& p, std::size_t count,
                                        unsigned jobs = 1);

// Trace files are JSON lines: a metadata object, then one object per event.
// Several traces may be concatenated in one stream. Reading restores the
// statistics columns (not the in-memory moves or final configuration).
void write_trace(const SimTrace& t, std::ostream& out);
std::vector<SimTrace> read_traces(std::istream& in);

// Observer plumbing, shared by the simulator and the analytical reduction.
struct ObserverBinding {
  int subject = -1;
  std::vector<uint32_t> ports;  // port indices on the subject's atom type
  std::vector<InstanceId> track;
  int cycle = 0;
};

// Resolves names against c; throws MalformedInput when anything is missing.
ObserverBinding bind_observer(const SystemConfiguration& c,
                              const PositionObserver& o);

// Track slot the first listed bound port points at, or -1 when none do.
int raw_position(const SystemConfiguration& c, const ObserverBinding& b);

// Lifts a raw slot onto the winding line: the value congruent to raw that
// is nearest prev (ties round forward). cycle <= 0 returns raw unchanged.
int unwrap_position(int prev, int raw, int cycle);

// Unwrapped position of observer `obs` at `time` (needs recorded events).
int position_at(const SimTrace& t, std::size_t obs, double time);

// The two unit conventions for the fueled walker's drift. `bias` is the
// dimensionless (g+ - g-)/(g+ + g-); `per_hop` is k2 * (g+ - g-), the net
// rate of the reduced hop chain whose forward and backward rates are
// k2*[G+] and k2*[G-]. The reduced chain abstracts a whole step corridor
// into one transition, so per_hop overstates the full model's drift by the
// corridor's splitting factor; reduce_drift computes the exact value.
struct DriftPrediction {
  double bias = 0;
  double per_hop = 0;
};
DriftPrediction predicted_drift(const RateConstants& r, double g_plus,
                                double g_minus);

// Exact CTMC reduction of an explored graph: stationary distribution under
// the simulator's propensity rule and the net position current through the
// observer. drift is in track slots per unit time; fwd_flux and bwd_flux
// split the current into its one-way components. diffusion is the exact
// asymptotic Var(position)/t from the chain's central limit theorem; the
// naive two-way flux sum overstates it badly when position flips back and
// forth inside one step corridor, so use diffusion for error bars.
// Requires every canonical state to determine its track slot: a ring of
// indistinguishable monomers collapses windings and is out of scope.
struct DriftReduction {
  std::vector<double> pi;
  std::vector<double> exit_rate;
  double drift = 0;
  double fwd_flux = 0;
  double bwd_flux = 0;
  double diffusion = 0;
};
DriftReduction reduce_drift(const TransitionGraph& g,
                            const PositionObserver& obs,
                            const RateConstants& rates, double volume = 1.0);

// Histogram of elementary transitions per net step. A segment runs between
// consecutive arrivals in rest states (every pool return is an arrival;
// same-position arrivals reset the segment, a new position closes it). The
// in-between excursion is loop-erased as cycles close, so the count is the
// net mechanism path, not the dithering around it; a maximal run of L
// consecutive path events inside a declared parallel region of width w then
// counts as ceil(L/w). Needs recorded events.
std::map<int, int64_t> steps_per_transition(const SimTrace& t,
                                            std::size_t obs = 0);

struct WalkerStats {
  double mean_displacement = 0;
  double displacement_std = 0;
  int64_t steps_observed = 0;  // total recorded position changes
  double predicted_drift_rate = 0;  // per_hop convention from trace metadata
  double duration = 0;              // mean trace end time
  std::size_t n = 0;
  double z = 0;  // mean displacement against predicted * duration
};
WalkerStats walker_stats(std::span<const SimTrace> traces,
                         std::size_t obs = 0);

struct FuelStats {
  int64_t consumed = 0;  // net draw-species units removed from the pool
  int64_t produced = 0;  // net return-species units added
  std::size_t n = 0;
  double duration = 0;  // summed trace end times
  double rate = 0;      // consumed per unit time
};
FuelStats fuel_stats(std::span<const SimTrace> traces);

}  // namespace rbl
