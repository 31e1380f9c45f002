#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbl/scheme.hpp"

namespace rbl {

using InstanceId = uint32_t;

struct PortRef {
  InstanceId inst = 0;
  uint32_t port = 0;

  friend bool operator==(const PortRef&, const PortRef&) = default;
  friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

struct Bond {
  PortRef from;  // an out port
  PortRef to;    // an in port
  ColorId color = 0;

  friend bool operator==(const Bond&, const Bond&) = default;
  friend auto operator<=>(const Bond&, const Bond&) = default;
};

// One pooled species: an atom type in a specific free state, with either a
// fixed concentration (chemostatted) or a finite count.
struct PoolEntry {
  std::string alias;  // display name only; not part of structural identity
  AtomTypeId type = 0;
  StateVector free_vec;
  std::vector<FreeState::Loop> loops;  // canonical self-loops for free_vec
  double conc = 0.0;
  int64_t count = -1;  // >= 0 selects finite-count mode

  bool finite() const { return count >= 0; }
  bool available() const { return finite() ? count > 0 : conc > 0.0; }

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

struct SystemConfiguration {
  const Scheme* scheme = nullptr;
  std::vector<AtomTypeId> instances;  // index is the InstanceId
  std::vector<std::string> names;     // parallel to instances
  std::vector<Bond> bonds;            // kept sorted
  std::vector<PoolEntry> pools;
  uint64_t name_counter = 0;  // source of fresh names for drawn instances

  InstanceId add_instance(AtomTypeId t, std::string name = {});
  void add_bond(Bond b);  // keeps bonds sorted

  // Derived port-state vectors, one per instance. Throws MalformedInput if a
  // bond is inconsistent (bad port index, double-bonded port, orientation or
  // port-type violation, illegal color).
  std::vector<StateVector> port_states() const;

  int find_instance(std::string_view name) const;  // -1 if absent
  int find_pool(std::string_view alias) const;     // -1 if absent
  int find_pool(AtomTypeId t, const StateVector& v) const;

  friend bool operator==(const SystemConfiguration&,
                         const SystemConfiguration&) = default;
};

// Sum of per-instance energies; infinite if any instance's vector is
// unlisted. Throws MalformedInput on structural inconsistency.
double config_energy(const SystemConfiguration& c);

// Patterns over port states: "_" any, "-" unbound, or one specific color.
struct PortPattern {
  enum class Kind : uint8_t { Any, Unbound, Bound };
  Kind kind = Kind::Any;
  ColorId color = 0;  // Bound only

  bool matches(PortState s) const {
    switch (kind) {
      case Kind::Any: return true;
      case Kind::Unbound: return !is_bound(s);
      case Kind::Bound: return is_bound(s) && state_color(s) == color;
    }
    return false;
  }

  friend bool operator==(const PortPattern&, const PortPattern&) = default;
};

struct StatePattern {
  AtomTypeId type = 0;
  std::vector<PortPattern> ports;

  bool matches(const StateVector& v) const {
    if (v.size() != ports.size()) return false;
    for (size_t i = 0; i < v.size(); ++i)
      if (!ports[i].matches(v[i])) return false;
    return true;
  }

  // True when some instance of the pattern's atom type matches.
  bool matched_by(const SystemConfiguration& c,
                  const std::vector<StateVector>& vecs) const;

  friend bool operator==(const StatePattern&, const StatePattern&) = default;
};

inline bool config_valid(const SystemConfiguration& c) {
  return config_energy(c) != kInfiniteEnergy;
}

}  // namespace rbl
