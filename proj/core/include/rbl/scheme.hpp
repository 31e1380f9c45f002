#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rbl/diag.hpp"

namespace rbl {

using ColorId = uint32_t;
using PortTypeId = uint32_t;
using AtomTypeId = uint32_t;

// One port's state: 0 = unbound, otherwise color id + 1.
using PortState = uint32_t;
constexpr PortState kUnbound = 0;

inline PortState bound_state(ColorId c) { return c + 1; }
inline bool is_bound(PortState s) { return s != kUnbound; }
inline ColorId state_color(PortState s) { return s - 1; }

// Full port-state vector of one atom; arity equals the atom's port count.
using StateVector = std::vector<PortState>;

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

struct StateVectorHash {
  size_t operator()(const StateVector& v) const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (PortState s : v) {
      h ^= s;
      h *= 0x100000001b3ull;
    }
    return static_cast<size_t>(h);
  }
};

enum class Orientation : uint8_t { In, Out };

struct PortType {
  std::string name;
  std::vector<ColorId> colors;  // allowed bond colors, in declaration order

  bool admits(ColorId c) const {
    for (ColorId k : colors)
      if (k == c) return true;
    return false;
  }

  friend bool operator==(const PortType&, const PortType&) = default;
};

struct PortDecl {
  std::string label;
  PortTypeId type = 0;
  Orientation orientation = Orientation::In;

  friend bool operator==(const PortDecl&, const PortDecl&) = default;
};

// Allowlist of finite-energy port-state vectors; everything else is infinite.
class EnergyTable {
 public:
  void allow(StateVector v, double cost = 0.0) { rows_[std::move(v)] = cost; }

  double energy(const StateVector& v) const {
    auto it = rows_.find(v);
    return it == rows_.end() ? kInfiniteEnergy : it->second;
  }

  bool listed(const StateVector& v) const { return rows_.count(v) != 0; }
  size_t size() const { return rows_.size(); }

  const std::unordered_map<StateVector, double, StateVectorHash>& rows() const {
    return rows_;
  }

  friend bool operator==(const EnergyTable&, const EnergyTable&) = default;

 private:
  std::unordered_map<StateVector, double, StateVectorHash> rows_;
};

struct AtomType {
  std::string name;
  std::vector<PortDecl> ports;
  EnergyTable energy;

  int port_index(std::string_view label) const {
    for (size_t i = 0; i < ports.size(); ++i)
      if (ports[i].label == label) return static_cast<int>(i);
    return -1;
  }

  friend bool operator==(const AtomType&, const AtomType&) = default;
};

struct Scheme {
  std::vector<std::string> colors;
  std::vector<PortType> port_types;
  std::vector<AtomType> atoms;
  std::vector<AtomTypeId> pooled;  // atom types drawable from an environment pool

  friend bool operator==(const Scheme&, const Scheme&) = default;

  std::optional<ColorId> color_id(std::string_view name) const;
  std::optional<PortTypeId> port_type_id(std::string_view name) const;
  std::optional<AtomTypeId> atom_type_id(std::string_view name) const;
  bool is_pooled(AtomTypeId t) const;

  ColorId add_color(const std::string& name);
  PortTypeId add_port_type(PortType pt);
  AtomTypeId add_atom_type(AtomType a);
};

// Empty result means every Scheme/AtomType invariant holds.
Diagnostics validate_scheme(const Scheme& s);

// Table lookup with the infinite default. Throws MalformedInput on arity mismatch.
double atom_energy(const AtomType& a, const StateVector& v);

// A free (poolable) form of an atom type: a finite-energy vector whose bound
// ports pair up exactly into self-loops.
struct FreeState {
  StateVector vec;
  // Self-loop pairs (out port, in port, color), in out-port order.
  struct Loop {
    uint32_t out_port;
    uint32_t in_port;
    ColorId color;

    friend bool operator==(const Loop&, const Loop&) = default;
  };
  std::vector<Loop> loops;

  friend bool operator==(const FreeState&, const FreeState&) = default;
};

// All free states of an atom type, sorted by vector. Bound ports are paired
// into self-loops greedily (each out port takes the first compatible unbound
// in port); a vector qualifies if that pairing covers every bound port. The
// greedy pairing is the canonical loop structure used for pool draw/return.
std::vector<FreeState> free_states(const Scheme& s, AtomTypeId t);

}  // namespace rbl
