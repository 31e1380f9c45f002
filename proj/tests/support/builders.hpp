#pragma once

// Programmatic schemes shared across the unit tests.

#include <initializer_list>
#include <string_view>

#include "rbl/config.hpp"
#include "rbl/scheme.hpp"

namespace rbl::testing {

// Builds a state vector from color names; "-" means unbound.
inline StateVector sv(const Scheme& s,
                      std::initializer_list<std::string_view> states) {
  StateVector v;
  for (auto st : states) {
    if (st == "-") {
      v.push_back(kUnbound);
      continue;
    }
    auto id = s.color_id(st);
    if (!id) throw MalformedInput("builders: unknown color " + std::string(st));
    v.push_back(bound_state(*id));
  }
  return v;
}

inline void allow(AtomType& a, const Scheme& s,
                  std::initializer_list<std::string_view> states,
                  double cost = 0.0) {
  a.energy.allow(sv(s, states), cost);
}

// Fills loops from the free-state catalog; throws if vec is not free.
inline PoolEntry make_pool(const Scheme& s, std::string alias, AtomTypeId t,
                           const StateVector& vec, double conc = 1.0,
                           int64_t count = -1) {
  for (const FreeState& f : free_states(s, t)) {
    if (f.vec == vec) {
      PoolEntry p;
      p.alias = std::move(alias);
      p.type = t;
      p.free_vec = vec;
      p.loops = f.loops;
      p.conc = conc;
      p.count = count;
      return p;
    }
  }
  throw MalformedInput("builders: vector is not a free state");
}

// Two-port chain atom N(o out, i in) over link colors {r, b}. Mixed-color
// vectors (r,b)/(b,r) are deliberately unlisted so move enumeration has
// something to reject.
inline Scheme chain_scheme() {
  Scheme s;
  ColorId r = s.add_color("r");
  ColorId b = s.add_color("b");
  s.add_port_type({"link", {r, b}});
  AtomType n;
  n.name = "N";
  n.ports = {{"o", 0, Orientation::Out}, {"i", 0, Orientation::In}};
  allow(n, s, {"-", "-"});
  allow(n, s, {"r", "-"});
  allow(n, s, {"b", "-"});
  allow(n, s, {"-", "r"});
  allow(n, s, {"-", "b"});
  allow(n, s, {"r", "r"});
  allow(n, s, {"b", "b"});
  s.add_atom_type(std::move(n));
  return s;
}

// Hook atom H(p out) plus pooled monomer M(c in hook, m1 out mono, m2 in
// mono). M's free state carries one m self-loop.
inline Scheme monomer_scheme() {
  Scheme s;
  ColorId h = s.add_color("h");
  ColorId m = s.add_color("m");
  s.add_port_type({"hook", {h}});
  s.add_port_type({"mono", {m}});
  AtomType ha;
  ha.name = "H";
  ha.ports = {{"p", 0, Orientation::Out}};
  allow(ha, s, {"-"}, 0.0);
  allow(ha, s, {"h"}, 0.0);
  s.add_atom_type(std::move(ha));
  AtomType ma;
  ma.name = "M";
  ma.ports = {{"c", 0, Orientation::In},
              {"m1", 1, Orientation::Out},
              {"m2", 1, Orientation::In}};
  allow(ma, s, {"-", "m", "m"}, 0.0);  // free monomer
  allow(ma, s, {"h", "m", "m"}, 0.0);  // just drawn
  allow(ma, s, {"h", "-", "-"}, 0.0);  // loop opened
  s.add_atom_type(std::move(ma));
  s.pooled.push_back(1);
  return s;
}

}  // namespace rbl::testing
