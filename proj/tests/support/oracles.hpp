#pragma once

// Brute-force reference implementations the fast code is tested against.
// Exponential or quadratic on purpose; only run on small configurations.

#include <set>
#include <vector>

#include "rbl/config.hpp"
#include "rbl/moves.hpp"

namespace rbl::testing {

// Every valid configuration one bond event away (form, break or recolor over
// the same instance set). Pool moves are out of scope: pair this with
// pool-free configurations when cross-checking legal_moves.
inline std::vector<SystemConfiguration> bruteforce_neighbors(
    const SystemConfiguration& c) {
  const Scheme& s = *c.scheme;
  std::vector<SystemConfiguration> out;
  auto keep_if_valid = [&](SystemConfiguration n) {
    try {
      if (config_valid(n)) out.push_back(std::move(n));
    } catch (const MalformedInput&) {
    }
  };

  // Breaks.
  for (size_t k = 0; k < c.bonds.size(); ++k) {
    SystemConfiguration n = c;
    n.bonds.erase(n.bonds.begin() + k);
    keep_if_valid(std::move(n));
  }
  // Recolors.
  for (size_t k = 0; k < c.bonds.size(); ++k) {
    const Bond& b = c.bonds[k];
    const PortType& pt =
        s.port_types[s.atoms[c.instances[b.from.inst]].ports[b.from.port].type];
    for (ColorId col : pt.colors) {
      if (col == b.color) continue;
      SystemConfiguration n = c;
      n.bonds.erase(n.bonds.begin() + k);
      n.add_bond({b.from, b.to, col});
      keep_if_valid(std::move(n));
    }
  }
  // Forms.
  auto vecs = c.port_states();
  for (InstanceId i = 0; i < c.instances.size(); ++i) {
    const AtomType& ai = s.atoms[c.instances[i]];
    for (uint32_t p = 0; p < ai.ports.size(); ++p) {
      if (ai.ports[p].orientation != Orientation::Out || is_bound(vecs[i][p]))
        continue;
      for (InstanceId j = 0; j < c.instances.size(); ++j) {
        const AtomType& aj = s.atoms[c.instances[j]];
        for (uint32_t q = 0; q < aj.ports.size(); ++q) {
          if (aj.ports[q].orientation != Orientation::In || is_bound(vecs[j][q]))
            continue;
          if (aj.ports[q].type != ai.ports[p].type) continue;
          for (ColorId col : s.port_types[ai.ports[p].type].colors) {
            SystemConfiguration n = c;
            n.add_bond({{i, p}, {j, q}, col});
            keep_if_valid(std::move(n));
          }
        }
      }
    }
  }
  return out;
}

// Bond sets of a configuration list, as a comparable set.
inline std::set<std::vector<Bond>> bond_sets(
    const std::vector<SystemConfiguration>& cs) {
  std::set<std::vector<Bond>> out;
  for (const auto& c : cs) out.insert(c.bonds);
  return out;
}

}  // namespace rbl::testing
