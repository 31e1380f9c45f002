#include "rbl/scheme.hpp"

#include <algorithm>
#include <set>

namespace rbl {

std::optional<ColorId> Scheme::color_id(std::string_view name) const {
  for (size_t i = 0; i < colors.size(); ++i)
    if (colors[i] == name) return static_cast<ColorId>(i);
  return std::nullopt;
}

std::optional<PortTypeId> Scheme::port_type_id(std::string_view name) const {
  for (size_t i = 0; i < port_types.size(); ++i)
    if (port_types[i].name == name) return static_cast<PortTypeId>(i);
  return std::nullopt;
}

std::optional<AtomTypeId> Scheme::atom_type_id(std::string_view name) const {
  for (size_t i = 0; i < atoms.size(); ++i)
    if (atoms[i].name == name) return static_cast<AtomTypeId>(i);
  return std::nullopt;
}

bool Scheme::is_pooled(AtomTypeId t) const {
  return std::find(pooled.begin(), pooled.end(), t) != pooled.end();
}

ColorId Scheme::add_color(const std::string& name) {
  if (auto id = color_id(name)) return *id;
  colors.push_back(name);
  return static_cast<ColorId>(colors.size() - 1);
}

PortTypeId Scheme::add_port_type(PortType pt) {
  port_types.push_back(std::move(pt));
  return static_cast<PortTypeId>(port_types.size() - 1);
}

AtomTypeId Scheme::add_atom_type(AtomType a) {
  atoms.push_back(std::move(a));
  return static_cast<AtomTypeId>(atoms.size() - 1);
}

double atom_energy(const AtomType& a, const StateVector& v) {
  if (v.size() != a.ports.size())
    throw MalformedInput("atom_energy: vector arity " + std::to_string(v.size()) +
                         " does not match atom '" + a.name + "' with " +
                         std::to_string(a.ports.size()) + " ports");
  return a.energy.energy(v);
}

namespace {

void diag(Diagnostics& out, std::string msg) {
  out.push_back({Severity::Error, std::move(msg), {}, {}});
}

}  // namespace

Diagnostics validate_scheme(const Scheme& s) {
  Diagnostics out;

  std::set<std::string> seen;
  for (const auto& c : s.colors)
    if (!seen.insert(c).second) diag(out, "duplicate color '" + c + "'");

  seen.clear();
  for (const auto& pt : s.port_types) {
    if (!seen.insert(pt.name).second)
      diag(out, "duplicate port type '" + pt.name + "'");
    if (pt.colors.empty())
      diag(out, "port type '" + pt.name + "' has no colors");
    std::set<ColorId> cs;
    for (ColorId c : pt.colors) {
      if (c >= s.colors.size())
        diag(out, "port type '" + pt.name + "' references undeclared color");
      else if (!cs.insert(c).second)
        diag(out, "port type '" + pt.name + "' repeats color '" + s.colors[c] + "'");
    }
  }

  seen.clear();
  for (const auto& a : s.atoms) {
    if (!seen.insert(a.name).second) diag(out, "duplicate atom type '" + a.name + "'");
    std::set<std::string> labels;
    for (const auto& p : a.ports) {
      if (!labels.insert(p.label).second)
        diag(out, "atom '" + a.name + "' repeats port label '" + p.label + "'");
      if (p.type >= s.port_types.size())
        diag(out, "atom '" + a.name + "' port '" + p.label +
                      "' references undeclared port type");
    }
    for (const auto& [vec, cost] : a.energy.rows()) {
      if (vec.size() != a.ports.size()) {
        diag(out, "atom '" + a.name + "' lists a vector of arity " +
                      std::to_string(vec.size()) + ", expected " +
                      std::to_string(a.ports.size()));
        continue;
      }
      if (cost < 0)
        diag(out, "atom '" + a.name + "' lists a negative energy");
      for (size_t i = 0; i < vec.size(); ++i) {
        if (!is_bound(vec[i])) continue;
        if (a.ports[i].type >= s.port_types.size()) continue;  // reported above
        const PortType& pt = s.port_types[a.ports[i].type];
        if (!pt.admits(state_color(vec[i])))
          diag(out, "atom '" + a.name + "' lists an illegal color on port '" +
                        a.ports[i].label + "'");
      }
    }
  }

  std::set<AtomTypeId> pooled_seen;
  for (AtomTypeId t : s.pooled) {
    if (t >= s.atoms.size()) {
      diag(out, "pooled flag references undeclared atom type");
      continue;
    }
    if (!pooled_seen.insert(t).second) {
      diag(out, "atom '" + s.atoms[t].name + "' pooled twice");
      continue;
    }
    if (free_states(s, t).empty())
      diag(out, "pooled atom '" + s.atoms[t].name +
                    "' has no finite-energy free-monomer state");
  }

  return out;
}

namespace {

// Greedy self-pairing of the bound ports of `vec`; returns false if some
// bound port cannot be paired.
bool greedy_loops(const Scheme& s, const AtomType& a, const StateVector& vec,
                  std::vector<FreeState::Loop>& loops) {
  std::vector<bool> used(vec.size(), false);
  for (uint32_t i = 0; i < vec.size(); ++i) {
    if (!is_bound(vec[i]) || used[i]) continue;
    if (a.ports[i].orientation != Orientation::Out) continue;
    bool paired = false;
    for (uint32_t j = 0; j < vec.size(); ++j) {
      if (j == i || used[j] || !is_bound(vec[j])) continue;
      if (a.ports[j].orientation != Orientation::In) continue;
      if (a.ports[j].type != a.ports[i].type) continue;
      if (vec[j] != vec[i]) continue;
      loops.push_back({i, j, state_color(vec[i])});
      used[i] = used[j] = true;
      paired = true;
      break;
    }
    if (!paired) return false;
  }
  for (uint32_t i = 0; i < vec.size(); ++i)
    if (is_bound(vec[i]) && !used[i]) return false;
  (void)s;
  return true;
}

}  // namespace

std::vector<FreeState> free_states(const Scheme& s, AtomTypeId t) {
  std::vector<FreeState> out;
  if (t >= s.atoms.size()) return out;
  const AtomType& a = s.atoms[t];
  for (const auto& [vec, cost] : a.energy.rows()) {
    if (vec.size() != a.ports.size()) continue;
    (void)cost;
    std::vector<FreeState::Loop> loops;
    if (greedy_loops(s, a, vec, loops)) out.push_back({vec, std::move(loops)});
  }
  std::sort(out.begin(), out.end(),
            [](const FreeState& x, const FreeState& y) { return x.vec < y.vec; });
  return out;
}

}  // namespace rbl
