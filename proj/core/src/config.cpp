#include "rbl/config.hpp"

#include <algorithm>

namespace rbl {

InstanceId SystemConfiguration::add_instance(AtomTypeId t, std::string name) {
  instances.push_back(t);
  if (name.empty()) name = "#" + std::to_string(name_counter++);
  names.push_back(std::move(name));
  return static_cast<InstanceId>(instances.size() - 1);
}

void SystemConfiguration::add_bond(Bond b) {
  auto it = std::lower_bound(bonds.begin(), bonds.end(), b);
  bonds.insert(it, b);
}

std::vector<StateVector> SystemConfiguration::port_states() const {
  if (!scheme) throw MalformedInput("configuration has no scheme");
  std::vector<StateVector> out(instances.size());
  for (size_t i = 0; i < instances.size(); ++i) {
    if (instances[i] >= scheme->atoms.size())
      throw MalformedInput("instance references undeclared atom type");
    out[i].assign(scheme->atoms[instances[i]].ports.size(), kUnbound);
  }
  auto touch = [&](const PortRef& r, Orientation want, ColorId color,
                   const PortType*& pt_out) {
    if (r.inst >= instances.size())
      throw MalformedInput("bond references missing instance");
    const AtomType& a = scheme->atoms[instances[r.inst]];
    if (r.port >= a.ports.size())
      throw MalformedInput("bond references missing port on atom '" + a.name + "'");
    const PortDecl& p = a.ports[r.port];
    if (p.orientation != want)
      throw MalformedInput("bond endpoint '" + a.name + "." + p.label +
                           "' has the wrong orientation");
    if (out[r.inst][r.port] != kUnbound)
      throw MalformedInput("port '" + a.name + "." + p.label + "' bonded twice");
    if (p.type >= scheme->port_types.size())
      throw MalformedInput("port '" + a.name + "." + p.label +
                           "' references undeclared port type");
    const PortType& pt = scheme->port_types[p.type];
    if (!pt.admits(color))
      throw MalformedInput("color illegal for port '" + a.name + "." + p.label + "'");
    out[r.inst][r.port] = bound_state(color);
    pt_out = &pt;
  };
  for (const Bond& b : bonds) {
    const PortType* from_pt = nullptr;
    const PortType* to_pt = nullptr;
    touch(b.from, Orientation::Out, b.color, from_pt);
    touch(b.to, Orientation::In, b.color, to_pt);
    if (from_pt != to_pt)
      throw MalformedInput("bond joins ports of different port types");
  }
  return out;
}

int SystemConfiguration::find_instance(std::string_view name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

int SystemConfiguration::find_pool(std::string_view alias) const {
  for (size_t i = 0; i < pools.size(); ++i)
    if (pools[i].alias == alias) return static_cast<int>(i);
  return -1;
}

int SystemConfiguration::find_pool(AtomTypeId t, const StateVector& v) const {
  for (size_t i = 0; i < pools.size(); ++i)
    if (pools[i].type == t && pools[i].free_vec == v) return static_cast<int>(i);
  return -1;
}

bool StatePattern::matched_by(const SystemConfiguration& c,
                              const std::vector<StateVector>& vecs) const {
  for (size_t i = 0; i < c.instances.size(); ++i)
    if (c.instances[i] == type && matches(vecs[i])) return true;
  return false;
}

double config_energy(const SystemConfiguration& c) {
  auto vecs = c.port_states();
  double total = 0.0;
  for (size_t i = 0; i < vecs.size(); ++i) {
    double e = c.scheme->atoms[c.instances[i]].energy.energy(vecs[i]);
    if (e == kInfiniteEnergy) return kInfiniteEnergy;
    total += e;
  }
  return total;
}

}  // namespace rbl
