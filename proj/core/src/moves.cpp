#include "rbl/moves.hpp"

#include <algorithm>
#include <iterator>

namespace rbl {

const char* move_kind_name(MoveKind k) {
  switch (k) {
    case MoveKind::Form: return "form";
    case MoveKind::Break: return "break";
    case MoveKind::Recolor: return "recolor";
    case MoveKind::Draw: return "draw";
    case MoveKind::Return: return "return";
  }
  return "?";
}

MoveKind inverse_kind(MoveKind k) {
  switch (k) {
    case MoveKind::Form: return MoveKind::Break;
    case MoveKind::Break: return MoveKind::Form;
    case MoveKind::Recolor: return MoveKind::Recolor;
    case MoveKind::Draw: return MoveKind::Return;
    case MoveKind::Return: return MoveKind::Draw;
  }
  return k;
}

namespace {

struct Enumerator {
  const SystemConfiguration& c;
  const Scheme& s;
  std::vector<StateVector> vecs;
  std::vector<Move> out;

  explicit Enumerator(const SystemConfiguration& cfg)
      : c(cfg), s(*cfg.scheme), vecs(cfg.port_states()) {}

  const AtomType& atom(InstanceId i) const { return s.atoms[c.instances[i]]; }

  bool listed(InstanceId i, const StateVector& v) const {
    return atom(i).energy.listed(v);
  }

  // Checks the move that rebinds `a` to state `sa` and `b` to `sb` (same
  // instance allowed; then sb is applied on top of sa's copy).
  bool both_listed(PortRef a, PortState sa, PortRef b, PortState sb) const {
    if (a.inst == b.inst) {
      StateVector v = vecs[a.inst];
      v[a.port] = sa;
      v[b.port] = sb;
      return listed(a.inst, v);
    }
    StateVector va = vecs[a.inst];
    va[a.port] = sa;
    if (!listed(a.inst, va)) return false;
    StateVector vb = vecs[b.inst];
    vb[b.port] = sb;
    return listed(b.inst, vb);
  }

  void forms() {
    for (InstanceId i = 0; i < c.instances.size(); ++i) {
      const AtomType& ai = atom(i);
      for (uint32_t p = 0; p < ai.ports.size(); ++p) {
        if (ai.ports[p].orientation != Orientation::Out) continue;
        if (is_bound(vecs[i][p])) continue;
        const PortTypeId pt = ai.ports[p].type;
        for (InstanceId j = 0; j < c.instances.size(); ++j) {
          const AtomType& aj = atom(j);
          for (uint32_t q = 0; q < aj.ports.size(); ++q) {
            if (aj.ports[q].orientation != Orientation::In) continue;
            if (is_bound(vecs[j][q])) continue;
            if (aj.ports[q].type != pt) continue;
            if (i == j && p == q) continue;  // cannot pair a port with itself
            for (ColorId col : s.port_types[pt].colors) {
              if (both_listed({i, p}, bound_state(col), {j, q}, bound_state(col)))
                out.push_back({MoveKind::Form, {i, p}, {j, q}, col, 0, 0, 0});
            }
          }
        }
      }
    }
  }

  // Degree of `i` counting bonds to other instances, ignoring bond `skip`.
  bool disconnected_without(InstanceId i, const Bond& skip) const {
    for (const Bond& b : c.bonds) {
      if (b == skip) continue;
      if ((b.from.inst == i) != (b.to.inst == i)) return false;  // external bond
    }
    return true;
  }

  // After deleting `skip`, does instance `i` sit exactly in pool species k?
  int returnable_to(InstanceId i, const Bond& skip) const {
    if (!disconnected_without(i, skip)) return -1;
    StateVector v = vecs[i];
    if (skip.from.inst == i) v[skip.from.port] = kUnbound;
    if (skip.to.inst == i) v[skip.to.port] = kUnbound;
    for (size_t k = 0; k < c.pools.size(); ++k) {
      const PoolEntry& pe = c.pools[k];
      if (pe.type != c.instances[i] || pe.free_vec != v) continue;
      // Remaining bonds must be exactly the species' canonical loops.
      std::vector<Bond> left;
      for (const Bond& b : c.bonds)
        if (!(b == skip) && (b.from.inst == i || b.to.inst == i)) left.push_back(b);
      std::vector<Bond> want;
      want.reserve(pe.loops.size());
      for (const auto& lp : pe.loops)
        want.push_back({{i, lp.out_port}, {i, lp.in_port}, lp.color});
      std::sort(want.begin(), want.end());
      if (left == want) return static_cast<int>(k);
    }
    return -1;
  }

  void breaks_and_returns() {
    for (const Bond& b : c.bonds) {
      PortState zero = kUnbound;
      if (!both_listed(b.from, zero, b.to, zero)) {
        // The bare break is invalid; a return can still be legal because the
        // removed instance leaves the configuration entirely.
        int kt = returnable_to(b.to.inst, b);
        if (kt >= 0 && (b.from.inst == b.to.inst ||
                        listed_without(b.from, b))) {
          out.push_back({MoveKind::Return, b.from, b.to, b.color, 0,
                         static_cast<uint32_t>(kt), b.to.inst});
        }
        if (b.from.inst != b.to.inst) {
          int kf = returnable_to(b.from.inst, b);
          if (kf >= 0 && listed_without(b.to, b))
            out.push_back({MoveKind::Return, b.from, b.to, b.color, 0,
                           static_cast<uint32_t>(kf), b.from.inst});
        }
        continue;
      }
      int kt = returnable_to(b.to.inst, b);
      int kf = (b.from.inst != b.to.inst) ? returnable_to(b.from.inst, b) : -1;
      if (kt < 0 && kf < 0) {
        out.push_back({MoveKind::Break, b.from, b.to, b.color, 0, 0, 0});
        continue;
      }
      if (kt >= 0)
        out.push_back({MoveKind::Return, b.from, b.to, b.color, 0,
                       static_cast<uint32_t>(kt), b.to.inst});
      if (kf >= 0)
        out.push_back({MoveKind::Return, b.from, b.to, b.color, 0,
                       static_cast<uint32_t>(kf), b.from.inst});
    }
  }

  // Is the surviving endpoint's vector listed once `skip` is deleted?
  bool listed_without(PortRef r, const Bond& skip) const {
    StateVector v = vecs[r.inst];
    if (skip.from.inst == r.inst) v[skip.from.port] = kUnbound;
    if (skip.to.inst == r.inst) v[skip.to.port] = kUnbound;
    return listed(r.inst, v);
  }

  void recolors() {
    for (const Bond& b : c.bonds) {
      const PortTypeId pt = atom(b.from.inst).ports[b.from.port].type;
      for (ColorId col : s.port_types[pt].colors) {
        if (col == b.color) continue;
        if (both_listed(b.from, bound_state(col), b.to, bound_state(col)))
          out.push_back({MoveKind::Recolor, b.from, b.to, col, b.color, 0, 0});
      }
    }
  }

  void draws() {
    const InstanceId fresh = static_cast<InstanceId>(c.instances.size());
    for (uint32_t k = 0; k < c.pools.size(); ++k) {
      const PoolEntry& pe = c.pools[k];
      if (!pe.available()) continue;
      const AtomType& na = s.atoms[pe.type];
      for (InstanceId i = 0; i < c.instances.size(); ++i) {
        const AtomType& ai = atom(i);
        for (uint32_t p = 0; p < ai.ports.size(); ++p) {
          if (is_bound(vecs[i][p])) continue;
          for (uint32_t q = 0; q < na.ports.size(); ++q) {
            if (is_bound(pe.free_vec[q])) continue;
            if (na.ports[q].type != ai.ports[p].type) continue;
            bool existing_out = ai.ports[p].orientation == Orientation::Out;
            if (existing_out == (na.ports[q].orientation == Orientation::Out))
              continue;
            for (ColorId col : s.port_types[ai.ports[p].type].colors) {
              StateVector ve = vecs[i];
              ve[p] = bound_state(col);
              if (!listed(i, ve)) continue;
              StateVector vn = pe.free_vec;
              vn[q] = bound_state(col);
              if (!na.energy.listed(vn)) continue;
              Move m;
              m.kind = MoveKind::Draw;
              m.pool = k;
              if (existing_out) {
                m.from = {i, p};
                m.to = {fresh, q};
              } else {
                m.from = {fresh, q};
                m.to = {i, p};
              }
              m.color = col;
              out.push_back(m);
            }
          }
        }
      }
    }
  }
};

}  // namespace

std::vector<Move> legal_moves(const SystemConfiguration& c) {
  Enumerator e(c);
  e.forms();
  e.breaks_and_returns();
  e.recolors();
  e.draws();
  return std::move(e.out);
}

SystemConfiguration apply_move(const SystemConfiguration& c, const Move& m) {
  SystemConfiguration n = c;
  switch (m.kind) {
    case MoveKind::Form:
      n.add_bond({m.from, m.to, m.color});
      break;
    case MoveKind::Break: {
      Bond b{m.from, m.to, m.color};
      auto it = std::find(n.bonds.begin(), n.bonds.end(), b);
      if (it == n.bonds.end()) throw MalformedInput("break: no such bond");
      n.bonds.erase(it);
      break;
    }
    case MoveKind::Recolor: {
      Bond b{m.from, m.to, m.prev_color};
      auto it = std::find(n.bonds.begin(), n.bonds.end(), b);
      if (it == n.bonds.end()) throw MalformedInput("recolor: no such bond");
      n.bonds.erase(it);
      n.add_bond({m.from, m.to, m.color});
      break;
    }
    case MoveKind::Draw: {
      const PoolEntry& pe = n.pools[m.pool];
      InstanceId id = n.add_instance(pe.type, pe.alias + "#" +
                                                  std::to_string(n.name_counter++));
      for (const auto& lp : pe.loops)
        n.add_bond({{id, lp.out_port}, {id, lp.in_port}, lp.color});
      n.add_bond({m.from, m.to, m.color});
      if (pe.finite()) --n.pools[m.pool].count;
      break;
    }
    case MoveKind::Return: {
      Bond b{m.from, m.to, m.color};
      auto it = std::find(n.bonds.begin(), n.bonds.end(), b);
      if (it == n.bonds.end()) throw MalformedInput("return: no such bond");
      n.bonds.erase(it);
      const InstanceId dead = m.removed;
      std::vector<Bond> kept;
      kept.reserve(n.bonds.size());
      for (Bond x : n.bonds) {
        if (x.from.inst == dead || x.to.inst == dead) continue;  // its loops
        if (x.from.inst > dead) --x.from.inst;
        if (x.to.inst > dead) --x.to.inst;
        kept.push_back(x);
      }
      std::sort(kept.begin(), kept.end());
      n.bonds = std::move(kept);
      n.instances.erase(n.instances.begin() + dead);
      n.names.erase(n.names.begin() + dead);
      if (n.pools[m.pool].finite()) ++n.pools[m.pool].count;
      break;
    }
  }
  return n;
}

double move_energy_delta(const SystemConfiguration& c,
                         const std::vector<StateVector>& vecs, const Move& m) {
  const Scheme& s = *c.scheme;
  auto energy_of = [&](InstanceId i, const StateVector& v) {
    return s.atoms[c.instances[i]].energy.energy(v);
  };
  switch (m.kind) {
    case MoveKind::Form:
    case MoveKind::Break:
    case MoveKind::Recolor: {
      PortState sf, st;
      if (m.kind == MoveKind::Form || m.kind == MoveKind::Recolor) {
        sf = st = bound_state(m.color);
      } else {
        sf = st = kUnbound;
      }
      if (m.from.inst == m.to.inst) {
        StateVector v = vecs[m.from.inst];
        double before = energy_of(m.from.inst, v);
        v[m.from.port] = sf;
        v[m.to.port] = st;
        return energy_of(m.from.inst, v) - before;
      }
      StateVector vf = vecs[m.from.inst];
      StateVector vt = vecs[m.to.inst];
      double before = energy_of(m.from.inst, vf) + energy_of(m.to.inst, vt);
      vf[m.from.port] = sf;
      vt[m.to.port] = st;
      return energy_of(m.from.inst, vf) + energy_of(m.to.inst, vt) - before;
    }
    case MoveKind::Draw: {
      const PoolEntry& pe = c.pools[m.pool];
      bool fresh_is_from = m.from.inst >= c.instances.size();
      PortRef old = fresh_is_from ? m.to : m.from;
      uint32_t q = fresh_is_from ? m.from.port : m.to.port;
      StateVector vo = vecs[old.inst];
      double before = energy_of(old.inst, vo) +
                      s.atoms[pe.type].energy.energy(pe.free_vec);
      vo[old.port] = bound_state(m.color);
      StateVector vn = pe.free_vec;
      vn[q] = bound_state(m.color);
      return energy_of(old.inst, vo) + s.atoms[pe.type].energy.energy(vn) - before;
    }
    case MoveKind::Return: {
      const PoolEntry& pe = c.pools[m.pool];
      PortRef kept = m.removed == m.from.inst ? m.to : m.from;
      if (kept.inst == m.removed) {  // broken bond was a loop on the removed atom
        double before = energy_of(m.removed, vecs[m.removed]);
        return s.atoms[pe.type].energy.energy(pe.free_vec) - before;
      }
      StateVector vk = vecs[kept.inst];
      StateVector vr = vecs[m.removed];
      double before = energy_of(kept.inst, vk) + energy_of(m.removed, vr);
      vk[kept.port] = kUnbound;
      return energy_of(kept.inst, vk) +
             s.atoms[pe.type].energy.energy(pe.free_vec) - before;
    }
  }
  return 0.0;
}

bool adjacent(const SystemConfiguration& c1, const SystemConfiguration& c2) {
  if (c1.scheme != c2.scheme)
    throw MalformedInput("adjacent: configurations use different schemes");
  if (c1.instances != c2.instances)
    throw MalformedInput("adjacent: instance sets differ");
  {
    if (c1.pools.size() != c2.pools.size())
      throw MalformedInput("adjacent: pool keys differ");
    for (size_t i = 0; i < c1.pools.size(); ++i)
      if (c1.pools[i].type != c2.pools[i].type ||
          c1.pools[i].free_vec != c2.pools[i].free_vec)
        throw MalformedInput("adjacent: pool keys differ");
  }
  if (!config_valid(c1) || !config_valid(c2)) return false;
  std::vector<Bond> only1, only2;
  std::set_difference(c1.bonds.begin(), c1.bonds.end(), c2.bonds.begin(),
                      c2.bonds.end(), std::back_inserter(only1));
  std::set_difference(c2.bonds.begin(), c2.bonds.end(), c1.bonds.begin(),
                      c1.bonds.end(), std::back_inserter(only2));
  if (only1.size() == 1 && only2.size() == 1)
    return only1[0].from == only2[0].from && only1[0].to == only2[0].to &&
           only1[0].color != only2[0].color;
  return (only1.size() + only2.size()) == 1;
}

std::string describe_move(const SystemConfiguration& c, const Move& m) {
  const Scheme& s = *c.scheme;
  auto port_name = [&](PortRef r) -> std::string {
    if (r.inst < c.instances.size()) {
      const AtomType& a = s.atoms[c.instances[r.inst]];
      return c.names[r.inst] + "." + a.ports[r.port].label;
    }
    const PoolEntry& pe = c.pools[m.pool];
    return pe.alias + "(new)." + s.atoms[pe.type].ports[r.port].label;
  };
  std::string d = move_kind_name(m.kind);
  d += " " + port_name(m.from) + "->" + port_name(m.to);
  d += " :" + s.colors[m.color];
  if (m.kind == MoveKind::Recolor) d += " (was " + s.colors[m.prev_color] + ")";
  if (m.kind == MoveKind::Draw || m.kind == MoveKind::Return)
    d += " [" + c.pools[m.pool].alias + "]";
  return d;
}

}  // namespace rbl
