#include "rbl/text_format.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lexer.hpp"

namespace rbl {

using detail::Parser;
using detail::Tok;
using detail::Token;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Trim to the shortest spelling that parses back exactly.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::stod(shorter) == v) return shorter;
  }
  return buf;
}

// ---------------------------------------------------------------- schemes

struct RowEntry {
  enum class K { Unbound, Color, Wild } k = K::Unbound;
  ColorId color = 0;
};

struct PendingRow {
  std::vector<RowEntry> entries;
  double cost = 0.0;
  Span span;
};

struct SchemeParser : Parser {
  Scheme s;

  using Parser::Parser;

  void run() {
    while (!done()) {
      if (eat_ident("colors")) {
        parse_colors();
      } else if (eat_ident("porttype")) {
        parse_porttype();
      } else if (eat_ident("atom")) {
        parse_atom();
      } else if (eat_ident("pool")) {
        parse_pool();
      } else {
        err("expected colors, porttype, atom or pool");
        advance();
        sync({"colors", "porttype", "atom", "pool"});
      }
    }
  }

  void parse_colors() {
    if (!expect_punct("{", "after colors")) return;
    while (cur().kind == Tok::Ident) {
      s.colors.push_back(cur().text);  // duplicates surface in validation
      advance();
      skip_commas();
    }
    expect_punct("}", "closing the colors block");
  }

  void parse_porttype() {
    PortType pt;
    pt.name = ident_or("a port type name");
    if (!expect_punct("{", "after the port type name")) return;
    while (cur().kind == Tok::Ident) {
      if (auto id = s.color_id(cur().text)) {
        pt.colors.push_back(*id);
      } else {
        err("unknown color '" + cur().text + "'");
      }
      advance();
      skip_commas();
    }
    expect_punct("}", "closing the port type block");
    s.port_types.push_back(std::move(pt));
  }

  void parse_pool() {
    const Token& t = cur();
    std::string name = ident_or("an atom type name");
    if (auto id = s.atom_type_id(name)) {
      s.pooled.push_back(*id);
    } else if (!name.empty()) {
      err_at(t, "pool references unknown atom '" + name + "'");
    }
  }

  void parse_atom() {
    AtomType a;
    a.name = ident_or("an atom type name");
    std::vector<PendingRow> rows;
    if (!expect_punct("{", "after the atom name")) return;
    while (!eat_punct("}")) {
      if (done()) {
        err("unterminated atom block");
        return;
      }
      if (eat_ident("ports")) {
        parse_ports(a);
      } else if (eat_ident("energy")) {
        parse_energy(rows);
      } else {
        err("expected ports or energy");
        advance();
        sync({"ports", "energy"});
        if (!at_ident("ports") && !at_ident("energy")) break;
      }
    }
    expand_rows(a, rows);
    s.atoms.push_back(std::move(a));
  }

  void parse_ports(AtomType& a) {
    if (!expect_punct("{", "after ports")) return;
    while (cur().kind == Tok::Ident) {
      PortDecl p;
      p.label = cur().text;
      advance();
      if (!expect_punct(":", "after the port label")) return;
      const Token& ty = cur();
      std::string tyname = ident_or("a port type name");
      if (auto id = s.port_type_id(tyname)) {
        p.type = *id;
      } else if (!tyname.empty()) {
        err_at(ty, "unknown port type '" + tyname + "'");
      }
      if (eat_ident("in")) {
        p.orientation = Orientation::In;
      } else if (eat_ident("out")) {
        p.orientation = Orientation::Out;
      } else {
        err("expected in or out");
      }
      skip_commas();
      a.ports.push_back(std::move(p));
    }
    expect_punct("}", "closing the ports block");
  }

  void parse_energy(std::vector<PendingRow>& rows) {
    if (!expect_punct("{", "after energy")) return;
    while (at_ident("allow")) {
      PendingRow row;
      row.span = cur().span;
      advance();
      if (!expect_punct("(", "after allow")) return;
      while (!at_punct(")")) {
        if (done()) {
          err("unterminated state tuple");
          return;
        }
        RowEntry e;
        if (eat_punct("-")) {
          e.k = RowEntry::K::Unbound;
        } else if (eat_ident("_")) {
          e.k = RowEntry::K::Wild;
        } else if (cur().kind == Tok::Ident) {
          if (auto id = s.color_id(cur().text)) {
            e.k = RowEntry::K::Color;
            e.color = *id;
          } else {
            err("unknown color '" + cur().text + "'");
          }
          advance();
        } else {
          err("expected a color, - or _ in the state tuple");
          advance();
          continue;
        }
        row.entries.push_back(e);
        skip_commas();
      }
      expect_punct(")", "closing the state tuple");
      if (eat_ident("cost")) {
        if (auto v = number_or("a cost value")) row.cost = *v;
      }
      rows.push_back(std::move(row));
    }
    expect_punct("}", "closing the energy block");
  }

  // Wildcard entries expand to unbound plus every color the port type
  // admits; rows listed later override earlier ones.
  void expand_rows(AtomType& a, const std::vector<PendingRow>& rows) {
    for (const PendingRow& row : rows) {
      if (row.entries.size() != a.ports.size()) {
        diags.push_back({Severity::Error,
                         "atom '" + a.name + "' lists a state tuple of arity " +
                             std::to_string(row.entries.size()) + ", expected " +
                             std::to_string(a.ports.size()),
                         row.span, origin});
        continue;
      }
      std::vector<StateVector> combos{{}};
      bool bad = false;
      for (size_t i = 0; i < row.entries.size() && !bad; ++i) {
        const RowEntry& e = row.entries[i];
        std::vector<PortState> options;
        switch (e.k) {
          case RowEntry::K::Unbound: options = {kUnbound}; break;
          case RowEntry::K::Color: options = {bound_state(e.color)}; break;
          case RowEntry::K::Wild: {
            if (a.ports[i].type >= s.port_types.size()) {
              bad = true;
              break;
            }
            options = {kUnbound};
            for (ColorId c : s.port_types[a.ports[i].type].colors)
              options.push_back(bound_state(c));
            break;
          }
        }
        std::vector<StateVector> next;
        next.reserve(combos.size() * options.size());
        for (const StateVector& v : combos) {
          for (PortState o : options) {
            next.push_back(v);
            next.back().push_back(o);
          }
        }
        combos = std::move(next);
        if (combos.size() > 4096) {
          diags.push_back({Severity::Error,
                           "atom '" + a.name +
                               "' wildcard row expands past 4096 states",
                           row.span, origin});
          bad = true;
        }
      }
      if (bad) continue;
      for (StateVector& v : combos) a.energy.allow(std::move(v), row.cost);
    }
  }
};

// ----------------------------------------------------------- configurations

struct ConfigParser : Parser {
  const Scheme& s;
  ConfigBundle b;

  ConfigParser(std::string_view src, std::string origin_, Diagnostics& out,
               const Scheme& scheme)
      : Parser(src, std::move(origin_), out), s(scheme) {
    b.config.scheme = &scheme;
  }

  void run() {
    while (!done()) {
      if (eat_ident("instance")) {
        parse_instance();
      } else if (eat_ident("bond")) {
        parse_bond();
      } else if (eat_ident("pool")) {
        parse_pool();
      } else if (eat_ident("observe")) {
        parse_observe();
      } else if (eat_ident("declare")) {
        parse_declare();
      } else {
        err("expected instance, bond, pool, observe or declare");
        advance();
        sync({"instance", "bond", "pool", "observe", "declare"});
      }
    }
    if (!has_errors(diags)) finish();
  }

  void parse_instance() {
    const Token& t = cur();
    std::string name = ident_or("an instance name");
    if (!expect_punct(":", "after the instance name")) return;
    std::string tyname = ident_or("an atom type name");
    auto ty = s.atom_type_id(tyname);
    if (!ty) {
      err("unknown atom type '" + tyname + "'");
      return;
    }
    if (b.config.find_instance(name) >= 0) {
      err_at(t, "instance '" + name + "' already declared");
      return;
    }
    b.config.add_instance(*ty, std::move(name));
  }

  std::optional<PortRef> parse_portref() {
    const Token& t = cur();
    std::string inst = ident_or("an instance name");
    if (!expect_punct(".", "in the port reference")) return std::nullopt;
    std::string port = ident_or("a port label");
    int i = b.config.find_instance(inst);
    if (i < 0) {
      err_at(t, "unknown instance '" + inst + "'");
      return std::nullopt;
    }
    int p = s.atoms[b.config.instances[i]].port_index(port);
    if (p < 0) {
      err_at(t, "atom '" + s.atoms[b.config.instances[i]].name +
                    "' has no port '" + port + "'");
      return std::nullopt;
    }
    return PortRef{static_cast<InstanceId>(i), static_cast<uint32_t>(p)};
  }

  void parse_bond() {
    auto from = parse_portref();
    if (!expect_punct("->", "between the bond endpoints")) return;
    auto to = parse_portref();
    if (!expect_punct(":", "before the bond color")) return;
    const Token& ct = cur();
    std::string cname = ident_or("a bond color");
    auto col = s.color_id(cname);
    if (!col) {
      err_at(ct, "unknown color '" + cname + "'");
      return;
    }
    if (from && to) b.config.add_bond({*from, *to, *col});
  }

  // Either `pool Alias : Type (states) mode` or the single-free-state sugar
  // `pool Type mode`.
  void parse_pool() {
    const Token& t = cur();
    std::string first = ident_or("a pool alias or atom type");
    PoolEntry pe;
    if (eat_punct(":")) {
      pe.alias = first;
      const Token& tt = cur();
      std::string tyname = ident_or("an atom type name");
      auto ty = s.atom_type_id(tyname);
      if (!ty) {
        err_at(tt, "unknown atom type '" + tyname + "'");
        return;
      }
      pe.type = *ty;
      if (!expect_punct("(", "before the species state tuple")) return;
      StateVector vec;
      while (!at_punct(")")) {
        if (done()) {
          err("unterminated state tuple");
          return;
        }
        if (eat_punct("-")) {
          vec.push_back(kUnbound);
        } else if (cur().kind == Tok::Ident) {
          if (auto id = s.color_id(cur().text)) {
            vec.push_back(bound_state(*id));
          } else {
            err("unknown color '" + cur().text + "'");
          }
          advance();
        } else {
          err("expected a color or - in the species tuple");
          advance();
        }
        skip_commas();
      }
      expect_punct(")", "closing the species tuple");
      pe.free_vec = std::move(vec);
    } else {
      auto ty = s.atom_type_id(first);
      if (!ty) {
        err_at(t, "unknown atom type '" + first + "'");
        return;
      }
      auto fs = free_states(s, *ty);
      if (fs.size() != 1) {
        err_at(t, "atom '" + first + "' has " + std::to_string(fs.size()) +
                      " free states; name the species explicitly");
        return;
      }
      pe.alias = first;
      pe.type = *ty;
      pe.free_vec = fs[0].vec;
    }

    // Resolve the canonical loops; the vector must be a free state.
    bool found = false;
    for (const FreeState& f : free_states(s, pe.type)) {
      if (f.vec == pe.free_vec) {
        pe.loops = f.loops;
        found = true;
        break;
      }
    }
    if (!found) {
      err_at(t, "the species tuple is not a free state of atom '" +
                    s.atoms[pe.type].name + "'");
      return;
    }

    if (eat_ident("conc")) {
      if (auto v = number_or("a concentration")) pe.conc = *v;
    } else if (eat_ident("count")) {
      if (auto v = integer_or("a count")) pe.count = *v;
    } else {
      err("expected conc or count");
      return;
    }

    if (b.config.find_pool(pe.alias) >= 0) {
      err_at(t, "pool alias '" + pe.alias + "' already declared");
      return;
    }
    if (b.config.find_pool(pe.type, pe.free_vec) >= 0) {
      err_at(t, "this species already has a pool");
      return;
    }
    b.config.pools.push_back(std::move(pe));
  }

  void parse_observe() {
    if (!eat_ident("position")) {
      err("expected position after observe");
      return;
    }
    PositionObserver ob;
    ob.name = ident_or("an observer name");
    if (!eat_ident("of")) err("expected of");
    ob.subject = ident_or("the observed instance");
    if (!eat_ident("over")) err("expected over");
    if (!expect_punct("(", "before the track list")) return;
    while (cur().kind == Tok::Ident) {
      ob.track.push_back(cur().text);
      advance();
      skip_commas();
    }
    expect_punct(")", "closing the track list");
    if (!eat_ident("ports")) err("expected ports");
    if (!expect_punct("(", "before the port list")) return;
    while (cur().kind == Tok::Ident) {
      ob.ports.push_back(cur().text);
      advance();
      skip_commas();
    }
    expect_punct(")", "closing the port list");
    if (eat_ident("cycle")) {
      if (auto v = integer_or("a cycle length")) ob.cycle = static_cast<int>(*v);
    }
    b.observers.push_back(std::move(ob));
  }

  void parse_declare() {
    if (eat_ident("fuel")) {
      FuelDecl f;
      if (!eat_ident("draw")) err("expected draw");
      f.draw_alias = ident_or("the draw pool alias");
      if (!eat_ident("return")) err("expected return");
      f.return_alias = ident_or("the return pool alias");
      if (b.fuel) err("fuel already declared");
      b.fuel = std::move(f);
      return;
    }
    if (eat_ident("parallel")) {
      ParallelDecl d;
      if (!eat_ident("width")) err("expected width");
      if (auto v = integer_or("a width")) d.width = static_cast<int>(*v);
      if (d.width < 1) {
        err("width must be at least 1");
        d.width = 1;
      }
      if (!expect_punct("{", "opening the pattern block")) return;
      while (cur().kind == Tok::Ident) {
        const Token& tt = cur();
        std::string tyname = ident_or("an atom type name");
        auto ty = s.atom_type_id(tyname);
        if (!expect_punct(":", "after the pattern atom type")) return;
        if (!expect_punct("(", "before the pattern tuple")) return;
        StatePattern pat;
        if (ty) pat.type = *ty;
        while (!at_punct(")")) {
          if (done()) {
            err("unterminated pattern tuple");
            return;
          }
          PortPattern pp;
          if (eat_punct("-")) {
            pp.kind = PortPattern::Kind::Unbound;
          } else if (eat_ident("_")) {
            pp.kind = PortPattern::Kind::Any;
          } else if (cur().kind == Tok::Ident) {
            if (auto id = s.color_id(cur().text)) {
              pp.kind = PortPattern::Kind::Bound;
              pp.color = *id;
            } else {
              err("unknown color '" + cur().text + "'");
            }
            advance();
          } else {
            err("expected a color, - or _ in the pattern tuple");
            advance();
            continue;
          }
          pat.ports.push_back(pp);
          skip_commas();
        }
        expect_punct(")", "closing the pattern tuple");
        if (!ty) {
          err_at(tt, "unknown atom type '" + tyname + "'");
        } else if (pat.ports.size() != s.atoms[*ty].ports.size()) {
          err_at(tt, "pattern arity does not match atom '" + tyname + "'");
        } else {
          d.patterns.push_back(std::move(pat));
        }
      }
      expect_punct("}", "closing the pattern block");
      if (d.patterns.empty()) {
        err("parallel declaration has no patterns");
        return;
      }
      b.parallel.push_back(std::move(d));
      return;
    }
    err("expected fuel or parallel after declare");
  }

  // Whole-configuration checks that need the complete bond list.
  void finish() {
    std::vector<StateVector> vecs;
    try {
      vecs = b.config.port_states();
    } catch (const MalformedInput& e) {
      diags.push_back({Severity::Error, e.what(), {}, origin});
      return;
    }

    for (size_t i = 0; i < vecs.size(); ++i) {
      const AtomType& a = s.atoms[b.config.instances[i]];
      if (a.energy.energy(vecs[i]) == kInfiniteEnergy) {
        diags.push_back({Severity::Error,
                         "instance '" + b.config.names[i] +
                             "' sits in a state with no finite energy",
                         {}, origin});
      }
    }

    // A disconnected instance exactly in a pooled species' free state can
    // never be returned (returns ride on a bond break); require a count.
    for (size_t i = 0; i < vecs.size(); ++i) {
      bool external = false;
      for (const Bond& bd : b.config.bonds)
        if ((bd.from.inst == i) != (bd.to.inst == i)) external = true;
      if (external) continue;
      int k = b.config.find_pool(b.config.instances[i], vecs[i]);
      if (k >= 0)
        diags.push_back(
            {Severity::Error,
             "instance '" + b.config.names[i] + "' floats in pool species '" +
                 b.config.pools[k].alias + "'s free state; use its count instead",
             {}, origin});
    }

    if (b.fuel) {
      int d = b.config.find_pool(b.fuel->draw_alias);
      int r = b.config.find_pool(b.fuel->return_alias);
      if (d < 0)
        diags.push_back({Severity::Error,
                         "fuel draw pool '" + b.fuel->draw_alias + "' not found",
                         {}, origin});
      if (r < 0)
        diags.push_back({Severity::Error,
                         "fuel return pool '" + b.fuel->return_alias +
                             "' not found",
                         {}, origin});
      if (d >= 0 && r >= 0 &&
          b.config.pools[d].type != b.config.pools[r].type)
        diags.push_back({Severity::Error,
                         "fuel pools must be species of one atom type",
                         {}, origin});
    }

    for (const PositionObserver& ob : b.observers) {
      int subj = b.config.find_instance(ob.subject);
      if (subj < 0) {
        diags.push_back({Severity::Error,
                         "observer '" + ob.name + "' watches unknown instance '" +
                             ob.subject + "'",
                         {}, origin});
        continue;
      }
      const AtomType& a = s.atoms[b.config.instances[subj]];
      for (const std::string& p : ob.ports)
        if (a.port_index(p) < 0)
          diags.push_back({Severity::Error,
                           "observer '" + ob.name + "': atom '" + a.name +
                               "' has no port '" + p + "'",
                           {}, origin});
      if (ob.track.empty())
        diags.push_back({Severity::Error,
                         "observer '" + ob.name + "' has an empty track",
                         {}, origin});
      for (const std::string& m : ob.track)
        if (b.config.find_instance(m) < 0)
          diags.push_back({Severity::Error,
                           "observer '" + ob.name + "' track names unknown "
                           "instance '" + m + "'",
                           {}, origin});
      if (ob.cycle != 0 && ob.cycle != static_cast<int>(ob.track.size()))
        diags.push_back({Severity::Error,
                         "observer '" + ob.name + "' cycle must equal the "
                         "track length",
                         {}, origin});
    }
  }
};

std::string state_name(const Scheme& s, PortState p) {
  if (!is_bound(p)) return "-";
  return s.colors[state_color(p)];
}

void write_tuple(std::string& out, const Scheme& s, const StateVector& v) {
  out += "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += state_name(s, v[i]);
  }
  out += ")";
}

}  // namespace

ParsedScheme parse_scheme(std::string_view text, std::string origin) {
  ParsedScheme r;
  SchemeParser p(text, std::move(origin), r.diags);
  p.run();
  r.scheme = std::move(p.s);
  Diagnostics v = validate_scheme(r.scheme);
  for (Diagnostic& d : v) {
    d.origin = p.origin;
    r.diags.push_back(std::move(d));
  }
  return r;
}

std::string serialize_scheme(const Scheme& s) {
  std::string out;
  out += "colors {";
  for (const auto& c : s.colors) out += " " + c;
  out += " }\n";
  for (const PortType& pt : s.port_types) {
    out += "\nporttype " + pt.name + " {";
    for (ColorId c : pt.colors) out += " " + s.colors[c];
    out += " }\n";
  }
  for (const AtomType& a : s.atoms) {
    out += "\natom " + a.name + " {\n  ports {";
    for (const PortDecl& p : a.ports) {
      out += " " + p.label + ": " + s.port_types[p.type].name +
             (p.orientation == Orientation::Out ? " out" : " in");
    }
    out += " }\n  energy {\n";
    std::vector<std::pair<StateVector, double>> rows(a.energy.rows().begin(),
                                                     a.energy.rows().end());
    std::sort(rows.begin(), rows.end());
    for (const auto& [vec, cost] : rows) {
      out += "    allow ";
      write_tuple(out, s, vec);
      if (cost != 0.0) out += " cost " + fmt_double(cost);
      out += "\n";
    }
    out += "  }\n}\n";
  }
  if (!s.pooled.empty()) out += "\n";
  for (AtomTypeId t : s.pooled) out += "pool " + s.atoms[t].name + "\n";
  return out;
}

ParsedConfig parse_config(std::string_view text, const Scheme& s,
                          std::string origin) {
  ParsedConfig r;
  ConfigParser p(text, std::move(origin), r.diags, s);
  p.run();
  r.bundle = std::move(p.b);
  r.bundle.config.scheme = &s;
  return r;
}

std::string serialize_config(const ConfigBundle& b) {
  const Scheme& s = *b.config.scheme;
  std::string out;
  for (size_t i = 0; i < b.config.instances.size(); ++i)
    out += "instance " + b.config.names[i] + " : " +
           s.atoms[b.config.instances[i]].name + "\n";
  if (!b.config.bonds.empty()) out += "\n";
  for (const Bond& bd : b.config.bonds) {
    const AtomType& fa = s.atoms[b.config.instances[bd.from.inst]];
    const AtomType& ta = s.atoms[b.config.instances[bd.to.inst]];
    out += "bond " + b.config.names[bd.from.inst] + "." +
           fa.ports[bd.from.port].label + " -> " +
           b.config.names[bd.to.inst] + "." + ta.ports[bd.to.port].label +
           " : " + s.colors[bd.color] + "\n";
  }
  if (!b.config.pools.empty()) out += "\n";
  for (const PoolEntry& pe : b.config.pools) {
    out += "pool " + pe.alias + " : " + s.atoms[pe.type].name + " ";
    write_tuple(out, s, pe.free_vec);
    if (pe.finite()) {
      out += " count " + std::to_string(pe.count);
    } else {
      out += " conc " + fmt_double(pe.conc);
    }
    out += "\n";
  }
  if (!b.observers.empty()) out += "\n";
  for (const PositionObserver& ob : b.observers) {
    out += "observe position " + ob.name + " of " + ob.subject + " over (";
    for (size_t i = 0; i < ob.track.size(); ++i)
      out += (i ? ", " : "") + ob.track[i];
    out += ") ports (";
    for (size_t i = 0; i < ob.ports.size(); ++i)
      out += (i ? ", " : "") + ob.ports[i];
    out += ")";
    if (ob.cycle) out += " cycle " + std::to_string(ob.cycle);
    out += "\n";
  }
  if (b.fuel)
    out += "\ndeclare fuel draw " + b.fuel->draw_alias + " return " +
           b.fuel->return_alias + "\n";
  for (const ParallelDecl& d : b.parallel) {
    out += "\ndeclare parallel width " + std::to_string(d.width) + " {\n";
    for (const StatePattern& pat : d.patterns) {
      out += "  " + s.atoms[pat.type].name + ": (";
      for (size_t i = 0; i < pat.ports.size(); ++i) {
        if (i) out += ", ";
        switch (pat.ports[i].kind) {
          case PortPattern::Kind::Any: out += "_"; break;
          case PortPattern::Kind::Unbound: out += "-"; break;
          case PortPattern::Kind::Bound: out += s.colors[pat.ports[i].color];
        }
      }
      out += ")\n";
    }
    out += "}\n";
  }
  return out;
}

namespace {

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace

ParsedScheme load_scheme_file(const std::string& path) {
  auto text = read_file(path);
  if (!text) {
    ParsedScheme r;
    r.diags.push_back(
        {Severity::Error, "cannot read file", {}, path});
    return r;
  }
  return parse_scheme(*text, path);
}

ParsedConfig load_config_file(const std::string& path, const Scheme& s) {
  auto text = read_file(path);
  if (!text) {
    ParsedConfig r;
    r.diags.push_back(
        {Severity::Error, "cannot read file", {}, path});
    return r;
  }
  return parse_config(*text, s, path);
}

}  // namespace rbl
