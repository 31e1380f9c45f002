#include <algorithm>
#include <cassert>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rbl/motif.hpp"

namespace rbl {
namespace {

constexpr ColorId kNoColor = 0xFFFFFFFFu;

// Data atom fixed port layout: control, variable, parent pair, marker loop,
// then one (dp, dq) pair per declared child slot.
constexpr uint32_t kDC = 0, kDW = 1, kDP1 = 2, kDP2 = 3, kDM1 = 4, kDM2 = 5;
constexpr uint32_t kDChild0 = 6;
// C atom: child pair, root, control, marker loop.
constexpr uint32_t kCA1 = 0, kCA2 = 1, kCR = 2, kCC = 3, kCM1 = 4, kCM2 = 5;
// Fuel atom: two loop pairs and the coupling port.
constexpr uint32_t kGS1 = 0, kGS2 = 1, kGT1 = 2, kGT2 = 3, kGF = 4;

std::string sanitize(std::string_view name) {
  std::string out;
  for (char ch : name)
    if (ch != '(' && ch != ')') out += ch;
  return out;
}

// Endpoint inside a tracked subsystem; atom -1 is the machine.
struct EndP {
  int atom = -1;
  uint32_t port = 0;

  friend bool operator==(const EndP&, const EndP&) = default;
  friend auto operator<=>(const EndP&, const EndP&) = default;
};

struct TBond {
  EndP out;
  EndP in;

  friend bool operator==(const TBond&, const TBond&) = default;
  friend auto operator<=>(const TBond&, const TBond&) = default;
};

// A data atom the machine currently constrains. `below` abstracts the part
// of the molecule hanging under a child pair that the machine has not
// inspected: only the set of possible head types is known.
struct TrackedAtom {
  AtomTypeId type = 0;
  StateVector vec;
  std::map<uint32_t, std::vector<AtomTypeId>> below;
  bool live = true;

  friend bool operator==(const TrackedAtom&, const TrackedAtom&) = default;
};

// Machine state vector plus the tracked neighborhood. Worlds are the
// compiler's abstraction of every configuration a script state can hold.
struct World {
  StateVector zym;
  std::vector<TrackedAtom> atoms;
  std::vector<TBond> bonds;

  friend bool operator==(const World&, const World&) = default;
};

void append_num(std::string& s, uint64_t v) {
  s += std::to_string(v);
  s += ',';
}

std::string serialize_world(const World& w, bool with_below) {
  std::string k;
  for (PortState p : w.zym) append_num(k, p);
  k += '|';
  for (const auto& a : w.atoms) {
    append_num(k, a.type);
    for (PortState p : a.vec) append_num(k, p);
    if (with_below) {
      k += '<';
      for (const auto& [port, types] : a.below) {
        append_num(k, port);
        for (AtomTypeId t : types) append_num(k, t);
        k += ';';
      }
      k += '>';
    }
    k += '|';
  }
  for (const auto& b : w.bonds) {
    append_num(k, uint64_t(int64_t(b.out.atom) + 1));
    append_num(k, b.out.port);
    append_num(k, uint64_t(int64_t(b.in.atom) + 1));
    append_num(k, b.in.port);
  }
  return k;
}

// Sorts live atoms into a canonical order and remaps bonds.
World canonical_world(const World& in) {
  World w;
  w.zym = in.zym;
  std::vector<int> keep;
  for (size_t i = 0; i < in.atoms.size(); ++i)
    if (in.atoms[i].live) keep.push_back(static_cast<int>(i));
  std::stable_sort(keep.begin(), keep.end(), [&](int a, int b) {
    const auto& x = in.atoms[a];
    const auto& y = in.atoms[b];
    return std::tie(x.type, x.vec, x.below) < std::tie(y.type, y.vec, y.below);
  });
  std::map<int, int> remap;
  for (size_t k = 0; k < keep.size(); ++k) {
    remap[keep[k]] = static_cast<int>(k);
    w.atoms.push_back(in.atoms[keep[k]]);
  }
  for (TBond b : in.bonds) {
    if (b.out.atom >= 0) b.out.atom = remap.at(b.out.atom);
    if (b.in.atom >= 0) b.in.atom = remap.at(b.in.atom);
    w.bonds.push_back(b);
  }
  std::sort(w.bonds.begin(), w.bonds.end());
  return w;
}

std::string world_key(const World& w) {
  return serialize_world(canonical_world(w), true);
}

// Collision identity: the physical shape only. The `below` abstraction is
// bookkeeping, not something the dynamics can see.
std::string snapshot_key(const World& w) {
  return serialize_world(canonical_world(w), false);
}

struct Owner {
  int script = 0;
  bool is_edge = false;
  int id = 0;  // edge index or state index

  friend bool operator==(const Owner&, const Owner&) = default;
  friend auto operator<=>(const Owner&, const Owner&) = default;
};

struct EdgeColors {
  std::map<std::string, ColorId> slot;
};

struct ScriptCtx {
  const MotifScript* sc = nullptr;
  int index = 0;
  AtomTypeId zym = 0;
  PortTypeId qtype = 0;
  int pf = -1, pc = -1, pr = -1;
  std::map<std::string, uint32_t> ctl;
  std::map<std::string, uint32_t> var;
  std::map<std::string, ColorId> qcolor;  // state -> loop color, free absent
  std::vector<EdgeColors> ecolors;
  std::map<std::string, std::vector<int>> out_edges;
  std::map<std::string, std::map<std::string, World>> worlds;
};

// A concrete way to apply an edge to a world: which below-set member a
// detach materializes, or whether a grab arrives under a neutral-root C.
struct Variant {
  AtomTypeId member = 0;
  bool has_member = false;
  bool neutral = false;
};

struct Compiler;

// One edge expansion over one world: owns the mutable world copy, emits
// energy rows, registers interior snapshots, and records the delta list.
struct Run {
  Compiler& C;
  ScriptCtx& S;
  const MotifEdge& e;
  int ei;  // 0-based edge index
  World w;
  std::vector<MotifDelta>* rec = nullptr;
  std::optional<std::string> pend;  // interior snapshot awaiting registration
  std::set<int>* collect = nullptr;  // diamond leg touch set
  bool par = false;

  Run(Compiler& c, ScriptCtx& s, int edge, const World& start);

  StateVector& vec_at(EndP p);
  const AtomType& atom_of(EndP p) const;
  std::string ep_name(EndP p) const;
  int bond_index(EndP p) const;
  int held(uint32_t zym_port) const;

  void emit_row(int atom);
  void flush_pending();
  void after_delta(MoveKind k, std::string text,
                   std::initializer_list<int> touched);

  void form(EndP out, EndP in, ColorId c);
  void break_(EndP p);
  void recolor(EndP p, ColorId c);
  int draw(AtomTypeId t, const StateVector& free_vec,
           const std::vector<FreeState::Loop>& loops, uint32_t zym_port,
           uint32_t atom_port, ColorId c);
  void ret(uint32_t zym_port, const StateVector& expect_free);
  void state_change(ColorId from, ColorId to);
  void diamond(const std::function<void()>& f1,
               const std::function<void()>& f2);

  int mat_atom(AtomTypeId t);
  int mat_chain_head(int parent, uint32_t x1, uint32_t x2, AtomTypeId child);
  std::pair<int, int> mat_grab_molecule(const IoDecl& decl, bool neutral);
  int mat_under(int c_atom, const IoDecl& decl);

  ColorId qc(const std::string& state) const;
  ColorId ecol(const char* slot) const;

  void xp_state();
  void xp_m();
  void xp_x();
  void xp_c_grab(bool neutral);
  void xp_c_release();
  void xp_d_detach(AtomTypeId member);
  void xp_d_attach();
  void xp_d_take();
  void xp_d_untake();
  void xp_dstar_detach(AtomTypeId member);
  void xp_dstar_attach();
  void xp_s_present();
  void xp_s_retrieve();

  World finish();
};

struct Compiler {
  const std::vector<MotifScript>& scripts;
  CompiledProgram out;
  Scheme& s;
  Diagnostics& diags;

  ColorId c_m = 0, c_solid = 0, c_dashed = 0, c_neutral = 0;
  ColorId c_plus = kNoColor, c_pm = kNoColor, c_minus = kNoColor;
  PortTypeId pt_mono = 0, pt_var = 0, pt_dp = 0, pt_dq = 0;
  PortTypeId pt_croot = 0, pt_ctlc = 0, pt_g = 0, pt_fuel = 0;
  bool any_fuel = false;
  bool have_c_atom = false;
  AtomTypeId t_c = 0, t_g = 0;

  std::vector<std::string> data_order;
  std::map<std::string, const DataDecl*> data_decl;
  std::map<std::string, AtomTypeId> data_type;
  std::map<std::string, PortTypeId> ctl_type;
  std::map<std::string, const IoDecl*> output_decl;  // by root atom name
  std::map<std::string, bool> callable_output;       // producer script callable

  std::vector<ScriptCtx> ctx;
  std::map<std::string, Owner> registry;
  std::set<std::pair<std::string, std::string>> reported_collisions;
  std::set<std::string> decl_keys;

  explicit Compiler(const std::vector<MotifScript>& sc)
      : scripts(sc), s(out.scheme), diags(out.diags) {}

  void error(const ScriptCtx& sx, Span sp, std::string msg) {
    diags.push_back({Severity::Error,
                     "script '" + sx.sc->name + "': " + std::move(msg), sp,
                     sx.sc->name});
  }
  void warning(const ScriptCtx& sx, Span sp, std::string msg) {
    diags.push_back({Severity::Warning,
                     "script '" + sx.sc->name + "': " + std::move(msg), sp,
                     sx.sc->name});
  }

  StateVector mloop_vec(AtomTypeId t) const {
    StateVector v(s.atoms[t].ports.size(), kUnbound);
    const int m1 = t == t_c ? kCM1 : kDM1;
    v[m1] = bound_state(c_m);
    v[m1 + 1] = bound_state(c_m);
    return v;
  }
  std::vector<FreeState::Loop> mloop_loops(AtomTypeId t) const {
    const uint32_t m1 = t == t_c ? kCM1 : kDM1;
    return {{m1, m1 + 1, c_m}};
  }
  StateVector g_vec(ColorId c) const {
    StateVector v(5, kUnbound);
    for (int i = 0; i < 4; ++i) v[i] = bound_state(c);
    return v;
  }

  std::vector<AtomTypeId> kind_members(std::string_view kind) const {
    if (kind == kKindPeano)
      return {data_type.at("S"), data_type.at("Z")};
    return {data_type.at("T"), data_type.at("F")};
  }

  bool run();
  bool validate_scripts();
  void build_base();
  bool build_zym(ScriptCtx& sx);
  void fixpoint(ScriptCtx& sx);
  std::string why_not(ScriptCtx& sx, int ei, const World& w) const;
  std::vector<Variant> variants(ScriptCtx& sx, int ei, const World& w) const;
  void analyze_worlds(ScriptCtx& sx);
  void finalize();

  std::string owner_desc(const Owner& o) const {
    const ScriptCtx& sx = ctx[o.script];
    if (!o.is_edge) {
      std::string st = o.id < 0 ? std::string("free")
                                : sx.sc->states[static_cast<size_t>(o.id)];
      return "script '" + sx.sc->name + "' state '" + st + "'";
    }
    const MotifEdge& e = sx.sc->edges[static_cast<size_t>(o.id)];
    return "script '" + sx.sc->name + "' edge " + std::to_string(o.id + 1) +
           " (" + motif_verb_name(e.verb) + " " + e.from + " -> " + e.to + ")";
  }

  int state_id(const ScriptCtx& sx, const std::string& st) const {
    if (st == "free") return -1;
    for (size_t i = 0; i < sx.sc->states.size(); ++i)
      if (sx.sc->states[i] == st) return static_cast<int>(i);
    return -1;
  }

  void register_snapshot(const ScriptCtx& sx, const World& w, Owner o,
                         Span sp) {
    std::string key = std::to_string(sx.index) + "#" + snapshot_key(w);
    auto [it, inserted] = registry.emplace(std::move(key), o);
    if (inserted || it->second == o) return;
    std::string a = owner_desc(it->second), b = owner_desc(o);
    if (a > b) std::swap(a, b);
    if (reported_collisions.emplace(a, b).second)
      error(sx, sp,
            "ambiguous compilation: " + a + " and " + b +
                " produce the same configuration");
  }
};

CompiledProgram compile_motifs_impl(const std::vector<MotifScript>& scripts) {
  Compiler c(scripts);
  c.run();
  return std::move(c.out);
}

// ---------------------------------------------------------------------------
// Run: primitives

Run::Run(Compiler& c, ScriptCtx& s_, int edge, const World& start)
    : C(c), S(s_), e(s_.sc->edges[static_cast<size_t>(edge)]), ei(edge),
      w(start) {}

StateVector& Run::vec_at(EndP p) {
  return p.atom < 0 ? w.zym : w.atoms[static_cast<size_t>(p.atom)].vec;
}

const AtomType& Run::atom_of(EndP p) const {
  const AtomTypeId t =
      p.atom < 0 ? S.zym : w.atoms[static_cast<size_t>(p.atom)].type;
  return C.s.atoms[t];
}

std::string Run::ep_name(EndP p) const {
  const AtomType& a = atom_of(p);
  std::string base = p.atom < 0
                         ? S.sc->name
                         : a.name + "[" + std::to_string(p.atom) + "]";
  return base + "." + a.ports[p.port].label;
}

int Run::bond_index(EndP p) const {
  for (size_t i = 0; i < w.bonds.size(); ++i)
    if (w.bonds[i].out == p || w.bonds[i].in == p) return static_cast<int>(i);
  return -1;
}

int Run::held(uint32_t zym_port) const {
  const EndP p{-1, zym_port};
  for (const TBond& b : w.bonds) {
    if (b.out == p && b.in.atom >= 0) return b.in.atom;
    if (b.in == p && b.out.atom >= 0) return b.out.atom;
  }
  return -1;
}

void Run::emit_row(int atom) {
  if (atom < 0) {
    C.s.atoms[S.zym].energy.allow(w.zym);
    return;
  }
  const auto& a = w.atoms[static_cast<size_t>(atom)];
  C.s.atoms[a.type].energy.allow(a.vec);
}

void Run::flush_pending() {
  if (!pend) return;
  std::string key = std::move(*pend);
  pend.reset();
  auto [it, inserted] = C.registry.emplace(std::move(key),
                                           Owner{S.index, true, ei});
  if (!inserted && !(it->second == Owner{S.index, true, ei})) {
    std::string a = C.owner_desc(it->second);
    std::string b = C.owner_desc(Owner{S.index, true, ei});
    if (a > b) std::swap(a, b);
    if (C.reported_collisions.emplace(a, b).second)
      C.error(S, e.span, "ambiguous compilation: " + a + " and " + b +
                             " produce the same configuration");
  }
}

void Run::after_delta(MoveKind k, std::string text,
                      std::initializer_list<int> touched) {
  for (int a : touched) emit_row(a);
  pend = std::to_string(S.index) + "#" + snapshot_key(w);
  if (rec) rec->push_back({k, std::move(text), par});
  if (collect)
    for (int a : touched)
      if (a >= 0) collect->insert(a);
}

void Run::form(EndP o, EndP i, ColorId c) {
  flush_pending();
  emit_row(o.atom);
  if (i.atom != o.atom) emit_row(i.atom);
  StateVector& vo = vec_at(o);
  StateVector& vi = vec_at(i);
  if (vo[o.port] != kUnbound || vi[i.port] != kUnbound)
    throw MalformedInput("internal: form on a bound port at " + ep_name(o));
  vo[o.port] = bound_state(c);
  vi[i.port] = bound_state(c);
  w.bonds.push_back({o, i});
  std::sort(w.bonds.begin(), w.bonds.end());
  after_delta(MoveKind::Form,
              "form " + ep_name(o) + " -> " + ep_name(i) + " : " +
                  C.s.colors[c],
              {o.atom, i.atom});
}

void Run::break_(EndP p) {
  flush_pending();
  const int bi = bond_index(p);
  if (bi < 0)
    throw MalformedInput("internal: break on an unbound port at " +
                         ep_name(p));
  const TBond b = w.bonds[static_cast<size_t>(bi)];
  emit_row(b.out.atom);
  if (b.in.atom != b.out.atom) emit_row(b.in.atom);
  vec_at(b.out)[b.out.port] = kUnbound;
  vec_at(b.in)[b.in.port] = kUnbound;
  w.bonds.erase(w.bonds.begin() + bi);
  after_delta(MoveKind::Break,
              "break " + ep_name(b.out) + " -> " + ep_name(b.in),
              {b.out.atom, b.in.atom});
}

void Run::recolor(EndP p, ColorId c) {
  flush_pending();
  const int bi = bond_index(p);
  if (bi < 0)
    throw MalformedInput("internal: recolor on an unbound port at " +
                         ep_name(p));
  const TBond b = w.bonds[static_cast<size_t>(bi)];
  emit_row(b.out.atom);
  if (b.in.atom != b.out.atom) emit_row(b.in.atom);
  const ColorId old = state_color(vec_at(b.out)[b.out.port]);
  vec_at(b.out)[b.out.port] = bound_state(c);
  vec_at(b.in)[b.in.port] = bound_state(c);
  after_delta(MoveKind::Recolor,
              "recolor " + ep_name(b.out) + " -> " + ep_name(b.in) + " : " +
                  C.s.colors[old] + " -> " + C.s.colors[c],
              {b.out.atom, b.in.atom});
}

int Run::draw(AtomTypeId t, const StateVector& free_vec,
              const std::vector<FreeState::Loop>& loops, uint32_t zym_port,
              uint32_t atom_port, ColorId c) {
  flush_pending();
  emit_row(-1);
  const int idx = static_cast<int>(w.atoms.size());
  w.atoms.push_back({t, free_vec, {}, true});
  for (const auto& l : loops)
    w.bonds.push_back({{idx, l.out_port}, {idx, l.in_port}});
  emit_row(idx);  // the pooled free form
  w.zym[zym_port] = bound_state(c);
  w.atoms[static_cast<size_t>(idx)].vec[atom_port] = bound_state(c);
  w.bonds.push_back({{-1, zym_port}, {idx, atom_port}});
  std::sort(w.bonds.begin(), w.bonds.end());
  after_delta(MoveKind::Draw,
              "draw " + C.s.atoms[t].name + " onto " +
                  ep_name({-1, zym_port}) + " : " + C.s.colors[c],
              {-1, idx});
  return idx;
}

void Run::ret(uint32_t zym_port, const StateVector& expect_free) {
  flush_pending();
  const EndP zp{-1, zym_port};
  const int bi = bond_index(zp);
  if (bi < 0)
    throw MalformedInput("internal: return with nothing held at " +
                         ep_name(zp));
  TBond b = w.bonds[static_cast<size_t>(bi)];
  const int a = b.out.atom < 0 ? b.in.atom : b.out.atom;
  emit_row(-1);
  emit_row(a);
  vec_at(b.out)[b.out.port] = kUnbound;
  vec_at(b.in)[b.in.port] = kUnbound;
  w.bonds.erase(w.bonds.begin() + bi);
  auto& atom = w.atoms[static_cast<size_t>(a)];
  if (atom.vec != expect_free)
    throw MalformedInput("internal: " + C.s.atoms[atom.type].name +
                         " is not in its pool form at return");
  // Self-loops leave with the instance; any other remaining bond is a bug.
  std::erase_if(w.bonds, [&](const TBond& t) {
    if (t.out.atom != a && t.in.atom != a) return false;
    if (t.out.atom != a || t.in.atom != a)
      throw MalformedInput("internal: returned instance still bonded");
    return true;
  });
  atom.live = false;
  emit_row(-1);
  after_delta(MoveKind::Return,
              "return " + C.s.atoms[atom.type].name + " from " + ep_name(zp),
              {-1});
}

void Run::state_change(ColorId from, ColorId to) {
  for (uint32_t lp : {0u, 2u}) {  // qa pair first, then qb
    if (from == kNoColor)
      form({-1, lp}, {-1, lp + 1}, to);
    else if (to == kNoColor)
      break_({-1, lp});
    else
      recolor({-1, lp}, to);
  }
}

void Run::diamond(const std::function<void()>& f1,
                  const std::function<void()>& f2) {
  flush_pending();
  const World pre = w;
  std::set<int> touched;
  collect = &touched;
  par = true;

  f1();
  const World mid1 = w;
  flush_pending();
  f2();
  const World post = w;
  const std::optional<std::string> post_pend = pend;

  // Replay the other order: same rows and interior snapshot, no new notes.
  auto* saved = rec;
  rec = nullptr;
  pend.reset();
  w = pre;
  f2();
  const World mid2 = w;
  flush_pending();
  f1();
  if (!(w == post))
    throw MalformedInput("internal: diamond legs do not commute");
  pend = post_pend;
  rec = saved;
  par = false;
  collect = nullptr;

  // The four corners are exempt from the corridor's two-neighbor rule.
  touched.insert(-1);
  for (const World* corner : {&pre, &mid1, &mid2, &post}) {
    ParallelDecl d;
    d.width = 2;
    std::string key;
    for (int a : touched) {
      StatePattern sp;
      sp.type = a < 0 ? S.zym : corner->atoms[static_cast<size_t>(a)].type;
      const StateVector& v =
          a < 0 ? corner->zym : corner->atoms[static_cast<size_t>(a)].vec;
      for (PortState ps : v) {
        PortPattern pp;
        pp.kind = is_bound(ps) ? PortPattern::Kind::Bound
                               : PortPattern::Kind::Unbound;
        if (is_bound(ps)) pp.color = state_color(ps);
        sp.ports.push_back(pp);
      }
      append_num(key, sp.type);
      for (PortState ps : v) append_num(key, ps);
      key += '|';
      d.patterns.push_back(std::move(sp));
    }
    if (C.decl_keys.insert(key).second) C.out.parallel.push_back(std::move(d));
  }
}

int Run::mat_atom(AtomTypeId t) {
  const int idx = static_cast<int>(w.atoms.size());
  w.atoms.push_back(
      {t, StateVector(C.s.atoms[t].ports.size(), kUnbound), {}, true});
  return idx;
}

// Materializes the head of an uninspected chain below parent's (x1, x2).
int Run::mat_chain_head(int parent, uint32_t x1, uint32_t x2,
                        AtomTypeId child) {
  auto& p = w.atoms[static_cast<size_t>(parent)];
  p.below.erase(x1);
  const int idx = mat_atom(child);
  auto& c = w.atoms[static_cast<size_t>(idx)];
  c.vec[kDP1] = bound_state(C.c_solid);
  c.vec[kDP2] = bound_state(C.c_solid);
  // A chain nonterminal carries its own uninspected tail.
  const auto& ports = C.s.atoms[child].ports;
  for (uint32_t cp = kDChild0; cp + 1 < ports.size(); cp += 2) {
    c.vec[cp] = bound_state(C.c_solid);
    c.vec[cp + 1] = bound_state(C.c_solid);
    c.below[cp] = C.kind_members(kKindPeano);
  }
  w.bonds.push_back({{parent, x1}, {idx, kDP1}});
  w.bonds.push_back({{parent, x2}, {idx, kDP2}});
  std::sort(w.bonds.begin(), w.bonds.end());
  return idx;
}

std::pair<int, int> Run::mat_grab_molecule(const IoDecl& decl, bool neutral) {
  const int c1 = mat_atom(C.t_c);
  auto& cv = w.atoms[static_cast<size_t>(c1)].vec;
  cv[kCA1] = bound_state(C.c_solid);
  cv[kCA2] = bound_state(C.c_solid);
  if (neutral) cv[kCR] = bound_state(C.c_neutral);
  const int d = mat_under(c1, decl);
  return {c1, d};
}

int Run::mat_under(int c_atom, const IoDecl& decl) {
  w.atoms[static_cast<size_t>(c_atom)].below.erase(kCA1);
  const int d = mat_atom(C.data_type.at(decl.atom));
  auto& dv = w.atoms[static_cast<size_t>(d)];
  dv.vec[kDP1] = bound_state(C.c_solid);
  dv.vec[kDP2] = bound_state(C.c_solid);
  for (size_t i = 0; i < decl.fields.size(); ++i) {
    const uint32_t x1 = kDChild0 + 2 * static_cast<uint32_t>(i);
    dv.vec[x1] = bound_state(C.c_solid);
    dv.vec[x1 + 1] = bound_state(C.c_solid);
    dv.below[x1] = C.kind_members(decl.fields[i].kind);
  }
  w.bonds.push_back({{c_atom, kCA1}, {d, kDP1}});
  w.bonds.push_back({{c_atom, kCA2}, {d, kDP2}});
  std::sort(w.bonds.begin(), w.bonds.end());
  return d;
}

ColorId Run::qc(const std::string& state) const {
  auto it = S.qcolor.find(state);
  return it == S.qcolor.end() ? kNoColor : it->second;
}

ColorId Run::ecol(const char* slot) const {
  return S.ecolors[static_cast<size_t>(ei)].slot.at(slot);
}

// ---------------------------------------------------------------------------
// Run: motif micro-sequences

void Run::xp_state() { state_change(qc(e.from), qc(e.to)); }

void Run::xp_m() {
  const AtomTypeId t = C.data_type.at(e.atom);
  const uint32_t pA = S.ctl.at(e.atom);
  if (!e.rev) {
    const int a =
        draw(t, C.mloop_vec(t), C.mloop_loops(t), pA, kDC, C.c_m);
    break_({a, kDM1});
    recolor({-1, pA}, ecol("hold"));
    state_change(qc(e.from), qc(e.to));
    if (!e.var.empty()) {
      const uint32_t pK = S.var.at(e.var);
      form({-1, pK}, {a, kDW}, C.c_dashed);
      recolor({-1, pK}, C.c_solid);
      break_({-1, pA});
    }
    return;
  }
  if (e.var.empty()) {
    const int a = held(pA);
    state_change(qc(e.from), qc(e.to));
    recolor({-1, pA}, C.c_m);
    form({a, kDM1}, {a, kDM2}, C.c_m);
    ret(pA, C.mloop_vec(t));
    return;
  }
  const uint32_t pK = S.var.at(e.var);
  const int a = held(pK);
  form({-1, pA}, {a, kDC}, ecol("bind"));
  recolor({-1, pK}, C.c_dashed);
  break_({-1, pK});
  state_change(qc(e.from), qc(e.to));
  recolor({-1, pA}, C.c_m);
  form({a, kDM1}, {a, kDM2}, C.c_m);
  ret(pA, C.mloop_vec(t));
}

void Run::xp_x() {
  const uint32_t pF = static_cast<uint32_t>(S.pf);
  const uint32_t pA = S.ctl.at(e.swap_from);
  const uint32_t pB = S.ctl.at(e.swap_to);
  const AtomTypeId ta = C.data_type.at(e.swap_from);
  const AtomTypeId tb = C.data_type.at(e.swap_to);
  const int a = held(pA);
  const int g = draw(C.t_g, C.g_vec(C.c_plus),
                     {{kGS1, kGS2, C.c_plus}, {kGT1, kGT2, C.c_plus}}, pF,
                     kGF, C.c_plus);
  recolor({-1, pA}, C.c_m);
  form({a, kDM1}, {a, kDM2}, C.c_m);
  ret(pA, C.mloop_vec(ta));
  const int b = draw(tb, C.mloop_vec(tb), C.mloop_loops(tb), pB, kDC, C.c_m);
  break_({b, kDM1});
  recolor({-1, pB}, ecol("hold"));
  recolor({-1, pF}, C.c_pm);
  // Loop flip order is part of the fuel economy's published table.
  recolor({g, kGT1}, C.c_minus);
  recolor({g, kGS1}, C.c_minus);
  recolor({-1, pF}, C.c_minus);
  ret(pF, C.g_vec(C.c_minus));
}

void Run::xp_c_grab(bool neutral) {
  const uint32_t pA = S.ctl.at(e.atom);
  const uint32_t pC = static_cast<uint32_t>(S.pc);
  auto [c1, d] = mat_grab_molecule(*S.sc->input, neutral);
  form({-1, pA}, {d, kDC}, ecol("bind"));
  state_change(qc(e.from), ecol("mid"));
  recolor({-1, pA}, ecol("work"));
  recolor({c1, kCA1}, C.c_dashed);
  form({-1, pC}, {c1, kCC}, ecol("dock"));
  break_({c1, kCA2});
  diamond([&] { break_({c1, kCA1}); },
          [&] { recolor({-1, pA}, ecol("hold")); });
  recolor({-1, pC}, ecol("park"));
  state_change(ecol("mid"), qc(e.to));
}

void Run::xp_c_release() {
  const uint32_t pA = S.ctl.at(e.atom);
  const uint32_t pC = static_cast<uint32_t>(S.pc);
  const int d = held(pA);
  const int c1 = held(pC);
  state_change(qc(e.from), ecol("mid"));
  recolor({-1, pC}, ecol("dock"));
  diamond([&] { form({c1, kCA1}, {d, kDP1}, C.c_dashed); },
          [&] { recolor({-1, pA}, ecol("work")); });
  form({c1, kCA2}, {d, kDP2}, C.c_solid);
  break_({-1, pC});
  recolor({c1, kCA1}, C.c_solid);
  recolor({-1, pA}, ecol("bind"));
  state_change(ecol("mid"), qc(e.to));
  break_({-1, pA});
}

void Run::xp_d_detach(AtomTypeId member) {
  const uint32_t pP = S.ctl.at(e.parent);
  const int p = held(pP);
  const AtomType& pt = C.s.atoms[C.data_type.at(e.parent)];
  const uint32_t px1 =
      static_cast<uint32_t>(pt.port_index(e.port + "1"));
  const uint32_t px2 = px1 + 1;
  const int child = mat_chain_head(p, px1, px2, member);
  const uint32_t pT = S.ctl.at(C.s.atoms[member].name);
  form({-1, pT}, {child, kDC}, ecol("bind"));
  state_change(qc(e.from), ecol("mid"));
  recolor({-1, pT}, ecol("work"));
  recolor({p, px1}, C.c_dashed);
  break_({p, px2});
  diamond([&] { break_({p, px1}); },
          [&] { recolor({-1, pT}, ecol("hold")); });
  state_change(ecol("mid"), qc(e.to));
}

void Run::xp_d_attach() {
  const uint32_t pT = S.ctl.at(e.expect[0]);
  const int child = held(pT);
  const uint32_t pP = S.ctl.at(e.parent);
  const int p = held(pP);
  const AtomType& pt = C.s.atoms[C.data_type.at(e.parent)];
  const uint32_t px1 = static_cast<uint32_t>(pt.port_index(e.port + "1"));
  const uint32_t px2 = px1 + 1;
  state_change(qc(e.from), ecol("mid"));
  diamond([&] { form({p, px1}, {child, kDP1}, C.c_dashed); },
          [&] { recolor({-1, pT}, ecol("work")); });
  form({p, px2}, {child, kDP2}, C.c_solid);
  recolor({p, px1}, C.c_solid);
  recolor({-1, pT}, ecol("bind"));
  state_change(ecol("mid"), qc(e.to));
  break_({-1, pT});
}

void Run::xp_d_take() {
  const uint32_t pK = S.var.at(e.var);
  const int a = held(pK);
  const uint32_t pA = S.ctl.at(e.expect[0]);
  form({-1, pA}, {a, kDC}, ecol("bind"));
  state_change(qc(e.from), qc(e.to));
  recolor({-1, pA}, ecol("hold"));
  break_({-1, pK});
}

void Run::xp_d_untake() {
  const uint32_t pA = S.ctl.at(e.expect[0]);
  const int a = held(pA);
  const uint32_t pK = S.var.at(e.var);
  recolor({-1, pA}, ecol("bind"));
  form({-1, pK}, {a, kDW}, C.c_solid);
  state_change(qc(e.from), qc(e.to));
  break_({-1, pA});
}

void Run::xp_dstar_detach(AtomTypeId member) {
  const uint32_t pP = S.ctl.at(e.parent);
  const int p = held(pP);
  const uint32_t pK = S.var.at(e.var);
  const AtomType& pt = C.s.atoms[C.data_type.at(e.parent)];
  const uint32_t px1 = static_cast<uint32_t>(pt.port_index(e.port + "1"));
  const uint32_t px2 = px1 + 1;
  const int child = mat_chain_head(p, px1, px2, member);
  recolor({-1, pP}, ecol("work"));
  state_change(qc(e.from), ecol("mid"));
  recolor({p, px1}, C.c_dashed);
  form({-1, pK}, {child, kDW}, C.c_dashed);
  recolor({-1, pK}, C.c_solid);
  break_({p, px2});
  diamond([&] { break_({p, px1}); },
          [&] { recolor({-1, pP}, ecol("hold")); });
  state_change(ecol("mid"), qc(e.to));
}

void Run::xp_dstar_attach() {
  const uint32_t pP = S.ctl.at(e.parent);
  const int p = held(pP);
  const uint32_t pK = S.var.at(e.var);
  const int head = held(pK);
  const AtomType& pt = C.s.atoms[C.data_type.at(e.parent)];
  const uint32_t px1 = static_cast<uint32_t>(pt.port_index(e.port + "1"));
  const uint32_t px2 = px1 + 1;
  state_change(qc(e.from), ecol("mid"));
  diamond([&] { form({p, px1}, {head, kDP1}, C.c_dashed); },
          [&] { recolor({-1, pP}, ecol("work")); });
  form({p, px2}, {head, kDP2}, C.c_solid);
  recolor({-1, pK}, C.c_dashed);
  break_({-1, pK});
  recolor({p, px1}, C.c_solid);
  recolor({-1, pP}, ecol("hold"));
  state_change(ecol("mid"), qc(e.to));
  if (e.handoff) {
    const uint32_t pJ = S.var.at(e.handoff_var);
    form({-1, pJ}, {p, kDW}, C.c_dashed);
    recolor({-1, pJ}, C.c_solid);
    break_({-1, pP});
  }
}

void Run::xp_s_present() {
  const uint32_t pA = S.ctl.at(e.atom);
  const uint32_t pR = static_cast<uint32_t>(S.pr);
  const int d = held(pA);
  const int c2 = draw(C.t_c, C.mloop_vec(C.t_c), C.mloop_loops(C.t_c), pR,
                      kCR, C.c_m);
  state_change(qc(e.from), qc(e.to));
  recolor({-1, pR}, C.c_neutral);
  recolor({-1, pA}, ecol("work"));
  form({c2, kCA1}, {d, kDP1}, C.c_dashed);
  break_({c2, kCM1});
  form({c2, kCA2}, {d, kDP2}, C.c_solid);
  recolor({c2, kCA1}, C.c_solid);
  break_({-1, pA});
}

void Run::xp_s_retrieve() {
  const uint32_t pR = static_cast<uint32_t>(S.pr);
  const int c2 = held(pR);
  const uint32_t pB = S.ctl.at(e.atom);
  const int d = mat_under(c2, *C.output_decl.at(e.atom));
  form({-1, pB}, {d, kDC}, ecol("work"));
  recolor({c2, kCA1}, C.c_dashed);
  break_({c2, kCA2});
  form({c2, kCM1}, {c2, kCM2}, C.c_m);
  break_({c2, kCA1});
  recolor({-1, pB}, ecol("hold"));
  recolor({-1, pR}, C.c_m);
  state_change(qc(e.from), qc(e.to));
  ret(pR, C.mloop_vec(C.t_c));
}

// Untracks every atom no longer bonded to the machine, checking it rests in
// a legal molecule shape, then canonicalizes.
World Run::finish() {
  pend.reset();
  std::set<int> zym_bonded;
  for (const TBond& b : w.bonds) {
    if (b.out.atom < 0 && b.in.atom >= 0) zym_bonded.insert(b.in.atom);
    if (b.in.atom < 0 && b.out.atom >= 0) zym_bonded.insert(b.out.atom);
  }
  std::set<int> drop;
  for (size_t i = 0; i < w.atoms.size(); ++i) {
    const auto& a = w.atoms[i];
    if (!a.live || zym_bonded.count(static_cast<int>(i))) continue;
    drop.insert(static_cast<int>(i));
    bool ok;
    if (a.type == C.t_c) {
      ok = a.vec[kCC] == kUnbound && a.vec[kCM1] == kUnbound &&
           a.vec[kCM2] == kUnbound &&
           a.vec[kCA1] == bound_state(C.c_solid) &&
           a.vec[kCA2] == bound_state(C.c_solid) &&
           (a.vec[kCR] == kUnbound ||
            a.vec[kCR] == bound_state(C.c_neutral));
    } else {
      ok = a.vec[kDC] == kUnbound && a.vec[kDW] == kUnbound &&
           a.vec[kDM1] == kUnbound && a.vec[kDM2] == kUnbound &&
           a.vec[kDP1] == bound_state(C.c_solid) &&
           a.vec[kDP2] == bound_state(C.c_solid);
      for (size_t cp = kDChild0; ok && cp + 1 < a.vec.size(); cp += 2) {
        const bool full = a.vec[cp] == bound_state(C.c_solid) &&
                          a.vec[cp + 1] == bound_state(C.c_solid);
        const bool empty =
            a.vec[cp] == kUnbound && a.vec[cp + 1] == kUnbound;
        ok = full || empty;
      }
    }
    if (!ok)
      C.error(S, e.span,
              "edge " + std::to_string(ei + 1) + " leaves a " +
                  C.s.atoms[a.type].name + " in a shape no molecule holds");
  }
  for (int i : drop) {
    // Record what hangs below the surviving parent, then cut the atom loose.
    for (const TBond& b : w.bonds) {
      const bool out_stays = b.out.atom >= 0 && !drop.count(b.out.atom) &&
                             b.in.atom == i;
      if (out_stays && w.atoms[static_cast<size_t>(b.out.atom)].live &&
          b.in.port == kDP1)
        w.atoms[static_cast<size_t>(b.out.atom)].below[b.out.port] = {
            w.atoms[static_cast<size_t>(i)].type};
    }
    w.atoms[static_cast<size_t>(i)].live = false;
  }
  std::erase_if(w.bonds, [&](const TBond& b) {
    return (b.out.atom >= 0 && drop.count(b.out.atom)) ||
           (b.in.atom >= 0 && drop.count(b.in.atom));
  });
  return canonical_world(w);
}

// ---------------------------------------------------------------------------
// Compiler: setup

bool Compiler::validate_scripts() {
  bool ok = true;
  auto fail = [&](const MotifScript& sc, Span sp, std::string msg) {
    diags.push_back({Severity::Error,
                     "script '" + sc.name + "': " + std::move(msg), sp,
                     sc.name});
    ok = false;
  };

  std::set<std::string> names;
  for (const auto& sc : scripts) {
    if (!names.insert(sc.name).second)
      fail(sc, Span{}, "a script with this name was already given");
    if (sc.start != "free" || sc.end != "free")
      fail(sc, Span{},
           "machines rest in the free state between runs; start and end "
           "must be free");
    for (const auto& d : sc.data) {
      auto it = data_decl.find(d.name);
      if (it == data_decl.end()) {
        data_decl[d.name] = &d;
        data_order.push_back(d.name);
      } else if (it->second->children != d.children) {
        fail(sc, d.span,
             "data atom '" + d.name +
                 "' conflicts with an earlier declaration of the same name");
      }
    }
  }

  auto need_type = [&](const MotifScript& sc, const MotifEdge& e,
                       const std::string& t) {
    if (!t.empty() && !data_decl.count(t))
      fail(sc, e.span, "no data template for atom '" + t + "'");
  };
  std::set<std::string> kinds_used;
  for (const auto& sc : scripts) {
    for (const auto& e : sc.edges) {
      need_type(sc, e, e.atom);
      need_type(sc, e, e.parent);
      need_type(sc, e, e.swap_from);
      need_type(sc, e, e.swap_to);
      for (const auto& x : e.expect) need_type(sc, e, x);
      if (e.verb == MotifVerb::C && !e.rev &&
          (!sc.input || sc.input->atom != e.atom))
        fail(sc, e.span,
             "C grab of '" + e.atom + "' needs a matching input declaration");
    }
    for (const auto* io : {&sc.input, &sc.output}) {
      if (!io->has_value()) continue;
      for (const auto& f : (*io)->fields) kinds_used.insert(f.kind);
    }
    if (sc.output) {
      auto [it, inserted] = output_decl.emplace(sc.output->atom, &*sc.output);
      if (!inserted && !(*it->second == *sc.output))
        fail(sc, Span{},
             "output declaration for '" + sc.output->atom +
                 "' conflicts with another script's");
      callable_output[sc.output->atom] = sc.callable;
    }
  }
  for (const auto& sc : scripts)
    for (const auto& e : sc.edges) {
      if (e.verb == MotifVerb::S && e.rev && !output_decl.count(e.atom))
        fail(sc, e.span,
             "S retrieve of '" + e.atom +
                 "' needs the script that outputs it; compile them together");
      // Detached chain members materialize with an opaque tail, which only
      // the peano successor shape supports.
      if (e.verb == MotifVerb::D || e.verb == MotifVerb::DStar)
        for (const auto& x : e.expect) {
          auto it = data_decl.find(x);
          if (it != data_decl.end() && !it->second->children.empty() &&
              x != "S")
            fail(sc, e.span,
                 "expected member '" + x +
                     "' has child slots; only S heads a value chain");
        }
    }

  // The value encodings are concrete templates, not built-ins.
  auto need_template = [&](const char* n, size_t arity, const char* why) {
    auto it = data_decl.find(n);
    if (it == data_decl.end())
      diags.push_back({Severity::Error,
                       std::string("value kind ") + why +
                           " needs a data template '" + n + "'",
                       Span{}, "compile"});
    else if (it->second->children.size() != arity)
      diags.push_back({Severity::Error,
                       std::string("template '") + n + "' must have " +
                           std::to_string(arity) + " child slot(s) for " + why,
                       Span{}, "compile"});
  };
  if (kinds_used.count(std::string(kKindPeano))) {
    need_template("S", 1, "peano");
    need_template("Z", 0, "peano");
  }
  if (kinds_used.count(std::string(kKindBool))) {
    need_template("T", 0, "bool");
    need_template("F", 0, "bool");
  }
  return ok && !has_errors(diags);
}

void Compiler::build_base() {
  c_m = s.add_color("m");
  c_solid = s.add_color("solid");
  c_dashed = s.add_color("dashed");
  c_neutral = s.add_color("neutral");
  for (const auto& sc : scripts)
    for (const auto& e : sc.edges) {
      any_fuel |= e.verb == MotifVerb::X;
      have_c_atom |=
          e.verb == MotifVerb::C || e.verb == MotifVerb::S;
    }
  if (any_fuel) {
    c_plus = s.add_color("plus");
    c_pm = s.add_color("pm");
    c_minus = s.add_color("minus");
  }

  pt_mono = s.add_port_type({"mono", {c_m}});
  pt_var = s.add_port_type({"var", {c_solid, c_dashed}});
  pt_dp = s.add_port_type({"dp", {c_solid, c_dashed}});
  pt_dq = s.add_port_type({"dq", {c_solid}});
  if (have_c_atom) {
    pt_croot = s.add_port_type({"croot", {c_m, c_neutral}});
    pt_ctlc = s.add_port_type({"ctl_C", {}});
  }
  if (any_fuel) {
    pt_g = s.add_port_type({"g", {c_plus, c_minus}});
    pt_fuel = s.add_port_type({"fuel", {c_plus, c_pm, c_minus}});
  }

  for (const auto& name : data_order) {
    const DataDecl& d = *data_decl.at(name);
    ctl_type[name] =
        s.add_port_type({"ctl_" + sanitize(name), {}});
    AtomType a;
    a.name = name;
    a.ports = {{"c", ctl_type[name], Orientation::In},
               {"w", pt_var, Orientation::In},
               {"p1", pt_dp, Orientation::In},
               {"p2", pt_dq, Orientation::In},
               {"m1", pt_mono, Orientation::Out},
               {"m2", pt_mono, Orientation::In}};
    for (const auto& ch : d.children) {
      a.ports.push_back({ch + "1", pt_dp, Orientation::Out});
      a.ports.push_back({ch + "2", pt_dq, Orientation::Out});
    }
    data_type[name] = s.add_atom_type(std::move(a));
  }
  if (have_c_atom) {
    AtomType a;
    a.name = "C";
    a.ports = {{"a1", pt_dp, Orientation::Out},
               {"a2", pt_dq, Orientation::Out},
               {"r", pt_croot, Orientation::In},
               {"c", pt_ctlc, Orientation::In},
               {"m1", pt_mono, Orientation::Out},
               {"m2", pt_mono, Orientation::In}};
    t_c = s.add_atom_type(std::move(a));
  }
  if (any_fuel) {
    AtomType a;
    a.name = "G";
    a.ports = {{"s1", pt_g, Orientation::Out},
               {"s2", pt_g, Orientation::In},
               {"t1", pt_g, Orientation::Out},
               {"t2", pt_g, Orientation::In},
               {"f", pt_fuel, Orientation::In}};
    // The full fuel table: charged, spent, and the coupled intermediates
    // (bound at plus, both mid colors, and the final minus).
    a.energy.allow(g_vec(c_plus));
    a.energy.allow(g_vec(c_minus));
    StateVector v = g_vec(c_plus);
    v[kGF] = bound_state(c_plus);
    a.energy.allow(v);
    v[kGF] = bound_state(c_pm);
    a.energy.allow(v);
    v[kGT1] = v[kGT2] = bound_state(c_minus);
    a.energy.allow(v);
    v[kGS1] = v[kGS2] = bound_state(c_minus);
    a.energy.allow(v);
    v[kGF] = bound_state(c_minus);
    a.energy.allow(v);
    t_g = s.add_atom_type(std::move(a));
  }

  // Pool forms. Every species rests as a closed monomer; unbonded atoms
  // have no finite rows at all, which is what keeps loose data inert.
  for (const auto& name : data_order) {
    const AtomTypeId t = data_type[name];
    s.atoms[t].energy.allow(mloop_vec(t));
    s.pooled.push_back(t);
    out.pooled.push_back({name, name, mloop_vec(t)});
  }
  if (have_c_atom) {
    s.atoms[t_c].energy.allow(mloop_vec(t_c));
    s.pooled.push_back(t_c);
    out.pooled.push_back({"C", "C", mloop_vec(t_c)});
  }
  if (any_fuel) {
    s.pooled.push_back(t_g);
    out.pooled.push_back({"G+", "G", g_vec(c_plus)});
    out.pooled.push_back({"G-", "G", g_vec(c_minus)});
    out.fuel_draw = "G+";
    out.fuel_return = "G-";
  }
}

// Static slot list a verb's expansion will color.
std::vector<const char*> color_slots(const MotifEdge& e) {
  switch (e.verb) {
    case MotifVerb::State: return {};
    case MotifVerb::M:
      if (!e.rev) return {"hold"};
      return e.var.empty() ? std::vector<const char*>{}
                           : std::vector<const char*>{"bind"};
    case MotifVerb::X: return {"hold"};
    case MotifVerb::C:
      return e.rev ? std::vector<const char*>{"dock", "work", "bind", "mid"}
                   : std::vector<const char*>{"bind", "work", "hold", "dock",
                                              "park", "mid"};
    case MotifVerb::D:
      if (!e.var.empty())
        return e.rev ? std::vector<const char*>{"bind"}
                     : std::vector<const char*>{"bind", "hold"};
      return e.rev ? std::vector<const char*>{"work", "bind", "mid"}
                   : std::vector<const char*>{"bind", "work", "hold", "mid"};
    case MotifVerb::DStar: return {"work", "hold", "mid"};
    case MotifVerb::S:
      return e.rev ? std::vector<const char*>{"work", "hold"}
                   : std::vector<const char*>{"work"};
  }
  return {};
}

bool Compiler::build_zym(ScriptCtx& sx) {
  const MotifScript& sc = *sx.sc;
  bool ok = true;

  AtomType z;
  z.name = sc.name;
  sx.qtype = s.add_port_type({sc.name + "_q", {}});
  z.ports = {{"qa1", sx.qtype, Orientation::Out},
             {"qa2", sx.qtype, Orientation::In},
             {"qb1", sx.qtype, Orientation::Out},
             {"qb2", sx.qtype, Orientation::In}};

  bool has_f = false, has_c = false, has_r = false;
  for (const auto& e : sc.edges) {
    has_f |= e.verb == MotifVerb::X;
    has_c |= e.verb == MotifVerb::C;
    has_r |= e.verb == MotifVerb::S;
  }
  if (has_f) {
    sx.pf = static_cast<int>(z.ports.size());
    z.ports.push_back({"f", pt_fuel, Orientation::Out});
  }
  if (has_c) {
    sx.pc = static_cast<int>(z.ports.size());
    z.ports.push_back({"C", pt_ctlc, Orientation::Out});
  }
  if (has_r) {
    sx.pr = static_cast<int>(z.ports.size());
    z.ports.push_back({"R", pt_croot, Orientation::Out});
  }

  auto add_ctl = [&](const std::string& t) {
    if (t.empty() || sx.ctl.count(t) || !data_decl.count(t)) return;
    sx.ctl[t] = static_cast<uint32_t>(z.ports.size());
    z.ports.push_back({t, ctl_type.at(t), Orientation::Out});
  };
  auto add_var = [&](const std::string& v) {
    if (v.empty() || sx.var.count(v)) return;
    sx.var[v] = static_cast<uint32_t>(z.ports.size());
    z.ports.push_back({"w_" + v, pt_var, Orientation::Out});
  };
  for (const auto& e : sc.edges) {
    add_ctl(e.atom);
    add_ctl(e.swap_from);
    add_ctl(e.swap_to);
    // D holds the detached or taken child on a control port; D* threads it
    // through a variable instead and needs none.
    if (e.verb == MotifVerb::D)
      for (const auto& x : e.expect) add_ctl(x);
    add_var(e.var);
    add_var(e.handoff_var);
  }
  for (const auto& e : sc.edges) {
    if (e.parent.empty()) continue;
    if (!sx.ctl.count(e.parent)) {
      error(sx, e.span,
            "parent '" + e.parent + "' is never held on a control port");
      ok = false;
      continue;
    }
    const auto it = data_decl.find(e.parent);
    if (it != data_decl.end() &&
        std::find(it->second->children.begin(), it->second->children.end(),
                  e.port) == it->second->children.end()) {
      error(sx, e.span,
            "'" + e.parent + "' has no child slot '" + e.port + "'");
      ok = false;
    }
  }

  sx.zym = s.add_atom_type(std::move(z));
  s.atoms[sx.zym].energy.allow(
      StateVector(s.atoms[sx.zym].ports.size(), kUnbound));

  // Fuel exchanges never move the state loops, so their endpoints share one
  // loop color; everything else keeps its own.
  std::map<std::string, std::string> rep;
  rep["free"] = "free";
  for (const auto& st : sc.states) rep[st] = st;
  std::function<std::string(const std::string&)> find_rep =
      [&](const std::string& x) {
        return rep[x] == x ? x : rep[x] = find_rep(rep[x]);
      };
  for (const auto& e : sc.edges) {
    if (e.verb != MotifVerb::X) continue;
    std::string a = find_rep(e.from), b = find_rep(e.to);
    if (a == b) continue;
    // Keep the earlier name as the class representative.
    auto pos = [&](const std::string& x) {
      if (x == "free") return -1;
      return state_id(sx, x);
    };
    if (pos(b) < pos(a)) std::swap(a, b);
    rep[b] = a;
  }
  for (const auto& st : sc.states) {
    const std::string r = find_rep(st);
    if (r == "free") continue;  // loopless class; states there look free
    if (!sx.qcolor.count(r))
      sx.qcolor[r] = s.add_color(sc.name + "_" + sanitize(r));
    sx.qcolor[st] = sx.qcolor[r];
  }

  // A single loop recolor cannot land where it started.
  for (const auto& e : sc.edges) {
    const bool single = e.verb == MotifVerb::State ||
                        e.verb == MotifVerb::M || e.verb == MotifVerb::S ||
                        (e.verb == MotifVerb::D && !e.var.empty());
    if (!single) continue;
    const ColorId a =
        sx.qcolor.count(e.from) ? sx.qcolor[e.from] : kNoColor;
    const ColorId b = sx.qcolor.count(e.to) ? sx.qcolor[e.to] : kNoColor;
    if (a == b) {
      error(sx, e.span,
            std::string(motif_verb_name(e.verb)) +
                " edge needs distinct loop colors on its endpoints, but "
                "fuel exchanges force '" +
                e.from + "' and '" + e.to + "' together");
      ok = false;
    }
  }

  sx.ecolors.resize(sc.edges.size());
  for (size_t i = 0; i < sc.edges.size(); ++i) {
    for (const char* slot : color_slots(sc.edges[i]))
      sx.ecolors[i].slot[slot] = s.add_color(
          sc.name + "_e" + std::to_string(i + 1) + "_" + slot);
    sx.out_edges[sc.edges[i].from].push_back(static_cast<int>(i));
  }

  // Branch groups must discriminate: expected types may not overlap, and a
  // blind detach may not share its slot with anything else.
  for (const auto& [st, eis] : sx.out_edges) {
    std::map<std::string, std::vector<int>> groups;
    for (int i : eis) {
      const MotifEdge& e = sc.edges[static_cast<size_t>(i)];
      if (e.rev) continue;
      if (e.verb == MotifVerb::D && e.var.empty())
        groups["slot:" + e.parent + ":" + e.port].push_back(i);
      else if (e.verb == MotifVerb::DStar)
        groups["slot:" + e.parent + ":" + e.port].push_back(i);
      else if (e.verb == MotifVerb::D)
        groups["take:" + e.var].push_back(i);
    }
    for (const auto& [key, members] : groups) {
      std::set<std::string> seen;
      for (int i : members) {
        const MotifEdge& e = sc.edges[static_cast<size_t>(i)];
        if (e.verb == MotifVerb::DStar && members.size() > 1) {
          error(sx, e.span,
                "a D* edge must be the only consumer of its child slot at "
                "state '" +
                    st + "'");
          ok = false;
        }
        for (const auto& x : e.expect)
          if (!seen.insert(x).second) {
            error(sx, e.span,
                  "state '" + st + "' has two edges expecting '" + x +
                      "' from the same place");
            ok = false;
          }
      }
    }
  }
  return ok;
}

// ---------------------------------------------------------------------------
// Compiler: applicability

std::string Compiler::why_not(ScriptCtx& sx, int ei, const World& w) const {
  const MotifEdge& e = sx.sc->edges[static_cast<size_t>(ei)];
  auto held = [&](uint32_t port) -> int {
    const EndP p{-1, port};
    for (const TBond& b : w.bonds) {
      if (b.out == p && b.in.atom >= 0) return b.in.atom;
      if (b.in == p && b.out.atom >= 0) return b.out.atom;
    }
    return -1;
  };
  auto free_port = [&](uint32_t port) { return w.zym[port] == kUnbound; };
  auto only_bound_at = [&](const TrackedAtom& a, uint32_t keep) {
    for (size_t i = 0; i < a.vec.size(); ++i)
      if (i != keep && a.vec[i] != kUnbound) return false;
    return true;
  };
  auto slot_ports = [&](const std::string& parent, const std::string& port) {
    const AtomType& pt = s.atoms[data_type.at(parent)];
    return static_cast<uint32_t>(pt.port_index(port + "1"));
  };

  switch (e.verb) {
    case MotifVerb::State: return {};
    case MotifVerb::M: {
      const uint32_t pA = sx.ctl.at(e.atom);
      if (!e.rev) {
        if (!free_port(pA)) return "the " + e.atom + " control is busy";
        if (!e.var.empty() && !free_port(sx.var.at(e.var)))
          return "variable " + e.var + " is busy";
        return {};
      }
      if (e.var.empty()) {
        const int a = held(pA);
        if (a < 0) return "nothing held at the " + e.atom + " control";
        if (!only_bound_at(w.atoms[static_cast<size_t>(a)], kDC))
          return "the held " + e.atom + " is not bare";
        return {};
      }
      const int a = held(sx.var.at(e.var));
      if (a < 0) return "variable " + e.var + " holds nothing";
      const auto& ta = w.atoms[static_cast<size_t>(a)];
      if (ta.type != data_type.at(e.atom))
        return "variable " + e.var + " holds the wrong type";
      if (!only_bound_at(ta, kDW)) return "the held atom is not bare";
      return {};
    }
    case MotifVerb::X: {
      const int a = held(sx.ctl.at(e.swap_from));
      if (a < 0) return "nothing held at the " + e.swap_from + " control";
      if (!only_bound_at(w.atoms[static_cast<size_t>(a)], kDC))
        return "the held " + e.swap_from + " is not bare";
      if (!free_port(sx.ctl.at(e.swap_to)))
        return "the " + e.swap_to + " control is busy";
      if (!free_port(static_cast<uint32_t>(sx.pf)))
        return "the fuel port is busy";
      return {};
    }
    case MotifVerb::C: {
      const uint32_t pA = sx.ctl.at(e.atom);
      const uint32_t pC = static_cast<uint32_t>(sx.pc);
      if (!e.rev) {
        if (!free_port(pA)) return "the " + e.atom + " control is busy";
        if (!free_port(pC)) return "the C control is busy";
        return {};
      }
      const int d = held(pA);
      if (d < 0) return "nothing held at the " + e.atom + " control";
      const auto& td = w.atoms[static_cast<size_t>(d)];
      if (td.vec[kDP1] != kUnbound || td.vec[kDP2] != kUnbound)
        return "the held molecule already has a parent";
      const int c1 = held(pC);
      if (c1 < 0) return "no C atom is parked";
      const auto& tc = w.atoms[static_cast<size_t>(c1)];
      if (tc.vec[kCA1] != kUnbound || tc.vec[kCA2] != kUnbound)
        return "the parked C atom is still holding something";
      return {};
    }
    case MotifVerb::D: {
      if (!e.var.empty()) {
        if (!e.rev) {
          const int a = held(sx.var.at(e.var));
          if (a < 0) return "variable " + e.var + " holds nothing";
          if (w.atoms[static_cast<size_t>(a)].type !=
              data_type.at(e.expect[0]))
            return "variable " + e.var + " does not hold " + e.expect[0];
          if (!free_port(sx.ctl.at(e.expect[0])))
            return "the " + e.expect[0] + " control is busy";
          return {};
        }
        if (held(sx.ctl.at(e.expect[0])) < 0)
          return "nothing held at the " + e.expect[0] + " control";
        if (!free_port(sx.var.at(e.var)))
          return "variable " + e.var + " is busy";
        return {};
      }
      const int p = held(sx.ctl.at(e.parent));
      if (p < 0) return "nothing held at the " + e.parent + " control";
      const auto& tp = w.atoms[static_cast<size_t>(p)];
      const uint32_t x1 = slot_ports(e.parent, e.port);
      if (!e.rev) {
        if (tp.vec[x1] == kUnbound) return "slot " + e.port + " is empty";
        auto it = tp.below.find(x1);
        const auto member = data_type.at(e.expect[0]);
        if (it == tp.below.end() ||
            std::find(it->second.begin(), it->second.end(), member) ==
                it->second.end())
          return "slot " + e.port + " cannot hold " + e.expect[0] + " here";
        if (!free_port(sx.ctl.at(e.expect[0])))
          return "the " + e.expect[0] + " control is busy";
        return {};
      }
      const int child = held(sx.ctl.at(e.expect[0]));
      if (child < 0)
        return "nothing held at the " + e.expect[0] + " control";
      const auto& tc = w.atoms[static_cast<size_t>(child)];
      if (tc.vec[kDP1] != kUnbound || tc.vec[kDP2] != kUnbound)
        return "the held child already has a parent";
      if (tp.vec[x1] != kUnbound) return "slot " + e.port + " is full";
      return {};
    }
    case MotifVerb::DStar: {
      const int p = held(sx.ctl.at(e.parent));
      if (p < 0) return "nothing held at the " + e.parent + " control";
      const auto& tp = w.atoms[static_cast<size_t>(p)];
      const uint32_t x1 = slot_ports(e.parent, e.port);
      if (!e.rev) {
        if (tp.vec[x1] == kUnbound) return "slot " + e.port + " is empty";
        if (!free_port(sx.var.at(e.var)))
          return "variable " + e.var + " is busy";
        auto it = tp.below.find(x1);
        if (it == tp.below.end()) return "slot " + e.port + " is opaque";
        for (const auto& x : e.expect)
          for (AtomTypeId m : it->second)
            if (m == data_type.at(x)) return {};
        return "nothing expected can be below slot " + e.port;
      }
      const int head = held(sx.var.at(e.var));
      if (head < 0) return "variable " + e.var + " holds nothing";
      bool listed = false;
      for (const auto& x : e.expect)
        listed |= w.atoms[static_cast<size_t>(head)].type ==
                  data_type.at(x);
      if (!listed)
        return "variable " + e.var + " holds a type the edge rejects";
      if (tp.vec[x1] != kUnbound) return "slot " + e.port + " is full";
      if (e.handoff && e.handoff_var != e.var &&
          !free_port(sx.var.at(e.handoff_var)))
        return "variable " + e.handoff_var + " is busy";
      return {};
    }
    case MotifVerb::S: {
      const uint32_t pR = static_cast<uint32_t>(sx.pr);
      if (!e.rev) {
        const int d = held(sx.ctl.at(e.atom));
        if (d < 0) return "nothing held at the " + e.atom + " control";
        const auto& td = w.atoms[static_cast<size_t>(d)];
        if (td.vec[kDP1] != kUnbound || td.vec[kDP2] != kUnbound)
          return "the held molecule already has a parent";
        for (size_t cp = kDChild0; cp < td.vec.size(); cp += 2)
          if (td.vec[cp] == kUnbound)
            return "the held molecule is incomplete";
        if (!free_port(pR)) return "the R port is busy";
        return {};
      }
      const int c2 = held(pR);
      if (c2 < 0) return "no C atom on the R port";
      const auto& tc = w.atoms[static_cast<size_t>(c2)];
      if (tc.vec[kCA1] == kUnbound || tc.vec[kCA2] == kUnbound)
        return "the presented molecule is gone";
      if (!free_port(sx.ctl.at(e.atom)))
        return "the " + e.atom + " control is busy";
      return {};
    }
  }
  return "unsupported verb";
}

std::vector<Variant> Compiler::variants(ScriptCtx& sx, int ei,
                                        const World& w) const {
  const MotifEdge& e = sx.sc->edges[static_cast<size_t>(ei)];
  if (e.verb == MotifVerb::C && !e.rev) {
    std::vector<Variant> out{{}};
    if (sx.sc->callable) out.push_back({.neutral = true});
    return out;
  }
  if (e.verb == MotifVerb::D && e.var.empty() && !e.rev)
    return {{.member = data_type.at(e.expect[0]), .has_member = true}};
  if (e.verb == MotifVerb::DStar && !e.rev) {
    int p = -1;
    const EndP pp{-1, sx.ctl.at(e.parent)};
    for (const TBond& b : w.bonds)
      if (b.out == pp) p = b.in.atom;
    const AtomType& pt = s.atoms[data_type.at(e.parent)];
    const uint32_t x1 = static_cast<uint32_t>(pt.port_index(e.port + "1"));
    const auto& below =
        w.atoms[static_cast<size_t>(p)].below.at(x1);
    std::vector<Variant> out;
    for (const auto& x : e.expect) {
      const AtomTypeId m = data_type.at(x);
      if (std::find(below.begin(), below.end(), m) != below.end())
        out.push_back({.member = m, .has_member = true});
    }
    return out;
  }
  return {{}};
}

// ---------------------------------------------------------------------------
// Compiler: driver

void Compiler::fixpoint(ScriptCtx& sx) {
  World seed;
  seed.zym.assign(s.atoms[sx.zym].ports.size(), kUnbound);
  const std::string seed_key = world_key(seed);
  sx.worlds["free"].emplace(seed_key, seed);
  register_snapshot(sx, seed, Owner{sx.index, false, -1}, Span{});

  CompiledUnit& unit = out.units[static_cast<size_t>(sx.index)];
  std::deque<std::pair<std::string, std::string>> todo;
  todo.emplace_back("free", seed_key);
  size_t world_count = 1;

  while (!todo.empty()) {
    auto [st, key] = todo.front();
    todo.pop_front();
    const World w = sx.worlds[st][key];
    auto oe = sx.out_edges.find(st);
    if (oe == sx.out_edges.end()) continue;
    for (int ei : oe->second) {
      if (!why_not(sx, ei, w).empty()) continue;
      const MotifEdge& e = sx.sc->edges[static_cast<size_t>(ei)];
      for (const Variant& v : variants(sx, ei, w)) {
        Run r(*this, sx, ei, w);
        auto& deltas = unit.edges[static_cast<size_t>(ei)].deltas;
        r.rec = deltas.empty() ? &deltas : nullptr;
        switch (e.verb) {
          case MotifVerb::State: r.xp_state(); break;
          case MotifVerb::M: r.xp_m(); break;
          case MotifVerb::X: r.xp_x(); break;
          case MotifVerb::C:
            e.rev ? r.xp_c_release() : r.xp_c_grab(v.neutral);
            break;
          case MotifVerb::D:
            if (!e.var.empty())
              e.rev ? r.xp_d_untake() : r.xp_d_take();
            else if (e.rev)
              r.xp_d_attach();
            else
              r.xp_d_detach(v.member);
            break;
          case MotifVerb::DStar:
            e.rev ? r.xp_dstar_attach() : r.xp_dstar_detach(v.member);
            break;
          case MotifVerb::S:
            e.rev ? r.xp_s_retrieve() : r.xp_s_present();
            break;
        }
        World res = r.finish();
        std::string rk = world_key(res);
        auto& bucket = sx.worlds[e.to];
        if (!bucket.count(rk)) {
          register_snapshot(sx, res,
                            Owner{sx.index, false, state_id(sx, e.to)},
                            e.span);
          bucket.emplace(rk, std::move(res));
          todo.emplace_back(e.to, std::move(rk));
          if (++world_count > 20000) {
            error(sx, e.span,
                  "state expansion does not converge; aborting");
            return;
          }
        }
      }
      if (has_errors(diags)) return;
    }
  }
}

void Compiler::analyze_worlds(ScriptCtx& sx) {
  const MotifScript& sc = *sx.sc;
  for (const auto& st : sc.states)
    if (!sx.worlds.count(st) || sx.worlds[st].empty())
      warning(sx, Span{}, "state '" + st + "' is unreachable");

  for (const auto& [st, bucket] : sx.worlds) {
    auto oe = sx.out_edges.find(st);
    for (const auto& [key, w] : bucket) {
      std::set<std::string> applicable;
      std::vector<std::string> reasons;
      if (oe != sx.out_edges.end())
        for (int ei : oe->second) {
          const MotifEdge& e = sc.edges[static_cast<size_t>(ei)];
          std::string why = why_not(sx, ei, w);
          if (!why.empty()) {
            reasons.push_back("edge " + std::to_string(ei + 1) + ": " + why);
            continue;
          }
          std::string group = "e:" + std::to_string(ei);
          if (!e.rev && (e.verb == MotifVerb::DStar ||
                         (e.verb == MotifVerb::D && e.var.empty())))
            group = "slot:" + e.parent + ":" + e.port;
          else if (!e.rev && e.verb == MotifVerb::D)
            group = "take:" + e.var;
          applicable.insert(std::move(group));
        }
      if (st != "free" && applicable.empty()) {
        std::string msg = "state '" + st + "' has a configuration no edge "
                          "can leave";
        for (const auto& r : reasons) msg += "; " + r;
        error(sx, Span{}, msg);
      }
      if (applicable.size() > 1)
        error(sx, Span{},
              "state '" + st +
                  "' has a configuration where several edges apply; the "
                  "machine could not choose");

      // Branch coverage: everything that can hang below a consumed slot
      // must be expected by some branch.
      if (oe == sx.out_edges.end()) continue;
      std::map<std::pair<std::string, std::string>, std::set<AtomTypeId>>
          expects;
      for (int ei : oe->second) {
        const MotifEdge& e = sc.edges[static_cast<size_t>(ei)];
        if (e.rev || e.parent.empty() || e.verb == MotifVerb::M) continue;
        if (e.verb != MotifVerb::D && e.verb != MotifVerb::DStar) continue;
        if (e.verb == MotifVerb::D && !e.var.empty()) continue;
        for (const auto& x : e.expect)
          expects[{e.parent, e.port}].insert(data_type.at(x));
      }
      for (const auto& [slot, types] : expects) {
        int p = -1;
        const EndP pp{-1, sx.ctl.at(slot.first)};
        for (const TBond& b : w.bonds)
          if (b.out == pp) p = b.in.atom;
        if (p < 0) continue;
        const AtomType& pt = s.atoms[data_type.at(slot.first)];
        const uint32_t x1 =
            static_cast<uint32_t>(pt.port_index(slot.second + "1"));
        auto it = w.atoms[static_cast<size_t>(p)].below.find(x1);
        if (it == w.atoms[static_cast<size_t>(p)].below.end()) continue;
        for (AtomTypeId m : it->second)
          if (!types.count(m))
            error(sx, Span{},
                  "state '" + st + "': a " + s.atoms[m].name +
                      " can sit below " + slot.first + "." + slot.second +
                      " but no edge expects it");
      }
    }
  }
}

void Compiler::finalize() {
  // Resting rows for declared molecule shapes: root under its C parent,
  // value atoms inside and at the end of chains.
  std::set<std::string> kinds;
  auto io_rows = [&](const IoDecl& decl, bool callable) {
    const AtomTypeId t = data_type.at(decl.atom);
    StateVector v(s.atoms[t].ports.size(), kUnbound);
    v[kDP1] = bound_state(c_solid);
    v[kDP2] = bound_state(c_solid);
    for (size_t i = 0; i < decl.fields.size(); ++i) {
      v[kDChild0 + 2 * i] = bound_state(c_solid);
      v[kDChild0 + 2 * i + 1] = bound_state(c_solid);
      kinds.insert(decl.fields[i].kind);
    }
    s.atoms[t].energy.allow(v);
    if (!have_c_atom) return;
    StateVector cv(s.atoms[t_c].ports.size(), kUnbound);
    cv[kCA1] = bound_state(c_solid);
    cv[kCA2] = bound_state(c_solid);
    s.atoms[t_c].energy.allow(cv);
    if (callable) {
      cv[kCR] = bound_state(c_neutral);
      s.atoms[t_c].energy.allow(cv);
    }
  };
  for (const auto& sc : scripts) {
    if (sc.input) io_rows(*sc.input, sc.callable);
    if (sc.output) io_rows(*sc.output, sc.callable);
  }
  auto chain_row = [&](const char* name, bool interior) {
    const AtomTypeId t = data_type.at(name);
    StateVector v(s.atoms[t].ports.size(), kUnbound);
    v[kDP1] = bound_state(c_solid);
    v[kDP2] = bound_state(c_solid);
    if (interior) {
      v[kDChild0] = bound_state(c_solid);
      v[kDChild0 + 1] = bound_state(c_solid);
    }
    s.atoms[t].energy.allow(v);
  };
  if (kinds.count(std::string(kKindPeano))) {
    chain_row("S", true);
    chain_row("Z", false);
  }
  if (kinds.count(std::string(kKindBool))) {
    chain_row("T", false);
    chain_row("F", false);
  }

  // Port types whose palette is defined by use: collect from the tables.
  std::vector<std::set<ColorId>> used(s.port_types.size());
  for (const AtomType& a : s.atoms)
    for (const auto& [vec, cost] : a.energy.rows())
      for (size_t i = 0; i < vec.size(); ++i)
        if (is_bound(vec[i]))
          used[a.ports[i].type].insert(state_color(vec[i]));
  for (size_t i = 0; i < s.port_types.size(); ++i) {
    if (!s.port_types[i].colors.empty()) continue;
    auto& cs = s.port_types[i].colors;
    cs.assign(used[i].begin(), used[i].end());
    if (cs.empty()) cs.push_back(c_m);  // declared but never exercised
  }

  // Unit metadata.
  for (auto& sx : ctx) {
    CompiledUnit& u = out.units[static_cast<size_t>(sx.index)];
    for (const auto& st : sx.sc->states)
      u.state_colors.emplace_back(
          st, sx.qcolor.count(st) ? s.colors[sx.qcolor[st]] : "");
    // Fuel per cycle is well defined when every pass burns the same amount.
    std::map<std::string, int> cnt{{"free", 0}};
    std::deque<std::string> bfs{"free"};
    std::set<int> candidates;
    bool consistent = true;
    while (!bfs.empty() && consistent) {
      std::string st = bfs.front();
      bfs.pop_front();
      auto oe = sx.out_edges.find(st);
      if (oe == sx.out_edges.end()) continue;
      for (int ei : oe->second) {
        const MotifEdge& e = sx.sc->edges[static_cast<size_t>(ei)];
        const int n = cnt[st] + (e.verb == MotifVerb::X ? 1 : 0);
        if (e.to == "free") {
          candidates.insert(n);
          continue;
        }
        auto it = cnt.find(e.to);
        if (it == cnt.end()) {
          cnt[e.to] = n;
          bfs.push_back(e.to);
        } else if (it->second != n) {
          consistent = false;
          break;
        }
      }
    }
    u.fuel_per_cycle =
        consistent && candidates.size() == 1 ? *candidates.begin() : -1;
  }

  Diagnostics sanity = validate_scheme(s);
  for (auto& d : sanity)
    if (d.is_error()) {
      d.message = "compiled scheme is inconsistent: " + d.message;
      diags.push_back(std::move(d));
    }
}

bool Compiler::run() {
  if (!validate_scripts()) return false;
  build_base();

  ctx.resize(scripts.size());
  out.units.resize(scripts.size());
  bool ok = true;
  for (size_t i = 0; i < scripts.size(); ++i) {
    ctx[i].sc = &scripts[i];
    ctx[i].index = static_cast<int>(i);
    CompiledUnit& u = out.units[i];
    u.name = scripts[i].name;
    u.callable = scripts[i].callable;
    u.input = scripts[i].input;
    u.output = scripts[i].output;
    u.edges.resize(scripts[i].edges.size());
    for (size_t k = 0; k < scripts[i].edges.size(); ++k) {
      const MotifEdge& e = scripts[i].edges[k];
      u.edges[k].index = static_cast<uint32_t>(k + 1);
      u.edges[k].from = e.from;
      u.edges[k].to = e.to;
      u.edges[k].verb = e.verb;
      u.edges[k].rev = e.rev;
      u.edges[k].fueled = e.verb == MotifVerb::X;
    }
    ok &= build_zym(ctx[i]);
    u.atom = ctx[i].zym;
  }
  if (!ok || has_errors(diags)) return false;

  for (auto& sx : ctx) {
    fixpoint(sx);
    if (has_errors(diags)) return false;
    analyze_worlds(sx);
  }
  finalize();
  return !has_errors(diags);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public interface

CompiledProgram compile_motifs(const std::vector<MotifScript>& scripts) {
  return compile_motifs_impl(scripts);
}

const std::vector<MotifDelta>& expand_motif(const CompiledProgram& cp,
                                            std::string_view program,
                                            uint32_t edge_index) {
  for (const auto& u : cp.units)
    if (u.name == program) {
      if (edge_index == 0 || edge_index > u.edges.size())
        throw MalformedInput("no edge " + std::to_string(edge_index) +
                             " in program " + std::string(program));
      return u.edges[edge_index - 1].deltas;
    }
  throw MalformedInput("no program named " + std::string(program));
}

std::string CompiledProgram::annotations_json() const {
  nlohmann::json j;
  j["programs"] = nlohmann::json::array();
  for (const auto& u : units) {
    nlohmann::json p;
    p["name"] = u.name;
    p["atom"] = scheme.atoms[u.atom].name;
    p["callable"] = u.callable;
    p["fuel_per_cycle"] = u.fuel_per_cycle;
    p["states"] = nlohmann::json::array();
    for (const auto& [st, color] : u.state_colors)
      p["states"].push_back({{"name", st}, {"loop_color", color}});
    auto io_json = [](const IoDecl& d) {
      nlohmann::json io;
      io["atom"] = d.atom;
      io["fields"] = nlohmann::json::array();
      for (const auto& f : d.fields)
        io["fields"].push_back({{"port", f.slot}, {"kind", f.kind}});
      return io;
    };
    if (u.input) p["input"] = io_json(*u.input);
    if (u.output) p["output"] = io_json(*u.output);
    p["edges"] = nlohmann::json::array();
    for (const auto& e : u.edges) {
      nlohmann::json ej;
      ej["index"] = e.index;
      ej["from"] = e.from;
      ej["to"] = e.to;
      ej["verb"] = motif_verb_name(e.verb);
      ej["rev"] = e.rev;
      ej["fueled"] = e.fueled;
      ej["deltas"] = e.deltas.size();
      p["edges"].push_back(std::move(ej));
    }
    j["programs"].push_back(std::move(p));
  }
  j["parallel"] = nlohmann::json::array();
  for (const auto& d : parallel) {
    nlohmann::json dj;
    dj["width"] = d.width;
    dj["patterns"] = nlohmann::json::array();
    for (const auto& pat : d.patterns) {
      nlohmann::json pj;
      pj["atom"] = scheme.atoms[pat.type].name;
      pj["ports"] = nlohmann::json::array();
      for (const auto& pp : pat.ports) {
        if (pp.kind == PortPattern::Kind::Any)
          pj["ports"].push_back("_");
        else if (pp.kind == PortPattern::Kind::Unbound)
          pj["ports"].push_back("-");
        else
          pj["ports"].push_back(scheme.colors[pp.color]);
      }
      dj["patterns"].push_back(std::move(pj));
    }
    j["parallel"].push_back(std::move(dj));
  }
  if (!fuel_draw.empty())
    j["fuel"] = {{"draw", fuel_draw}, {"return", fuel_return}};
  j["pooled"] = nlohmann::json::array();
  for (const auto& ps : pooled) {
    nlohmann::json pj;
    pj["alias"] = ps.alias;
    pj["atom"] = ps.atom;
    pj["state"] = nlohmann::json::array();
    for (PortState v : ps.vec)
      pj["state"].push_back(is_bound(v)
                                ? scheme.colors[state_color(v)]
                                : std::string("-"));
    j["pooled"].push_back(std::move(pj));
  }
  return j.dump(2) + "\n";
}

std::vector<PropertyReport> decompile_check(const CompiledProgram& cp,
                                            const ConfigBundle& input) {
  ConfigBundle b = input;
  b.parallel.insert(b.parallel.end(), cp.parallel.begin(), cp.parallel.end());

  TransitionGraph g = explore(b.config);
  std::vector<PropertyReport> reports;
  reports.push_back(check_reversibility(g));
  reports.push_back(check_corridor(g, b.parallel));
  for (const auto& u : cp.units) {
    bool present = false;
    for (AtomTypeId t : b.config.instances) present |= t == u.atom;
    if (present) reports.push_back(check_catalysis(g, u.atom));
  }
  if (!cp.fuel_draw.empty()) {
    const int draw = b.config.find_pool(cp.fuel_draw);
    const int ret = b.config.find_pool(cp.fuel_return);
    auto terms = g.terminals();
    if (draw >= 0 && ret >= 0 && !terms.empty()) {
      uint32_t best = terms[0];
      for (uint32_t t : terms)
        if (g.nodes[t].depth > g.nodes[best].depth) best = t;
      auto path = shortest_path(g, g.initial, best);
      reports.push_back(check_fuel_conservation(
          g, path, static_cast<uint32_t>(draw), static_cast<uint32_t>(ret)));
    } else {
      PropertyReport r;
      r.property = "fuel-conservation";
      r.verdict = g.truncated ? Verdict::Inconclusive : Verdict::Fails;
      r.detail = terms.empty() ? "no terminal configuration reached"
                               : "fuel pools are not declared in the input";
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

}  // namespace rbl
