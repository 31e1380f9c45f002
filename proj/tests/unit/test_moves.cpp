#include <doctest.h>

#include <algorithm>
#include <set>

#include "builders.hpp"
#include "oracles.hpp"
#include "rbl/canonical.hpp"
#include "rbl/moves.hpp"

using namespace rbl;
using namespace rbl::testing;

namespace {

size_t count_kind(const std::vector<Move>& ms, MoveKind k) {
  return std::count_if(ms.begin(), ms.end(),
                       [&](const Move& m) { return m.kind == k; });
}

SystemConfiguration chain_pair(const Scheme& s) {
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "a");
  c.add_instance(0, "b");
  return c;
}

}  // namespace

TEST_CASE("kind names and inverses") {
  CHECK(move_kind_name(MoveKind::Form) == doctest::String("form"));
  CHECK(move_kind_name(MoveKind::Return) == doctest::String("return"));
  CHECK(inverse_kind(MoveKind::Form) == MoveKind::Break);
  CHECK(inverse_kind(MoveKind::Break) == MoveKind::Form);
  CHECK(inverse_kind(MoveKind::Recolor) == MoveKind::Recolor);
  CHECK(inverse_kind(MoveKind::Draw) == MoveKind::Return);
  CHECK(inverse_kind(MoveKind::Return) == MoveKind::Draw);
}

TEST_CASE("move enumeration on an unbonded pair") {
  Scheme s = chain_scheme();
  SystemConfiguration c = chain_pair(s);
  auto ms = legal_moves(c);
  // Two cross forms each way and two self-loops per atom, two colors each.
  CHECK(ms.size() == 8);
  CHECK(count_kind(ms, MoveKind::Form) == 8);
  for (const Move& m : ms) {
    SystemConfiguration n = apply_move(c, m);
    CHECK(config_valid(n));
    CHECK(adjacent(c, n));
  }
}

TEST_CASE("move enumeration around one bond") {
  Scheme s = chain_scheme();
  SystemConfiguration c = chain_pair(s);
  c.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
  auto ms = legal_moves(c);
  REQUIRE(ms.size() == 3);
  CHECK(count_kind(ms, MoveKind::Form) == 1);     // b.o -> a.i :r only
  CHECK(count_kind(ms, MoveKind::Break) == 1);
  CHECK(count_kind(ms, MoveKind::Recolor) == 1);  // r -> b as a pair
  for (const Move& m : ms) {
    if (m.kind != MoveKind::Form) continue;
    CHECK(m.from == PortRef{1, 0});
    CHECK(m.to == PortRef{0, 1});
    CHECK(m.color == *s.color_id("r"));
  }
}

TEST_CASE("enumeration matches the brute-force neighbor oracle") {
  Scheme s = chain_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "a");
  c.add_instance(0, "b");
  c.add_instance(0, "c");

  // Walk the pool-free state space; at every visited configuration the fast
  // enumerator and the brute-force single-event oracle must agree exactly.
  std::vector<SystemConfiguration> frontier{c};
  std::set<std::vector<Bond>> seen{c.bonds};
  size_t checked = 0;
  while (!frontier.empty() && checked < 60) {
    SystemConfiguration cur = std::move(frontier.back());
    frontier.pop_back();
    ++checked;
    std::vector<SystemConfiguration> fast;
    for (const Move& m : legal_moves(cur)) fast.push_back(apply_move(cur, m));
    CHECK(bond_sets(fast) == bond_sets(bruteforce_neighbors(cur)));
    for (auto& n : fast)
      if (seen.insert(n.bonds).second) frontier.push_back(std::move(n));
  }
  CHECK(checked >= 20);  // the walk actually covered ground
}

TEST_CASE("every move is invertible by a legal move") {
  Scheme s = monomer_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "h1");
  c.add_instance(0, "h2");
  c.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"})));

  // Depth-first over a few layers, crossing draw/return boundaries.
  std::vector<SystemConfiguration> stack{c};
  std::set<std::vector<uint64_t>> seen{canonicalize(c).buffer};
  size_t checked = 0;
  while (!stack.empty() && checked < 30) {
    SystemConfiguration cur = std::move(stack.back());
    stack.pop_back();
    ++checked;
    CanonicalForm cur_form = canonicalize(cur);
    for (const Move& m : legal_moves(cur)) {
      SystemConfiguration n = apply_move(cur, m);
      CHECK(config_valid(n));
      bool inverted = false;
      for (const Move& w : legal_moves(n)) {
        if (w.kind != inverse_kind(m.kind)) continue;
        if (canonicalize(apply_move(n, w)) == cur_form) {
          inverted = true;
          break;
        }
      }
      CHECK(inverted);
      if (seen.insert(canonicalize(n).buffer).second) stack.push_back(std::move(n));
    }
  }
  CHECK(checked >= 5);
}

TEST_CASE("pool draw composes instantiation with one bond") {
  Scheme s = monomer_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "h");
  c.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"})));

  auto ms = legal_moves(c);
  REQUIRE(ms.size() == 1);
  const Move& d = ms[0];
  CHECK(d.kind == MoveKind::Draw);
  CHECK(d.from == PortRef{0, 0});  // H.p, the existing out port
  CHECK(d.to == PortRef{1, 0});    // M.c on the not-yet-existing instance
  CHECK(d.color == *s.color_id("h"));
  CHECK(describe_move(c, d) == "draw h.p->Mfree(new).c :h [Mfree]");

  SystemConfiguration n = apply_move(c, d);
  REQUIRE(n.instances.size() == 2);
  CHECK(n.instances[1] == 1);
  CHECK(n.names[1] == "Mfree#0");
  REQUIRE(n.bonds.size() == 2);  // the draw bond plus the free-state loop
  auto vecs = n.port_states();
  CHECK(vecs[0] == sv(s, {"h"}));
  CHECK(vecs[1] == sv(s, {"h", "m", "m"}));
}

TEST_CASE("pool return supersedes the bare break") {
  Scheme s = monomer_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "h");
  c.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"})));
  SystemConfiguration drawn = apply_move(c, legal_moves(c)[0]);

  auto ms = legal_moves(drawn);
  REQUIRE(ms.size() == 2);
  CHECK(count_kind(ms, MoveKind::Return) == 1);  // never a bare break of h.p
  CHECK(count_kind(ms, MoveKind::Break) == 1);   // opening the m loop is fine
  for (const Move& m : ms) {
    if (m.kind != MoveKind::Return) continue;
    CHECK(m.removed == 1);
    SystemConfiguration back = apply_move(drawn, m);
    CHECK(back.instances.size() == 1);
    CHECK(back.bonds.empty());
    CHECK(canonicalize(back) == canonicalize(c));
  }
}

TEST_CASE("finite pools are conserved by draw and return") {
  Scheme s = monomer_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "h");
  c.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"}), 0.0, 1));

  auto ms = legal_moves(c);
  REQUIRE(ms.size() == 1);
  SystemConfiguration drawn = apply_move(c, ms[0]);
  CHECK(drawn.pools[0].count == 0);
  CHECK_FALSE(drawn.pools[0].available());

  for (const Move& m : legal_moves(drawn)) {
    if (m.kind != MoveKind::Return) continue;
    CHECK(apply_move(drawn, m).pools[0].count == 1);
  }

  SUBCASE("an exhausted pool offers no draws") {
    c.pools[0].count = 0;
    CHECK(legal_moves(c).empty());
  }
}

TEST_CASE("draw and return energy deltas account the pool side at free energy") {
  Scheme s = monomer_scheme();
  s.atoms[0].energy.allow(sv(s, {"h"}), 0.25);
  s.atoms[1].energy.allow(sv(s, {"-", "m", "m"}), 0.5);
  s.atoms[1].energy.allow(sv(s, {"h", "m", "m"}), 1.0);
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "h");
  c.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"})));

  auto ms = legal_moves(c);
  REQUIRE(ms.size() == 1);
  double d = move_energy_delta(c, c.port_states(), ms[0]);
  CHECK(d == doctest::Approx(0.25 + 1.0 - 0.5));

  SystemConfiguration drawn = apply_move(c, ms[0]);
  for (const Move& m : legal_moves(drawn)) {
    if (m.kind != MoveKind::Return) continue;
    CHECK(move_energy_delta(drawn, drawn.port_states(), m) ==
          doctest::Approx(0.5 - 1.0 - 0.25));
  }
}

TEST_CASE("bond-event deltas match configuration energy differences") {
  Scheme s = chain_scheme();
  s.atoms[0].energy.allow(sv(s, {"r", "-"}), 0.5);
  s.atoms[0].energy.allow(sv(s, {"-", "r"}), 0.75);
  s.atoms[0].energy.allow(sv(s, {"r", "r"}), 2.0);
  s.atoms[0].energy.allow(sv(s, {"b", "b"}), 0.125);
  SystemConfiguration c = chain_pair(s);
  c.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
  auto vecs = c.port_states();
  double base = config_energy(c);
  for (const Move& m : legal_moves(c)) {
    double d = move_energy_delta(c, vecs, m);
    CHECK(d == doctest::Approx(config_energy(apply_move(c, m)) - base));
  }
}

TEST_CASE("adjacency is exactly one bond event between valid configurations") {
  Scheme s = chain_scheme();
  SystemConfiguration c0 = chain_pair(s);
  SystemConfiguration c1 = c0;
  c1.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
  SystemConfiguration c2 = c1;
  c2.add_bond({{1, 0}, {0, 1}, *s.color_id("r")});
  SystemConfiguration c1b = c0;
  c1b.add_bond({{0, 0}, {1, 1}, *s.color_id("b")});

  CHECK(adjacent(c0, c1));
  CHECK(adjacent(c1, c0));
  CHECK(adjacent(c1, c2));
  CHECK(adjacent(c1, c1b));        // recolor of the same bond
  CHECK(adjacent(c0, c1b));        // forming :b directly is one event
  CHECK_FALSE(adjacent(c0, c2));   // two events apart
  CHECK_FALSE(adjacent(c0, c0));   // zero events apart

  SUBCASE("invalid endpoint configurations are never adjacent") {
    SystemConfiguration bad = c0;
    bad.add_instance(0, "c");
    bad.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
    bad.add_bond({{1, 0}, {2, 1}, *s.color_id("b")});  // (b,r) unlisted
    SystemConfiguration good = c0;
    good.add_instance(0, "c");
    good.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
    CHECK_FALSE(adjacent(good, bad));
  }
  SUBCASE("instance mismatch throws") {
    SystemConfiguration other = c0;
    other.add_instance(0, "c");
    CHECK_THROWS_AS(adjacent(c0, other), MalformedInput);
  }
  SUBCASE("pool key mismatch throws") {
    Scheme t = monomer_scheme();
    SystemConfiguration p1;
    p1.scheme = &t;
    p1.add_instance(0, "h");
    SystemConfiguration p2 = p1;
    p2.pools.push_back(make_pool(t, "Mfree", 1, sv(t, {"-", "m", "m"})));
    CHECK_THROWS_AS(adjacent(p1, p2), MalformedInput);
  }
}

TEST_CASE("describe_move covers every kind") {
  Scheme s = chain_scheme();
  SystemConfiguration c = chain_pair(s);
  c.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
  std::set<std::string> texts;
  for (const Move& m : legal_moves(c)) texts.insert(describe_move(c, m));
  CHECK(texts.count("break a.o->b.i :r"));
  CHECK(texts.count("recolor a.o->b.i :b (was r)"));
  CHECK(texts.count("form b.o->a.i :r"));
}
