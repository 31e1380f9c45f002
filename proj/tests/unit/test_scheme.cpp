#include <doctest.h>

#include "builders.hpp"
#include "rbl/scheme.hpp"

using namespace rbl;
using namespace rbl::testing;

TEST_CASE("lookups resolve declared names and reject unknown ones") {
  Scheme s = chain_scheme();
  CHECK(s.color_id("r") == ColorId{0});
  CHECK(s.color_id("b") == ColorId{1});
  CHECK_FALSE(s.color_id("g").has_value());
  CHECK(s.port_type_id("link") == PortTypeId{0});
  CHECK_FALSE(s.port_type_id("nope").has_value());
  CHECK(s.atom_type_id("N") == AtomTypeId{0});
  CHECK_FALSE(s.atom_type_id("M").has_value());
  CHECK(s.atoms[0].port_index("o") == 0);
  CHECK(s.atoms[0].port_index("i") == 1);
  CHECK(s.atoms[0].port_index("x") == -1);
}

TEST_CASE("add_color is idempotent per name") {
  Scheme s;
  CHECK(s.add_color("x") == 0);
  CHECK(s.add_color("y") == 1);
  CHECK(s.add_color("x") == 0);
  CHECK(s.colors.size() == 2);
}

TEST_CASE("atom_energy falls back to infinity and checks arity") {
  Scheme s = chain_scheme();
  const AtomType& n = s.atoms[0];
  CHECK(atom_energy(n, sv(s, {"-", "-"})) == 0.0);
  CHECK(atom_energy(n, sv(s, {"r", "b"})) == kInfiniteEnergy);
  CHECK_THROWS_AS(atom_energy(n, sv(s, {"r"})), MalformedInput);
  CHECK_THROWS_AS(atom_energy(n, sv(s, {"r", "r", "r"})), MalformedInput);
}

TEST_CASE("energy table stores costs") {
  Scheme s = chain_scheme();
  AtomType a;
  a.name = "Q";
  a.ports = {{"o", 0, Orientation::Out}};
  allow(a, s, {"-"}, 0.0);
  allow(a, s, {"r"}, 2.5);
  CHECK(a.energy.energy(sv(s, {"r"})) == 2.5);
  CHECK(a.energy.listed(sv(s, {"r"})));
  CHECK_FALSE(a.energy.listed(sv(s, {"b"})));
  CHECK(a.energy.size() == 2);
}

TEST_CASE("a well-formed scheme validates cleanly") {
  CHECK(validate_scheme(chain_scheme()).empty());
  CHECK(validate_scheme(monomer_scheme()).empty());
}

TEST_CASE("validation rejects duplicate names") {
  Scheme s = chain_scheme();
  s.colors.push_back("r");
  s.port_types.push_back({"link", {0}});
  AtomType dup;
  dup.name = "N";
  s.add_atom_type(std::move(dup));
  Diagnostics ds = validate_scheme(s);
  REQUIRE(ds.size() >= 3);
  CHECK(has_errors(ds));
}

TEST_CASE("validation rejects structural defects") {
  SUBCASE("port type with no colors") {
    Scheme s = chain_scheme();
    s.port_types.push_back({"empty", {}});
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("port type referencing an undeclared color") {
    Scheme s = chain_scheme();
    s.port_types.push_back({"bad", {99}});
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("repeated port label") {
    Scheme s = chain_scheme();
    s.atoms[0].ports.push_back({"o", 0, Orientation::In});
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("port with undeclared port type") {
    Scheme s = chain_scheme();
    AtomType a;
    a.name = "Q";
    a.ports = {{"p", 7, Orientation::In}};
    s.add_atom_type(std::move(a));
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("energy row with wrong arity") {
    Scheme s = chain_scheme();
    s.atoms[0].energy.allow(sv(s, {"r"}));
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("negative energy") {
    Scheme s = chain_scheme();
    s.atoms[0].energy.allow(sv(s, {"r", "r"}), -1.0);
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("energy row using a color the port type does not admit") {
    Scheme s = chain_scheme();
    ColorId g = s.add_color("g");
    s.atoms[0].energy.allow({bound_state(g), kUnbound});
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("pooled flag on an undeclared atom") {
    Scheme s = chain_scheme();
    s.pooled.push_back(9);
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("pooled atom twice") {
    Scheme s = monomer_scheme();
    s.pooled.push_back(1);
    CHECK(has_errors(validate_scheme(s)));
  }
  SUBCASE("pooled atom with no free state") {
    Scheme s = chain_scheme();
    // N's only self-pairable rows are (r,r) and (b,b); delist them.
    AtomType& n = s.atoms[0];
    AtomType replacement;
    replacement.name = n.name;
    replacement.ports = n.ports;
    allow(replacement, s, {"r", "-"});
    n = std::move(replacement);
    s.pooled.push_back(0);
    CHECK(has_errors(validate_scheme(s)));
  }
}

TEST_CASE("free states pair bound ports into self-loops") {
  Scheme s = chain_scheme();
  auto fs = free_states(s, 0);
  // (-,-) with no loops, (r,r) and (b,b) with one loop each.
  REQUIRE(fs.size() == 3);
  CHECK(fs[0].vec == sv(s, {"-", "-"}));
  CHECK(fs[0].loops.empty());
  CHECK(fs[1].vec == sv(s, {"r", "r"}));  // sorted by vector
  CHECK(fs[2].vec == sv(s, {"b", "b"}));
  REQUIRE(fs[1].loops.size() == 1);
  REQUIRE(fs[2].loops.size() == 1);
  CHECK(fs[1].loops[0].out_port == 0);
  CHECK(fs[1].loops[0].in_port == 1);
  CHECK(fs[1].loops[0].color == *s.color_id("r"));
}

TEST_CASE("free states exclude half-bound vectors") {
  Scheme s = chain_scheme();
  auto fs = free_states(s, 0);
  for (const auto& f : fs) {
    size_t bound = 0;
    for (PortState p : f.vec) bound += is_bound(p);
    CHECK(bound % 2 == 0);
  }
  // (r,-) is listed but has an unpairable bound port.
  for (const auto& f : fs) CHECK(f.vec != sv(s, {"r", "-"}));
}

TEST_CASE("free states of the pooled monomer") {
  Scheme s = monomer_scheme();
  auto fs = free_states(s, 1);
  // (h,-,-) leaves c bound with no partner; (h,m,m) likewise; only the free
  // row and... (h,m,m) has c=h bound, unpairable (c is the only hook port).
  REQUIRE(fs.size() == 1);
  CHECK(fs[0].vec == sv(s, {"-", "m", "m"}));
  REQUIRE(fs[0].loops.size() == 1);
  CHECK(fs[0].loops[0].out_port == 1);
  CHECK(fs[0].loops[0].in_port == 2);
  CHECK(fs[0].loops[0].color == *s.color_id("m"));
}

TEST_CASE("greedy pairing takes the first compatible in port") {
  // Atom with two out and two in ports of one type; the all-bound row admits
  // two perfect pairings, and the canonical one is o1->i1, o2->i2.
  Scheme s;
  ColorId m = s.add_color("m");
  s.add_port_type({"t", {m}});
  AtomType a;
  a.name = "A";
  a.ports = {{"o1", 0, Orientation::Out},
             {"i1", 0, Orientation::In},
             {"o2", 0, Orientation::Out},
             {"i2", 0, Orientation::In}};
  allow(a, s, {"m", "m", "m", "m"});
  s.add_atom_type(std::move(a));
  auto fs = free_states(s, 0);
  REQUIRE(fs.size() == 1);
  REQUIRE(fs[0].loops.size() == 2);
  CHECK(fs[0].loops[0].out_port == 0);
  CHECK(fs[0].loops[0].in_port == 1);
  CHECK(fs[0].loops[1].out_port == 2);
  CHECK(fs[0].loops[1].in_port == 3);
}
