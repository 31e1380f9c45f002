#include <doctest.h>

#include "builders.hpp"
#include "rbl/config.hpp"

using namespace rbl;
using namespace rbl::testing;

namespace {

SystemConfiguration two_atoms(const Scheme& s) {
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "a");
  c.add_instance(0, "b");
  return c;
}

}  // namespace

TEST_CASE("instances get default names from the counter") {
  Scheme s = chain_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  InstanceId i0 = c.add_instance(0);
  InstanceId i1 = c.add_instance(0, "named");
  InstanceId i2 = c.add_instance(0);
  CHECK(i0 == 0);
  CHECK(i1 == 1);
  CHECK(i2 == 2);
  CHECK(c.names[0] == "#0");
  CHECK(c.names[1] == "named");
  CHECK(c.names[2] == "#1");
  CHECK(c.find_instance("named") == 1);
  CHECK(c.find_instance("ghost") == -1);
}

TEST_CASE("bonds stay sorted as they are added") {
  Scheme s = chain_scheme();
  SystemConfiguration c = two_atoms(s);
  c.add_bond({{1, 0}, {0, 1}, 0});
  c.add_bond({{0, 0}, {1, 1}, 0});
  REQUIRE(c.bonds.size() == 2);
  CHECK(c.bonds[0].from.inst == 0);
  CHECK(c.bonds[1].from.inst == 1);
}

TEST_CASE("port states reflect the bond list") {
  Scheme s = chain_scheme();
  SystemConfiguration c = two_atoms(s);
  c.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
  auto vecs = c.port_states();
  REQUIRE(vecs.size() == 2);
  CHECK(vecs[0] == sv(s, {"r", "-"}));
  CHECK(vecs[1] == sv(s, {"-", "r"}));
}

TEST_CASE("port states allow self-loops") {
  Scheme s = chain_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "solo");
  c.add_bond({{0, 0}, {0, 1}, *s.color_id("b")});
  CHECK(c.port_states()[0] == sv(s, {"b", "b"}));
}

TEST_CASE("port state derivation rejects malformed bonds") {
  Scheme s = chain_scheme();
  SUBCASE("missing instance") {
    SystemConfiguration c = two_atoms(s);
    c.add_bond({{0, 0}, {5, 1}, 0});
    CHECK_THROWS_AS(c.port_states(), MalformedInput);
  }
  SUBCASE("missing port") {
    SystemConfiguration c = two_atoms(s);
    c.add_bond({{0, 0}, {1, 9}, 0});
    CHECK_THROWS_AS(c.port_states(), MalformedInput);
  }
  SUBCASE("wrong orientation") {
    SystemConfiguration c = two_atoms(s);
    c.add_bond({{0, 1}, {1, 1}, 0});  // from must be an out port
    CHECK_THROWS_AS(c.port_states(), MalformedInput);
  }
  SUBCASE("double bond on one port") {
    SystemConfiguration c = two_atoms(s);
    c.add_instance(0, "c");
    c.add_bond({{0, 0}, {1, 1}, 0});
    c.add_bond({{2, 0}, {1, 1}, 0});
    CHECK_THROWS_AS(c.port_states(), MalformedInput);
  }
  SUBCASE("color not admitted by the port type") {
    SystemConfiguration c = two_atoms(s);
    c.add_bond({{0, 0}, {1, 1}, 77});
    CHECK_THROWS_AS(c.port_states(), MalformedInput);
  }
  SUBCASE("no scheme") {
    SystemConfiguration c;
    CHECK_THROWS_AS(c.port_states(), MalformedInput);
  }
  SUBCASE("port types differ across the bond") {
    Scheme t = monomer_scheme();
    SystemConfiguration c;
    c.scheme = &t;
    c.add_instance(0, "h");   // H.p is a hook out port
    c.add_instance(1, "m");   // M.m2 is a mono in port
    c.add_bond({{0, 0}, {1, 2}, *t.color_id("h")});
    CHECK_THROWS_AS(c.port_states(), MalformedInput);
  }
}

TEST_CASE("configuration energy sums instance energies") {
  Scheme s = chain_scheme();
  // Give the bound rows distinct costs.
  s.atoms[0].energy.allow(sv(s, {"r", "-"}), 1.0);
  s.atoms[0].energy.allow(sv(s, {"-", "r"}), 2.0);
  SystemConfiguration c = two_atoms(s);
  CHECK(config_energy(c) == 0.0);
  c.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
  CHECK(config_energy(c) == 3.0);
  CHECK(config_valid(c));
}

TEST_CASE("an unlisted vector makes the configuration invalid") {
  Scheme s = chain_scheme();
  SystemConfiguration c = two_atoms(s);
  c.add_instance(0, "c");
  c.add_bond({{0, 0}, {1, 1}, *s.color_id("r")});
  c.add_bond({{1, 0}, {2, 1}, *s.color_id("b")});  // b1 becomes (b, r): unlisted
  CHECK(config_energy(c) == kInfiniteEnergy);
  CHECK_FALSE(config_valid(c));
}

TEST_CASE("pool lookup by alias and by species key") {
  Scheme s = monomer_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"}), 0.5));
  CHECK(c.find_pool("Mfree") == 0);
  CHECK(c.find_pool("other") == -1);
  CHECK(c.find_pool(1, sv(s, {"-", "m", "m"})) == 0);
  CHECK(c.find_pool(0, sv(s, {"-", "m", "m"})) == -1);
  CHECK(c.pools[0].available());
  CHECK_FALSE(c.pools[0].finite());
  c.pools[0].conc = 0.0;
  CHECK_FALSE(c.pools[0].available());
  c.pools[0].count = 2;
  CHECK(c.pools[0].finite());
  CHECK(c.pools[0].available());
  c.pools[0].count = 0;
  CHECK_FALSE(c.pools[0].available());
}
