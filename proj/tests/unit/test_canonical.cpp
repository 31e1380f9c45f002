#include <doctest.h>

#include <random>
#include <set>

#include "builders.hpp"
#include "rbl/canonical.hpp"
#include "rbl/moves.hpp"

using namespace rbl;
using namespace rbl::testing;

namespace {

// A directed ring a0 -> a1 -> ... -> a0 over N atoms, with per-edge colors.
SystemConfiguration ring(const Scheme& s, const std::vector<ColorId>& colors) {
  SystemConfiguration c;
  c.scheme = &s;
  const uint32_t n = static_cast<uint32_t>(colors.size());
  for (uint32_t i = 0; i < n; ++i) c.add_instance(0, "a" + std::to_string(i));
  for (uint32_t i = 0; i < n; ++i)
    c.add_bond({{i, 0}, {(i + 1) % n, 1}, colors[i]});
  return c;
}

}  // namespace

TEST_CASE("canonical form ignores instance names and insertion order") {
  Scheme s = chain_scheme();
  ColorId r = *s.color_id("r");
  ColorId b = *s.color_id("b");

  SystemConfiguration c1;
  c1.scheme = &s;
  c1.add_instance(0, "x");
  c1.add_instance(0, "y");
  c1.add_bond({{0, 0}, {1, 1}, r});

  SystemConfiguration c2;
  c2.scheme = &s;
  c2.add_instance(0, "other");
  c2.add_instance(0, "names");
  c2.add_bond({{0, 0}, {1, 1}, r});

  // Same wiring with the roles swapped: 1 -> 0 instead of 0 -> 1.
  SystemConfiguration c3;
  c3.scheme = &s;
  c3.add_instance(0, "p");
  c3.add_instance(0, "q");
  c3.add_bond({{1, 0}, {0, 1}, r});

  CHECK(canonicalize(c1) == canonicalize(c2));
  CHECK(canonicalize(c1) == canonicalize(c3));
  CHECK(canonicalize(c1).digest == canonicalize(c3).digest);

  SystemConfiguration c4 = c2;
  c4.bonds[0].color = b;
  CHECK_FALSE(canonicalize(c1) == canonicalize(c4));
}

TEST_CASE("canonical order is a permutation consistent with the buffer") {
  Scheme s = chain_scheme();
  SystemConfiguration c = ring(s, {0, 0, 1});
  CanonicalForm f = canonicalize(c);
  REQUIRE(f.order.size() == 3);
  std::set<InstanceId> ids(f.order.begin(), f.order.end());
  CHECK(ids.size() == 3);
  CHECK(f.buffer[0] == 3);  // leading word is the instance count
}

TEST_CASE("rotated rings are isomorphic, differently colored rings are not") {
  Scheme s = chain_scheme();
  SystemConfiguration plain = ring(s, {0, 0, 0});
  SystemConfiguration one_b = ring(s, {1, 0, 0});
  SystemConfiguration one_b_rot = ring(s, {0, 1, 0});
  SystemConfiguration two_b = ring(s, {1, 1, 0});

  CHECK(canonicalize(one_b) == canonicalize(one_b_rot));
  CHECK_FALSE(canonicalize(plain) == canonicalize(one_b));
  CHECK_FALSE(canonicalize(one_b) == canonicalize(two_b));
  CHECK(isomorphic_bruteforce(one_b, one_b_rot));
  CHECK_FALSE(isomorphic_bruteforce(plain, one_b));
}

TEST_CASE("regular graphs needing individualization are separated") {
  Scheme s = chain_scheme();
  // Every instance shows the vector (r,r) in both shapes; refinement alone
  // cannot split them.
  SystemConfiguration cycle4 = ring(s, {0, 0, 0, 0});
  SystemConfiguration pairs;
  pairs.scheme = &s;
  for (int i = 0; i < 4; ++i) pairs.add_instance(0);
  pairs.add_bond({{0, 0}, {1, 1}, 0});
  pairs.add_bond({{1, 0}, {0, 1}, 0});
  pairs.add_bond({{2, 0}, {3, 1}, 0});
  pairs.add_bond({{3, 0}, {2, 1}, 0});

  CHECK_FALSE(canonicalize(cycle4) == canonicalize(pairs));
  CHECK_FALSE(isomorphic_bruteforce(cycle4, pairs));

  SystemConfiguration cycle4_shuffled;
  cycle4_shuffled.scheme = &s;
  for (int i = 0; i < 4; ++i) cycle4_shuffled.add_instance(0);
  // Same 4-cycle visiting instances in the order 2, 0, 3, 1.
  cycle4_shuffled.add_bond({{2, 0}, {0, 1}, 0});
  cycle4_shuffled.add_bond({{0, 0}, {3, 1}, 0});
  cycle4_shuffled.add_bond({{3, 0}, {1, 1}, 0});
  cycle4_shuffled.add_bond({{1, 0}, {2, 1}, 0});
  CHECK(canonicalize(cycle4) == canonicalize(cycle4_shuffled));
  CHECK(isomorphic_bruteforce(cycle4, cycle4_shuffled));
}

TEST_CASE("pool entries are structural, aliases are not") {
  Scheme s = monomer_scheme();
  SystemConfiguration a;
  a.scheme = &s;
  a.add_instance(0, "h");
  a.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"}), 1.0));

  SystemConfiguration b = a;
  b.pools[0].alias = "renamed";
  CHECK(canonicalize(a) == canonicalize(b));

  SystemConfiguration c = a;
  c.pools[0].conc = 2.0;
  CHECK_FALSE(canonicalize(a) == canonicalize(c));

  SystemConfiguration d = a;
  d.pools[0].count = 3;  // finite mode differs from chemostatted
  CHECK_FALSE(canonicalize(a) == canonicalize(d));

  SystemConfiguration e = a;
  e.pools.clear();
  CHECK_FALSE(canonicalize(a) == canonicalize(e));
}

TEST_CASE("empty configurations canonicalize") {
  Scheme s = chain_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  CanonicalForm f = canonicalize(c);
  CHECK(f.buffer[0] == 0);
  CHECK(f.order.empty());
}

TEST_CASE("canonical equality agrees with brute-force isomorphism on random pairs") {
  Scheme s = chain_scheme();
  SystemConfiguration seed;
  seed.scheme = &s;
  for (int i = 0; i < 4; ++i) seed.add_instance(0);

  // Collect configurations from a seeded random walk.
  std::mt19937_64 rng(20260819);
  std::vector<SystemConfiguration> samples{seed};
  SystemConfiguration cur = seed;
  for (int step = 0; step < 120; ++step) {
    auto ms = legal_moves(cur);
    if (ms.empty()) break;
    cur = apply_move(cur, ms[rng() % ms.size()]);
    samples.push_back(cur);
  }
  REQUIRE(samples.size() > 20);

  size_t equal_pairs = 0;
  for (size_t i = 0; i < samples.size(); i += 3) {
    for (size_t j = i + 1; j < samples.size(); j += 5) {
      bool canon = canonicalize(samples[i]) == canonicalize(samples[j]);
      bool brute = isomorphic_bruteforce(samples[i], samples[j]);
      CHECK(canon == brute);
      equal_pairs += canon;
    }
  }
  // The walk revisits shapes, so both outcomes appear.
  CHECK(equal_pairs > 0);
}

TEST_CASE("digest distinguishes draw-count differences under finite pools") {
  Scheme s = monomer_scheme();
  SystemConfiguration c;
  c.scheme = &s;
  c.add_instance(0, "h");
  c.pools.push_back(make_pool(s, "Mfree", 1, sv(s, {"-", "m", "m"}), 0.0, 2));
  auto ms = legal_moves(c);
  REQUIRE(ms.size() == 1);
  SystemConfiguration drawn = apply_move(c, ms[0]);
  // Same instances and bonds could exist at count 2, but the pool count is
  // part of identity in finite mode.
  SystemConfiguration fake = drawn;
  fake.pools[0].count = 2;
  CHECK_FALSE(canonicalize(drawn) == canonicalize(fake));
}
