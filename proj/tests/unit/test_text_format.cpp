#include <doctest.h>

#include <string>

#include "builders.hpp"
#include "rbl/text_format.hpp"

using namespace rbl;
using namespace rbl::testing;

namespace {

Scheme must_parse(const std::string& text) {
  ParsedScheme r = parse_scheme(text, "test.rbl");
  for (const Diagnostic& d : r.diags) INFO(format_diagnostic(d));
  REQUIRE_FALSE(has_errors(r.diags));
  return std::move(r.scheme);
}

ConfigBundle must_parse_config(const std::string& text, const Scheme& s) {
  ParsedConfig r = parse_config(text, s, "test.rblc");
  for (const Diagnostic& d : r.diags) INFO(format_diagnostic(d));
  REQUIRE_FALSE(has_errors(r.diags));
  return std::move(r.bundle);
}

const char* kTrack = R"(
# track monomer with a cargo port
colors { s d }
porttype link { s }
porttype foot { s d }

atom T {
  ports { L: link in  R: link out  w: foot in }
  energy {
    allow (s, s, _)          # wildcard: unbound or any foot color
  }
}
)";

}  // namespace

TEST_CASE("a small scheme parses with ids in declaration order") {
  Scheme s = must_parse(kTrack);
  CHECK(s.colors == std::vector<std::string>{"s", "d"});
  REQUIRE(s.port_types.size() == 2);
  CHECK(s.port_types[0].name == "link");
  CHECK(s.port_types[1].colors == std::vector<ColorId>{0, 1});
  REQUIRE(s.atoms.size() == 1);
  const AtomType& t = s.atoms[0];
  CHECK(t.name == "T");
  REQUIRE(t.ports.size() == 3);
  CHECK(t.ports[0].orientation == Orientation::In);
  CHECK(t.ports[1].orientation == Orientation::Out);
  CHECK(t.ports[2].type == 1);
}

TEST_CASE("wildcards expand to unbound plus each admitted color") {
  Scheme s = must_parse(kTrack);
  const AtomType& t = s.atoms[0];
  CHECK(t.energy.size() == 3);
  CHECK(t.energy.listed(sv(s, {"s", "s", "-"})));
  CHECK(t.energy.listed(sv(s, {"s", "s", "s"})));
  CHECK(t.energy.listed(sv(s, {"s", "s", "d"})));
  CHECK_FALSE(t.energy.listed(sv(s, {"-", "s", "-"})));
}

TEST_CASE("later rows override wildcard-expanded ones") {
  Scheme s = must_parse(std::string(kTrack) +
                        "atom U { ports { w: foot in } energy {\n"
                        "  allow (_) cost 2\n  allow (d) cost 0.5\n} }\n");
  const AtomType& u = s.atoms[1];
  CHECK(u.energy.energy(sv(s, {"-"})) == 2.0);
  CHECK(u.energy.energy(sv(s, {"s"})) == 2.0);
  CHECK(u.energy.energy(sv(s, {"d"})) == 0.5);
}

TEST_CASE("parenthesized symbol names are identifiers") {
  Scheme s = must_parse(
      "colors { m }\n"
      "porttype ctl { m }\n"
      "atom (+') { ports { c: ctl in } energy { allow (-) allow (m) } }\n"
      "atom (\xc2\xac) { ports { c: ctl in } energy { allow (-) } }\n"
      "atom (\xe2\x96\xa1~) { ports { c: ctl in } energy { allow (-) } }\n");
  CHECK(s.atom_type_id("(+')").has_value());
  CHECK(s.atom_type_id("(\xc2\xac)").has_value());        // negation glyph
  CHECK(s.atom_type_id("(\xe2\x96\xa1~)").has_value());   // box glyph
  CHECK(s.atoms[0].energy.size() == 2);
}

TEST_CASE("pool lines mark atoms as pooled") {
  Scheme s = must_parse(std::string(kTrack) + "pool T\n");
  CHECK(s.pooled == std::vector<AtomTypeId>{0});
}

TEST_CASE("scheme parse errors carry locations and do not cascade forever") {
  SUBCASE("unknown color in a port type") {
    ParsedScheme r = parse_scheme("colors { a }\nporttype p { ghost }", "x");
    CHECK(has_errors(r.diags));
    CHECK(r.diags[0].span.line == 2);
  }
  SUBCASE("unknown port type on a port") {
    ParsedScheme r = parse_scheme(
        "colors { a }\natom A { ports { x: ghost in } energy { } }", "x");
    CHECK(has_errors(r.diags));
  }
  SUBCASE("bad top-level token") {
    ParsedScheme r = parse_scheme("colors { a }\n12 atom", "x");
    CHECK(has_errors(r.diags));
  }
  SUBCASE("unterminated atom block") {
    ParsedScheme r = parse_scheme("colors { a }\natom A { ports {", "x");
    CHECK(has_errors(r.diags));
  }
  SUBCASE("tuple arity mismatch") {
    ParsedScheme r = parse_scheme(
        "colors { a }\nporttype p { a }\n"
        "atom A { ports { x: p in } energy { allow (a, a) } }",
        "x");
    CHECK(has_errors(r.diags));
  }
  SUBCASE("unknown color inside a tuple") {
    ParsedScheme r = parse_scheme(
        "colors { a }\nporttype p { a }\n"
        "atom A { ports { x: p in } energy { allow (ghost) } }",
        "x");
    CHECK(has_errors(r.diags));
  }
  SUBCASE("pool of an unknown atom") {
    ParsedScheme r = parse_scheme("pool Ghost", "x");
    CHECK(has_errors(r.diags));
  }
  SUBCASE("duplicate colors flow through validation") {
    ParsedScheme r = parse_scheme("colors { a a }", "x");
    CHECK(has_errors(r.diags));
  }
  SUBCASE("garbage never hangs or crashes") {
    parse_scheme("{{{{((((", "x");
    parse_scheme("atom atom atom", "x");
    parse_scheme(")))) \xff\xfe junk 1.2.3.4", "x");
    parse_scheme("colors { a } porttype p { a } atom A {", "x");
    CHECK(true);
  }
}

TEST_CASE("schemes round-trip through serialization") {
  Scheme chain = chain_scheme();
  Scheme mono = monomer_scheme();
  Scheme track = must_parse(kTrack);
  for (const Scheme* s : {&chain, &mono, &track}) {
    std::string text = serialize_scheme(*s);
    ParsedScheme again = parse_scheme(text, "round");
    REQUIRE_FALSE(has_errors(again.diags));
    CHECK(again.scheme == *s);
  }
}

TEST_CASE("fractional costs round-trip exactly") {
  Scheme s = chain_scheme();
  s.atoms[0].energy.allow(sv(s, {"r", "r"}), 0.1);
  s.atoms[0].energy.allow(sv(s, {"b", "b"}), 1e-4);
  ParsedScheme again = parse_scheme(serialize_scheme(s), "round");
  REQUIRE_FALSE(has_errors(again.diags));
  CHECK(again.scheme.atoms[0].energy.energy(sv(s, {"r", "r"})) == 0.1);
  CHECK(again.scheme.atoms[0].energy.energy(sv(s, {"b", "b"})) == 1e-4);
}

static const char* kMonoConfig = R"(
instance h1 : H
instance h2 : H
instance m : M

bond h1.p -> m.c : h
bond m.m1 -> m.m2 : m

pool Mfree : M (-, m, m) conc 0.25
)";

TEST_CASE("a configuration parses against its scheme") {
  Scheme s = monomer_scheme();
  ConfigBundle b = must_parse_config(kMonoConfig, s);
  REQUIRE(b.config.instances.size() == 3);
  CHECK(b.config.names[2] == "m");
  REQUIRE(b.config.bonds.size() == 2);
  CHECK(config_valid(b.config));
  REQUIRE(b.config.pools.size() == 1);
  CHECK(b.config.pools[0].alias == "Mfree");
  CHECK(b.config.pools[0].conc == 0.25);
  REQUIRE(b.config.pools[0].loops.size() == 1);
}

TEST_CASE("the pool sugar form works when the species is unique") {
  Scheme s = monomer_scheme();
  ConfigBundle b = must_parse_config("pool M count 5\n", s);
  REQUIRE(b.config.pools.size() == 1);
  CHECK(b.config.pools[0].alias == "M");
  CHECK(b.config.pools[0].type == 1);
  CHECK(b.config.pools[0].count == 5);
  CHECK(b.config.pools[0].free_vec == sv(s, {"-", "m", "m"}));

  // The chain atom has three free states; the sugar is ambiguous there.
  Scheme cs = chain_scheme();
  ParsedConfig bad = parse_config("pool N conc 1\n", cs, "x");
  CHECK(has_errors(bad.diags));
}

TEST_CASE("observers and declarations parse") {
  Scheme s = monomer_scheme();
  std::string text = std::string(kMonoConfig) +
                     "pool Mtwo : M (-, m, m) conc 1\n";  // duplicate species
  ParsedConfig dup = parse_config(text, s, "x");
  CHECK(has_errors(dup.diags));

  std::string ok = std::string(kMonoConfig) +
                   R"(
observe position where of m over (h1, h2) ports (c) cycle 2
declare fuel draw Mfree return Mfree
declare parallel width 2 {
  M: (_, m, _)
  H: (-)
}
)";
  ConfigBundle b = must_parse_config(ok, s);
  REQUIRE(b.observers.size() == 1);
  CHECK(b.observers[0].name == "where");
  CHECK(b.observers[0].subject == "m");
  CHECK(b.observers[0].track == std::vector<std::string>{"h1", "h2"});
  CHECK(b.observers[0].ports == std::vector<std::string>{"c"});
  CHECK(b.observers[0].cycle == 2);
  REQUIRE(b.fuel.has_value());
  CHECK(b.fuel->draw_alias == "Mfree");
  REQUIRE(b.parallel.size() == 1);
  CHECK(b.parallel[0].width == 2);
  REQUIRE(b.parallel[0].patterns.size() == 2);
  CHECK(b.parallel[0].patterns[0].ports[0].kind == PortPattern::Kind::Any);
  CHECK(b.parallel[0].patterns[0].ports[1].kind == PortPattern::Kind::Bound);
  CHECK(b.parallel[0].patterns[1].ports[0].kind == PortPattern::Kind::Unbound);

  auto vecs = b.config.port_states();
  CHECK(b.parallel[0].matches(b.config, vecs));
}

TEST_CASE("configuration load rejections") {
  Scheme s = monomer_scheme();
  auto bad = [&](const std::string& text) {
    ParsedConfig r = parse_config(text, s, "x");
    CHECK(has_errors(r.diags));
  };
  bad("instance q : Ghost\n");
  bad("instance a : H\ninstance a : H\n");
  bad("bond q.p -> q.c : h\n");
  bad("instance a : H\nbond a.ghost -> a.p : h\n");
  bad("instance a : H\ninstance m : M\nbond a.p -> m.c : ghost\n");
  // Double use of one port.
  bad("instance a : H\ninstance b : H\ninstance m : M\n"
      "bond a.p -> m.c : h\nbond b.p -> m.c : h\n"
      "bond m.m1 -> m.m2 : m\n");
  // Valid bonds but an instance with no finite-energy vector: M alone
  // without its loop.
  bad("instance m : M\n");
  // Floating free monomer duplicating a pool species.
  bad("instance m : M\nbond m.m1 -> m.m2 : m\npool Mfree : M (-, m, m) conc 1\n");
  // Species tuple that is not a free state.
  bad("pool Mx : M (h, m, m) conc 1\n");
  bad("pool A : Ghost (-) conc 1\n");
  bad("pool Mfree : M (-, m, m) conc 1\npool Mfree : M (-, m, m) count 1\n");
  // Fuel declarations.
  bad("declare fuel draw Nope return Nope\n");
  // Observer problems.
  bad("observe position w of ghost over (x) ports (p)\n");
  bad("instance a : H\nobserve position w of a over (a) ports (ghost)\n");
  bad("instance a : H\nobserve position w of a over () ports (p)\n");
  bad("instance a : H\nobserve position w of a over (a) ports (p) cycle 7\n");
  // Parallel declarations.
  bad("declare parallel width 0 { H: (-) }\n");
  bad("declare parallel width 2 { }\n");
  bad("declare parallel width 2 { H: (-, -) }\n");
  bad("declare parallel width 2 { Ghost: (-) }\n");
}

TEST_CASE("configurations round-trip through serialization") {
  Scheme s = monomer_scheme();
  std::string text = std::string(kMonoConfig) +
                     R"(
observe position where of m over (h1, h2) ports (c)
declare fuel draw Mfree return Mfree
declare parallel width 3 {
  M: (_, m, _)
}
)";
  ConfigBundle b = must_parse_config(text, s);
  std::string out = serialize_config(b);
  ConfigBundle again = must_parse_config(out, s);
  CHECK(again.config == b.config);
  CHECK(again.observers == b.observers);
  CHECK(again.fuel == b.fuel);
  CHECK(again.parallel == b.parallel);
  // And the serializer is a fixpoint.
  CHECK(serialize_config(again) == out);
}

TEST_CASE("scheme serialization is a fixpoint too") {
  Scheme s = monomer_scheme();
  std::string one = serialize_scheme(s);
  ParsedScheme r = parse_scheme(one, "x");
  REQUIRE_FALSE(has_errors(r.diags));
  CHECK(serialize_scheme(r.scheme) == one);
}
