#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lexer.hpp"
#include "rbl/motif.hpp"

namespace rbl {

using detail::Parser;
using detail::Tok;
using detail::Token;

const char* motif_verb_name(MotifVerb v) {
  switch (v) {
    case MotifVerb::State: return "STATE";
    case MotifVerb::M: return "M";
    case MotifVerb::X: return "X";
    case MotifVerb::C: return "C";
    case MotifVerb::D: return "D";
    case MotifVerb::DStar: return "D*";
    case MotifVerb::S: return "S";
  }
  return "?";
}

namespace {

struct MotifParser : Parser {
  MotifScript sc;
  std::set<std::string> seen_sections;

  using Parser::Parser;

  bool once(const std::string& section) {
    if (!seen_sections.insert(section).second) {
      err("duplicate '" + section + "' section");
      return false;
    }
    return true;
  }

  bool known_state(const std::string& s) const {
    return s == "free" ||
           std::find(sc.states.begin(), sc.states.end(), s) != sc.states.end();
  }

  void parse_data() {
    DataDecl d;
    d.span = cur().span;
    d.name = ident_or("a data atom name");
    expect_punct("(", "after the data atom name");
    while (!done() && !at_punct(")")) {
      d.children.push_back(ident_or("a child slot label"));
      if (d.children.back().empty()) break;
      skip_commas();
    }
    expect_punct(")", "to close the child slot list");
    for (size_t i = 0; i + 1 < d.children.size(); ++i)
      for (size_t j = i + 1; j < d.children.size(); ++j)
        if (d.children[i] == d.children[j])
          err_at(ts[pos - 1], "data atom '" + d.name +
                                  "' repeats child slot '" + d.children[i] +
                                  "'");
    for (const auto& prev : sc.data)
      if (prev.name == d.name) err("data atom '" + d.name + "' redeclared");
    sc.data.push_back(std::move(d));
  }

  void parse_io(bool is_input) {
    IoDecl io;
    io.atom = ident_or("the root atom of the declaration");
    expect_punct("(", "after the root atom");
    while (!done() && !at_punct(")")) {
      IoField f;
      f.slot = ident_or("a child slot label");
      expect_punct("=", "between the slot and its value kind");
      f.kind = ident_or("a value kind");
      if (f.kind != kKindPeano && f.kind != kKindBool)
        err_at(ts[pos - 1],
               "unknown value kind '" + f.kind + "' (expected peano or bool)");
      io.fields.push_back(std::move(f));
      skip_commas();
    }
    expect_punct(")", "to close the declaration");

    const DataDecl* tpl = nullptr;
    for (const auto& d : sc.data)
      if (d.name == io.atom) tpl = &d;
    if (!tpl) {
      err("declaration names '" + io.atom + "' which has no data template");
    } else {
      std::vector<std::string> slots;
      for (const auto& f : io.fields) slots.push_back(f.slot);
      if (slots != tpl->children)
        err("declaration for '" + io.atom +
            "' must give a kind for each child slot, in template order");
    }
    auto& dst = is_input ? sc.input : sc.output;
    if (dst) err(std::string(is_input ? "input" : "output") + " redeclared");
    dst = std::move(io);
  }

  void parse_states() {
    expect_punct("{", "after 'states'");
    while (!done() && !at_punct("}")) {
      std::string s = ident_or("a state name");
      if (s.empty()) break;
      if (s == "free")
        err_at(ts[pos - 1], "'free' is implicit and cannot be declared");
      else if (known_state(s))
        err_at(ts[pos - 1], "state '" + s + "' declared twice");
      else
        sc.states.push_back(std::move(s));
      skip_commas();
    }
    expect_punct("}", "to close the states block");
  }

  // One key or key=value inside a verb's parameter list.
  void parse_param(MotifEdge& e, std::set<std::string>& seen) {
    const Token key_tok = cur();
    std::string key = ident_or("a parameter name");
    if (key.empty()) {
      advance();
      return;
    }
    if (!seen.insert(key).second)
      err_at(key_tok, "parameter '" + key + "' given twice");

    auto value = [&]() -> std::string {
      expect_punct("=", "after '" + key + "'");
      return ident_or("a value for '" + key + "'");
    };

    if (key == "rev") {
      e.rev = true;
    } else if (key == "handoff") {
      e.handoff = true;
      if (eat_punct("=")) e.handoff_var = ident_or("a variable name");
    } else if (key == "atom") {
      e.atom = value();
    } else if (key == "parent") {
      e.parent = value();
    } else if (key == "port") {
      e.port = value();
    } else if (key == "var") {
      e.var = value();
    } else if (key == "from") {
      e.swap_from = value();
    } else if (key == "to") {
      e.swap_to = value();
    } else if (key == "expect") {
      expect_punct("=", "after 'expect'");
      if (eat_punct("{")) {
        while (!done() && !at_punct("}")) {
          e.expect.push_back(ident_or("an expected atom type"));
          skip_commas();
        }
        expect_punct("}", "to close the expected type set");
      } else {
        e.expect.push_back(ident_or("an expected atom type"));
      }
      std::set<std::string> uniq(e.expect.begin(), e.expect.end());
      if (uniq.size() != e.expect.size())
        err_at(key_tok, "expected type set repeats a member");
    } else {
      err_at(key_tok, "unknown parameter '" + key + "'");
      if (at_punct("=")) {
        advance();
        advance();
      }
    }
  }

  void check_edge(const MotifEdge& e, const Token& verb_tok) {
    auto need = [&](bool ok, const char* what) {
      if (!ok)
        err_at(verb_tok, std::string(motif_verb_name(e.verb)) + " needs " +
                             what);
    };
    auto forbid = [&](bool present, const char* what) {
      if (present)
        err_at(verb_tok, std::string(motif_verb_name(e.verb)) +
                             " does not take " + what);
    };
    switch (e.verb) {
      case MotifVerb::State:
        forbid(!e.atom.empty() || !e.parent.empty() || !e.var.empty() ||
                   !e.swap_from.empty() || !e.expect.empty() || e.rev ||
                   e.handoff,
               "parameters");
        break;
      case MotifVerb::M:
        need(!e.atom.empty(), "atom=");
        forbid(!e.parent.empty() || !e.port.empty() || !e.expect.empty() ||
                   !e.swap_from.empty() || !e.swap_to.empty() || e.handoff,
               "parent/port/expect/from/to/handoff");
        break;
      case MotifVerb::X:
        need(!e.swap_from.empty() && !e.swap_to.empty(), "from= and to=");
        forbid(e.rev, "rev (swap the operands instead)");
        forbid(!e.atom.empty() || !e.parent.empty() || !e.var.empty() ||
                   !e.expect.empty() || e.handoff,
               "atom/parent/var/expect/handoff");
        break;
      case MotifVerb::C:
        need(!e.atom.empty(), "atom=");
        forbid(!e.parent.empty() || !e.var.empty() || !e.expect.empty() ||
                   !e.swap_from.empty() || e.handoff,
               "parent/var/expect/from/to/handoff");
        break;
      case MotifVerb::D: {
        need(e.expect.size() == 1, "exactly one expect= type");
        const bool slot = !e.parent.empty() || !e.port.empty();
        const bool var = !e.var.empty();
        if (slot == var)
          err_at(verb_tok, "D needs either parent= and port=, or var=");
        else if (slot && (e.parent.empty() || e.port.empty()))
          err_at(verb_tok, "D needs both parent= and port=");
        forbid(e.handoff, "handoff");
        forbid(!e.swap_from.empty() || !e.swap_to.empty(), "from/to");
        break;
      }
      case MotifVerb::DStar:
        need(!e.parent.empty() && !e.port.empty() && !e.var.empty(),
             "parent=, port=, and var=");
        need(!e.expect.empty(), "expect=");
        if (e.handoff && !e.rev)
          err_at(verb_tok, "handoff only applies to a reverse D*");
        forbid(!e.atom.empty() || !e.swap_from.empty() || !e.swap_to.empty(),
               "atom/from/to");
        break;
      case MotifVerb::S:
        need(!e.atom.empty(), "atom=");
        forbid(!e.parent.empty() || !e.var.empty() || !e.expect.empty() ||
                   !e.swap_from.empty() || e.handoff,
               "parent/var/expect/from/to/handoff");
        break;
    }
  }

  void parse_edge() {
    MotifEdge e;
    e.span = cur().span;
    e.from = ident_or("the source state");
    expect_punct("->", "between the edge states");
    e.to = ident_or("the target state");
    expect_punct(":", "before the motif verb");

    const Token verb_tok = cur();
    std::string verb = ident_or("a motif verb");
    if (verb == "D" && at_punct("*") && cur().adjacent) {
      advance();
      verb = "D*";
    }
    if (verb == "STATE")
      e.verb = MotifVerb::State;
    else if (verb == "M")
      e.verb = MotifVerb::M;
    else if (verb == "X")
      e.verb = MotifVerb::X;
    else if (verb == "C")
      e.verb = MotifVerb::C;
    else if (verb == "D")
      e.verb = MotifVerb::D;
    else if (verb == "D*")
      e.verb = MotifVerb::DStar;
    else if (verb == "S")
      e.verb = MotifVerb::S;
    else
      err_at(verb_tok, "unknown motif verb '" + verb + "'");

    if (eat_punct("(")) {
      std::set<std::string> seen;
      while (!done() && !at_punct(")")) {
        parse_param(e, seen);
        skip_commas();
      }
      expect_punct(")", "to close the parameter list");
    }
    if (e.handoff && e.handoff_var.empty()) e.handoff_var = e.var;

    if (!known_state(e.from))
      err_at(verb_tok, "edge leaves undeclared state '" + e.from + "'");
    if (!known_state(e.to))
      err_at(verb_tok, "edge enters undeclared state '" + e.to + "'");
    check_edge(e, verb_tok);
    sc.edges.push_back(std::move(e));
  }

  void run() {
    if (!eat_ident("compuzyme")) {
      err("expected 'compuzyme' at the top of the script");
      return;
    }
    sc.name = ident_or("the machine name");
    expect_punct("{", "after the machine name");

    while (!done() && !at_punct("}")) {
      if (eat_ident("callable")) {
        if (sc.callable) err("'callable' given twice");
        sc.callable = true;
      } else if (eat_ident("data")) {
        parse_data();
      } else if (eat_ident("input")) {
        parse_io(true);
      } else if (eat_ident("output")) {
        parse_io(false);
      } else if (eat_ident("states")) {
        if (once("states")) parse_states();
      } else if (eat_ident("start")) {
        if (once("start")) sc.start = ident_or("the start state");
      } else if (eat_ident("end")) {
        if (once("end")) sc.end = ident_or("the end state");
      } else if (eat_ident("edge")) {
        parse_edge();
      } else {
        err("expected a script section (data, input, output, states, start, "
            "end, edge)");
        sync({"data", "input", "output", "states", "start", "end", "edge",
              "callable"});
        if (at_punct("}")) break;
        if (cur().kind != Tok::Ident) advance();
      }
    }
    expect_punct("}", "to close the script");
    if (!has_errors(diags)) {
      if (!known_state(sc.start))
        err("start state '" + sc.start + "' is not declared");
      if (!known_state(sc.end))
        err("end state '" + sc.end + "' is not declared");
    }
  }
};

}  // namespace

ParsedMotif parse_motif_script(std::string_view text, std::string origin) {
  ParsedMotif out;
  MotifParser p(text, std::move(origin), out.diags);
  p.run();
  out.script = std::move(p.sc);
  return out;
}

ParsedMotif load_motif_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ParsedMotif out;
    out.diags.push_back(
        {Severity::Error, "cannot open file", Span{}, path});
    return out;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_motif_script(ss.str(), path);
}

MotifAnnotations parse_annotations(std::string_view json_text, const Scheme& s,
                                   Diagnostics& diags) {
  MotifAnnotations out;
  auto fail = [&](std::string msg) {
    diags.push_back({Severity::Error, std::move(msg), Span{}, "annotations"});
  };

  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded()) {
    fail("annotations are not valid JSON");
    return out;
  }

  auto parse_vec = [&](const nlohmann::json& ports, AtomTypeId type,
                       StateVector& vec) -> bool {
    const auto& at = s.atoms[type];
    if (!ports.is_array() || ports.size() != at.ports.size()) return false;
    vec.assign(at.ports.size(), 0);
    for (size_t i = 0; i < ports.size(); ++i) {
      const std::string c = ports[i].get<std::string>();
      if (c == "-") continue;
      auto id = s.color_id(c);
      if (!id) return false;
      vec[i] = *id + 1;
    }
    return true;
  };

  auto parse_io = [](const nlohmann::json& io) {
    IoDecl d;
    d.atom = io.at("atom").get<std::string>();
    for (const auto& f : io.at("fields"))
      d.fields.push_back({f.at("port").get<std::string>(),
                          f.at("kind").get<std::string>()});
    return d;
  };

  try {
    for (const auto& p : j.value("programs", nlohmann::json::array())) {
      AnnotationProgram ap;
      ap.name = p.at("name").get<std::string>();
      ap.atom = p.at("atom").get<std::string>();
      ap.callable = p.value("callable", false);
      ap.fuel_per_cycle = p.value("fuel_per_cycle", -1);
      if (p.contains("input")) ap.input = parse_io(p["input"]);
      if (p.contains("output")) ap.output = parse_io(p["output"]);
      out.programs.push_back(std::move(ap));
    }
    for (const auto& pd : j.value("parallel", nlohmann::json::array())) {
      ParallelDecl decl;
      decl.width = pd.value("width", 1);
      for (const auto& pat : pd.at("patterns")) {
        const std::string atom = pat.at("atom").get<std::string>();
        auto type = s.atom_type_id(atom);
        if (!type) {
          fail("parallel pattern names unknown atom '" + atom + "'");
          continue;
        }
        StatePattern sp;
        sp.type = *type;
        StateVector vec;
        if (!parse_vec(pat.at("ports"), *type, vec)) {
          fail("parallel pattern for '" + atom + "' does not fit its ports");
          continue;
        }
        sp.ports.resize(vec.size());
        for (size_t i = 0; i < vec.size(); ++i) {
          sp.ports[i].kind = vec[i] ? PortPattern::Kind::Bound
                                    : PortPattern::Kind::Unbound;
          if (vec[i]) sp.ports[i].color = vec[i] - 1;
        }
        decl.patterns.push_back(std::move(sp));
      }
      out.parallel.push_back(std::move(decl));
    }
    if (j.contains("fuel")) {
      out.fuel_draw = j["fuel"].value("draw", "");
      out.fuel_return = j["fuel"].value("return", "");
    }
    for (const auto& ps : j.value("pooled", nlohmann::json::array())) {
      PooledSpecies sp;
      sp.alias = ps.at("alias").get<std::string>();
      sp.atom = ps.at("atom").get<std::string>();
      auto type = s.atom_type_id(sp.atom);
      if (!type || !parse_vec(ps.at("state"), *type, sp.vec)) {
        fail("pool species '" + sp.alias + "' does not match the scheme");
        continue;
      }
      out.pooled.push_back(std::move(sp));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("annotations are missing a field: ") + e.what());
  }
  return out;
}

}  // namespace rbl
