#pragma once

// Motif scripts (.rblm) and their compiler.
//
// A script describes one compuzyme: a machine atom whose paired state loops
// step through corridors of elementary bond events while it grabs, rewrites,
// and releases a molecule of data atoms. Scripts are written against a small
// motif vocabulary instead of raw energy rows:
//
//   STATE        recolor the state loops, nothing else
//   M            draw a monomer from the pool onto a control port
//   X            exchange one held atom for another species, burning fuel
//   C            take a molecule's root atom over from its C parent
//   D            detach an expected child onto its control port, or pick a
//                chain head off a variable port (branch discrimination)
//   D*           detach a child onto a wildcard variable port, blind to type
//   S            hand a prepared molecule to a fresh C atom so another
//                machine can work on it
//
// Every motif also runs in reverse (rev flag): discard, release, reattach,
// retrieve. The compiler expands each edge into its micro-sequence, threads
// the exact held-port colors through the whole script, and emits one scheme
// containing the machine atom, all data atoms, the C atom, and the fuel
// economy. Corridor safety is enforced by construction: every transition
// color is unique to its edge, so distinct script positions can never share
// a configuration except at the declared states.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbl/config.hpp"
#include "rbl/diag.hpp"
#include "rbl/explore.hpp"
#include "rbl/moves.hpp"
#include "rbl/scheme.hpp"
#include "rbl/text_format.hpp"

namespace rbl {

// Value encodings shared by IO declarations and the program runner: naturals
// are S-chains terminated by Z, booleans are bare T or F atoms.
inline constexpr std::string_view kKindPeano = "peano";
inline constexpr std::string_view kKindBool = "bool";

enum class MotifVerb : uint8_t { State, M, X, C, D, DStar, S };

const char* motif_verb_name(MotifVerb v);

struct DataDecl {
  std::string name;
  std::vector<std::string> children;  // child slot labels, document order
  Span span;

  friend bool operator==(const DataDecl&, const DataDecl&) = default;
};

struct IoField {
  std::string slot;
  std::string kind;  // kKindPeano or kKindBool

  friend bool operator==(const IoField&, const IoField&) = default;
};

// Shape of the molecule a program accepts or produces: a root atom whose
// child slots each carry a value of a known encoding.
struct IoDecl {
  std::string atom;
  std::vector<IoField> fields;

  friend bool operator==(const IoDecl&, const IoDecl&) = default;
};

struct MotifEdge {
  std::string from;
  std::string to;
  MotifVerb verb = MotifVerb::State;
  bool rev = false;
  bool handoff = false;     // D* rev: rebind the variable to the new parent
  std::string atom;         // M / C / S target type
  std::string swap_from;    // X source type
  std::string swap_to;      // X replacement type
  std::string parent;       // D / D* held parent type
  std::string port;         // D / D* child slot on the parent
  std::string var;          // M / D / D* variable name
  std::string handoff_var;  // defaults to var
  std::vector<std::string> expect;  // child types; D takes exactly one
  Span span;

  friend bool operator==(const MotifEdge&, const MotifEdge&) = default;
};

struct MotifScript {
  std::string name;
  bool callable = false;  // expect invocation under another machine's root
  std::vector<DataDecl> data;
  std::vector<std::string> states;  // symbolic labels; "free" is implicit
  std::string start = "free";
  std::string end = "free";
  std::optional<IoDecl> input;
  std::optional<IoDecl> output;
  std::vector<MotifEdge> edges;

  friend bool operator==(const MotifScript&, const MotifScript&) = default;
};

struct ParsedMotif {
  MotifScript script;
  Diagnostics diags;
};

ParsedMotif parse_motif_script(std::string_view text, std::string origin = {});
ParsedMotif load_motif_file(const std::string& path);

// One elementary bond event inside a compiled edge corridor.
struct MotifDelta {
  MoveKind kind = MoveKind::Form;
  std::string text;       // human-readable, in template port terms
  bool parallel = false;  // half of an order-free pair with its neighbor
};

struct CompiledEdge {
  uint32_t index = 0;  // 1-based position in the script
  std::string from;
  std::string to;
  MotifVerb verb = MotifVerb::State;
  bool rev = false;
  bool fueled = false;                // X edges draw G+ and return G-
  std::vector<MotifDelta> deltas;     // representative expansion
};

struct CompiledUnit {
  std::string name;
  AtomTypeId atom = 0;  // the machine atom type
  bool callable = false;
  int fuel_per_cycle = -1;  // G+ per completed cycle; -1 if path-dependent
  std::optional<IoDecl> input;
  std::optional<IoDecl> output;
  std::vector<CompiledEdge> edges;
  // State label -> loop color name. Fuel exchanges never move the loops, so
  // states joined by an X edge share one color.
  std::vector<std::pair<std::string, std::string>> state_colors;
};

// A pool species the compiled scheme expects in the environment.
struct PooledSpecies {
  std::string alias;  // pool alias convention: atom name, or G+/G- for fuel
  std::string atom;
  StateVector vec;  // the free-monomer state this pool holds

  friend bool operator==(const PooledSpecies&, const PooledSpecies&) = default;
};

struct CompiledProgram {
  Scheme scheme;
  std::vector<CompiledUnit> units;
  std::vector<ParallelDecl> parallel;  // order-free pairs inside corridors
  std::vector<PooledSpecies> pooled;
  std::string fuel_draw;    // pool alias, empty when no edge burns fuel
  std::string fuel_return;
  Diagnostics diags;

  // JSON sidecar with program metadata, pool species, and the parallel
  // declarations the explorer needs for corridor checks.
  std::string annotations_json() const;
};

// Compiles the scripts into one shared scheme. Scripts may reference each
// other's data templates and output declarations (an S retrieve needs the
// invoked program's output shape), so dependent scripts compile together.
CompiledProgram compile_motifs(const std::vector<MotifScript>& scripts);

// Expansion record for one script edge: the corridor of elementary events a
// representative pass through the edge produces.
const std::vector<MotifDelta>& expand_motif(const CompiledProgram& cp,
                                            std::string_view program,
                                            uint32_t edge_index);

// Certifies a compilation by exploring the compiled scheme on a concrete
// input and checking reversibility, corridor (with the compiler's parallel
// declarations), catalysis of every machine instance, and fuel conservation
// along an initial-to-terminal path.
std::vector<PropertyReport> decompile_check(const CompiledProgram& cp,
                                            const ConfigBundle& input);

struct AnnotationProgram {
  std::string name;
  std::string atom;
  bool callable = false;
  int fuel_per_cycle = -1;
  std::optional<IoDecl> input;
  std::optional<IoDecl> output;
};

struct MotifAnnotations {
  std::vector<AnnotationProgram> programs;
  std::vector<ParallelDecl> parallel;
  std::string fuel_draw;
  std::string fuel_return;
  std::vector<PooledSpecies> pooled;
};

// Reads an annotations sidecar back against the scheme it was emitted with.
MotifAnnotations parse_annotations(std::string_view json_text, const Scheme& s,
                                   Diagnostics& diags);

}  // namespace rbl
