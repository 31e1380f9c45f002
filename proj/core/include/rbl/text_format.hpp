#pragma once

// The two data text formats:
//   .rbl   bond schemes: colors, port types, atoms with energy allowlists,
//          pooled-atom flags
//   .rblc  system configurations over a scheme: instances, bonds, pools,
//          position observers, fuel and parallel-region declarations
//
// Identifiers may use letters, digits, and _ + ' ~ plus the two glyphs
// for negation and box programs. Names wrapped in parentheses, e.g. (+') or
// the boxed square type, are single identifiers when the interior consists
// only of symbol characters; a parenthesis followed by a letter or digit
// always opens a tuple instead. "#" starts a comment.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rbl/config.hpp"
#include "rbl/diag.hpp"
#include "rbl/scheme.hpp"

namespace rbl {

struct ParsedScheme {
  Scheme scheme;
  Diagnostics diags;  // parse and validation problems; scheme usable iff clean
};

ParsedScheme parse_scheme(std::string_view text, std::string origin = {});

// Emits a .rbl document that parses back to an identical scheme (same ids,
// same rows). Energy rows are written sorted by vector.
std::string serialize_scheme(const Scheme& s);

// Reports where along an ordered monomer track a subject sits: the position
// index is the track slot some subject port is bonded to. cycle > 0 marks a
// ring of that circumference so trajectories unwrap windings.
struct PositionObserver {
  std::string name;
  std::string subject;              // instance name
  std::vector<std::string> track;   // ordered monomer instance names
  std::vector<std::string> ports;   // subject port labels to locate
  int cycle = 0;                    // 0 = linear track

  friend bool operator==(const PositionObserver&,
                         const PositionObserver&) = default;
};

// Names the pool pair a fuel economy draws from and returns to.
struct FuelDecl {
  std::string draw_alias;
  std::string return_alias;

  friend bool operator==(const FuelDecl&, const FuelDecl&) = default;
};

// Declares a parallel region: configurations matching every pattern (each
// satisfied by some instance of its type) belong to it, and a run of L
// consecutive transitions inside the region counts as ceil(L / width) serial
// steps.
struct ParallelDecl {
  int width = 1;
  std::vector<StatePattern> patterns;

  bool matches(const SystemConfiguration& c,
               const std::vector<StateVector>& vecs) const {
    for (const StatePattern& p : patterns)
      if (!p.matched_by(c, vecs)) return false;
    return !patterns.empty();
  }

  friend bool operator==(const ParallelDecl&, const ParallelDecl&) = default;
};

struct ConfigBundle {
  SystemConfiguration config;
  std::vector<PositionObserver> observers;
  std::optional<FuelDecl> fuel;
  std::vector<ParallelDecl> parallel;
};

struct ParsedConfig {
  ConfigBundle bundle;
  Diagnostics diags;
};

// Parses a .rblc document against an already-loaded scheme. The returned
// configuration points into `s`, which must outlive it. A disconnected
// instance sitting exactly in a declared pool species' free state is an
// error: it could never return to the pool (there is no bond whose break
// composes with the return), so it must be written as pool count instead.
ParsedConfig parse_config(std::string_view text, const Scheme& s,
                          std::string origin = {});

std::string serialize_config(const ConfigBundle& b);

// File loaders wrapping the parsers; a missing/unreadable file is reported
// as a diagnostic on the returned object.
ParsedScheme load_scheme_file(const std::string& path);
ParsedConfig load_config_file(const std::string& path, const Scheme& s);

}  // namespace rbl
