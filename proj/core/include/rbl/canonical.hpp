#pragma once

#include <cstdint>
#include <vector>

#include "rbl/config.hpp"

namespace rbl {

// Canonical labeling of a configuration. Two configurations produce equal
// buffers iff they are isomorphic: related by an instance bijection that
// preserves atom types, bonds with colors, and pool entries. Instance names
// do not participate.
struct CanonicalForm {
  std::vector<uint64_t> buffer;
  uint64_t digest = 0;               // FNV-1a over buffer words
  std::vector<InstanceId> order;     // canonical position -> original instance

  friend bool operator==(const CanonicalForm& a, const CanonicalForm& b) {
    return a.buffer == b.buffer;
  }
  friend bool operator<(const CanonicalForm& a, const CanonicalForm& b) {
    return a.buffer < b.buffer;
  }
};

CanonicalForm canonicalize(const SystemConfiguration& c);

// Brute-force isomorphism used as the canonicalization oracle in tests;
// exponential, only call on small configurations.
bool isomorphic_bruteforce(const SystemConfiguration& a,
                           const SystemConfiguration& b);

}  // namespace rbl
