#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbl/config.hpp"

namespace rbl {

enum class MoveKind : uint8_t { Form, Break, Recolor, Draw, Return };

const char* move_kind_name(MoveKind k);
MoveKind inverse_kind(MoveKind k);

// One elementary transition. Form/Break/Recolor keep the instance set fixed.
// Draw instantiates one pooled monomer (its id is the current instance count)
// and forms one bond to it; Return breaks one bond, after which `removed` is
// exactly in its pooled free state, and removes it.
struct Move {
  MoveKind kind = MoveKind::Form;
  PortRef from;             // bond's out endpoint
  PortRef to;               // bond's in endpoint
  ColorId color = 0;        // bond color (the new color for Recolor)
  ColorId prev_color = 0;   // Recolor only
  uint32_t pool = 0;        // Draw/Return: pool entry index
  InstanceId removed = 0;   // Return only

  friend bool operator==(const Move&, const Move&) = default;
};

// All legal elementary moves from c, deterministically ordered. Pool returns
// supersede plain breaks: when breaking a bond leaves an endpoint instance
// disconnected and exactly in a declared pool species' free state, the break
// is emitted as a Return of that instance (one per qualifying endpoint, `to`
// side first) and never as a plain Break.
std::vector<Move> legal_moves(const SystemConfiguration& c);

SystemConfiguration apply_move(const SystemConfiguration& c, const Move& m);

// Energy change of the instances a move touches (finite for legal moves).
double move_energy_delta(const SystemConfiguration& c,
                         const std::vector<StateVector>& vecs, const Move& m);

// True iff both configurations are valid, share instances and pool keys, and
// their bond sets differ by exactly one bond event (form, break or recolor).
// Pool moves are out of scope here. Throws MalformedInput when the instance
// vectors differ.
bool adjacent(const SystemConfiguration& c1, const SystemConfiguration& c2);

// Compact human-readable move description, e.g. "form W.f->G+#3.f :plus".
std::string describe_move(const SystemConfiguration& c, const Move& m);

}  // namespace rbl
