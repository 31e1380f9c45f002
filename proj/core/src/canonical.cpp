#include "rbl/canonical.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <functional>
#include <map>
#include <tuple>

namespace rbl {

namespace {

uint64_t fnv1a(const std::vector<uint64_t>& words) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint64_t w : words) {
    for (int b = 0; b < 8; ++b) {
      h ^= (w >> (8 * b)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

uint64_t double_bits(double d) {
  uint64_t u;
  static_assert(sizeof(u) == sizeof(d));
  std::memcpy(&u, &d, sizeof(u));
  return u;
}

struct Canonicalizer {
  const SystemConfiguration& c;
  size_t n;
  std::vector<StateVector> vecs;

  struct Inc {
    uint32_t port;
    uint8_t dir;  // 0 = out endpoint, 1 = in endpoint
    ColorId color;
    InstanceId other;
    uint32_t oport;
  };
  std::vector<std::vector<Inc>> inc;

  std::vector<uint64_t> pool_words;

  std::vector<uint64_t> best;
  std::vector<InstanceId> best_order;
  bool have_best = false;

  explicit Canonicalizer(const SystemConfiguration& cfg)
      : c(cfg), n(cfg.instances.size()), vecs(cfg.port_states()), inc(n) {
    for (const Bond& b : c.bonds) {
      inc[b.from.inst].push_back({b.from.port, 0, b.color, b.to.inst, b.to.port});
      inc[b.to.inst].push_back({b.to.port, 1, b.color, b.from.inst, b.from.port});
    }
    // Pool entries, sorted by structural key; aliases excluded.
    std::vector<size_t> idx(c.pools.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto key = [&](size_t i) {
      const PoolEntry& p = c.pools[i];
      return std::tuple(p.type, p.free_vec, p.finite(),
                        p.finite() ? static_cast<uint64_t>(p.count)
                                   : double_bits(p.conc));
    };
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return key(a) < key(b); });
    pool_words.push_back(c.pools.size());
    for (size_t i : idx) {
      const PoolEntry& p = c.pools[i];
      pool_words.push_back(p.type);
      pool_words.push_back(p.free_vec.size());
      for (PortState s : p.free_vec) pool_words.push_back(s);
      pool_words.push_back(p.finite() ? 1 : 0);
      pool_words.push_back(p.finite() ? static_cast<uint64_t>(p.count)
                                      : double_bits(p.conc));
    }
  }

  // Refine the coloring to a fixpoint; colors are dense ranks.
  void refine(std::vector<uint32_t>& color) const {
    using Sig = std::pair<uint32_t, std::vector<uint64_t>>;
    for (;;) {
      std::vector<Sig> sigs(n);
      for (size_t i = 0; i < n; ++i) {
        std::vector<uint64_t> s;
        s.reserve(inc[i].size());
        for (const Inc& e : inc[i]) {
          uint64_t w = (uint64_t(e.port) << 48) ^ (uint64_t(e.dir) << 40) ^
                       (uint64_t(e.color) << 24) ^
                       (uint64_t(color[e.other]) << 8) ^ uint64_t(e.oport);
          s.push_back(w);
        }
        std::sort(s.begin(), s.end());
        sigs[i] = {color[i], std::move(s)};
      }
      std::map<Sig, uint32_t> rank;
      for (const Sig& s : sigs) rank.emplace(s, 0);
      uint32_t next = 0;
      for (auto& [sig, r] : rank) r = next++;
      bool changed = false;
      for (size_t i = 0; i < n; ++i) {
        uint32_t nc = rank[sigs[i]];
        if (nc != color[i]) changed = true;
        color[i] = nc;
      }
      if (!changed) return;
    }
  }

  bool discrete(const std::vector<uint32_t>& color) const {
    std::vector<bool> seen(n, false);
    for (uint32_t k : color) {
      if (k >= n || seen[k]) return false;
      seen[k] = true;
    }
    return true;
  }

  std::vector<uint64_t> emit(const std::vector<uint32_t>& color,
                             std::vector<InstanceId>& order) const {
    order.resize(n);
    for (size_t i = 0; i < n; ++i) order[color[i]] = static_cast<InstanceId>(i);
    std::vector<uint32_t> pos(n);
    for (size_t i = 0; i < n; ++i) pos[i] = color[i];
    std::vector<uint64_t> out;
    out.push_back(n);
    for (size_t k = 0; k < n; ++k) {
      InstanceId i = order[k];
      out.push_back(c.instances[i]);
      out.push_back(vecs[i].size());
      for (PortState s : vecs[i]) out.push_back(s);
    }
    std::vector<std::array<uint64_t, 5>> bs;
    bs.reserve(c.bonds.size());
    for (const Bond& b : c.bonds)
      bs.push_back({pos[b.from.inst], b.from.port, pos[b.to.inst], b.to.port,
                    b.color});
    std::sort(bs.begin(), bs.end());
    out.push_back(bs.size());
    for (const auto& b : bs)
      for (uint64_t w : b) out.push_back(w);
    out.insert(out.end(), pool_words.begin(), pool_words.end());
    return out;
  }

  void search(std::vector<uint32_t> color) {
    refine(color);
    if (discrete(color)) {
      std::vector<InstanceId> order;
      auto buf = emit(color, order);
      if (!have_best || buf < best) {
        best = std::move(buf);
        best_order = std::move(order);
        have_best = true;
      }
      return;
    }
    // Individualize within the first non-singleton class.
    uint32_t target = 0;
    for (;; ++target) {
      size_t cnt = 0;
      for (uint32_t k : color) cnt += (k == target);
      if (cnt > 1) break;
    }
    uint32_t fresh = 0;
    for (uint32_t k : color) fresh = std::max(fresh, k + 1);
    for (size_t i = 0; i < n; ++i) {
      if (color[i] != target) continue;
      std::vector<uint32_t> next = color;
      next[i] = fresh;
      search(std::move(next));
    }
  }

  CanonicalForm run() {
    if (n == 0) {
      CanonicalForm f;
      f.buffer.push_back(0);
      f.buffer.insert(f.buffer.end(), pool_words.begin(), pool_words.end());
      f.digest = fnv1a(f.buffer);
      return f;
    }
    // Initial classes from (atom type, port-state vector).
    std::vector<std::pair<std::pair<AtomTypeId, StateVector>, size_t>> keys(n);
    for (size_t i = 0; i < n; ++i) keys[i] = {{c.instances[i], vecs[i]}, i};
    std::sort(keys.begin(), keys.end());
    std::vector<uint32_t> color(n);
    uint32_t next = 0;
    for (size_t k = 0; k < n; ++k) {
      if (k > 0 && keys[k].first != keys[k - 1].first) ++next;
      color[keys[k].second] = next;
    }
    search(std::move(color));
    CanonicalForm f;
    f.buffer = std::move(best);
    f.order = std::move(best_order);
    f.digest = fnv1a(f.buffer);
    return f;
  }
};

}  // namespace

CanonicalForm canonicalize(const SystemConfiguration& c) {
  return Canonicalizer(c).run();
}

namespace {

bool pools_equal(const SystemConfiguration& a, const SystemConfiguration& b) {
  if (a.pools.size() != b.pools.size()) return false;
  auto keyed = [](const SystemConfiguration& c) {
    std::vector<std::tuple<AtomTypeId, StateVector, bool, uint64_t>> v;
    for (const PoolEntry& p : c.pools)
      v.emplace_back(p.type, p.free_vec, p.finite(),
                     p.finite() ? static_cast<uint64_t>(p.count)
                                : double_bits(p.conc));
    std::sort(v.begin(), v.end());
    return v;
  };
  return keyed(a) == keyed(b);
}

}  // namespace

bool isomorphic_bruteforce(const SystemConfiguration& a,
                           const SystemConfiguration& b) {
  if (a.instances.size() != b.instances.size()) return false;
  if (a.bonds.size() != b.bonds.size()) return false;
  if (!pools_equal(a, b)) return false;
  const size_t n = a.instances.size();
  std::vector<InstanceId> map(n);
  std::vector<bool> used(n, false);

  auto bonds_match = [&]() {
    std::vector<Bond> mapped;
    mapped.reserve(a.bonds.size());
    for (Bond x : a.bonds) {
      x.from.inst = map[x.from.inst];
      x.to.inst = map[x.to.inst];
      mapped.push_back(x);
    }
    std::sort(mapped.begin(), mapped.end());
    return mapped == b.bonds;
  };

  std::function<bool(size_t)> place = [&](size_t i) -> bool {
    if (i == n) return bonds_match();
    for (size_t j = 0; j < n; ++j) {
      if (used[j] || a.instances[i] != b.instances[j]) continue;
      used[j] = true;
      map[i] = static_cast<InstanceId>(j);
      if (place(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return place(0);
}

}  // namespace rbl
