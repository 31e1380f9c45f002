#include "rbl/explore.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>
#include <utility>

#include <json.hpp>

#include "rbl/diag.hpp"

namespace rbl {

namespace {

struct RawEdge {
  uint32_t from, to;
  MoveKind kind;
  int32_t pool;
  std::string label;
};

struct Child {
  MoveKind kind;
  int32_t pool;
  std::string label;
  SystemConfiguration cfg;
  CanonicalForm canon;
};

int32_t pool_of(const Move& m) {
  return (m.kind == MoveKind::Draw || m.kind == MoveKind::Return)
             ? static_cast<int32_t>(m.pool)
             : -1;
}

void expand_node(const SystemConfiguration& cfg, std::vector<Child>& out) {
  for (const Move& m : legal_moves(cfg)) {
    Child ch;
    ch.kind = m.kind;
    ch.pool = pool_of(m);
    ch.label = describe_move(cfg, m);
    ch.cfg = apply_move(cfg, m);
    ch.canon = canonicalize(ch.cfg);
    out.push_back(std::move(ch));
  }
}

}  // namespace

TransitionGraph explore(const SystemConfiguration& init,
                        const ExploreOptions& opts) {
  if (!config_valid(init))
    throw MalformedInput("explore: initial configuration is invalid");

  SystemConfiguration start = init;
  for (auto& p : start.pools)
    if (!p.finite() && p.conc <= 0.0) p.conc = 1.0;

  const std::size_t max_nodes = std::max<std::size_t>(1, opts.limits.max_nodes);
  const std::size_t max_depth = opts.limits.max_depth;

  TransitionGraph g;
  std::map<std::vector<uint64_t>, uint32_t> seen;
  CanonicalForm start_canon = canonicalize(start);
  g.nodes.push_back({std::move(start), std::move(start_canon), 0});
  seen.emplace(g.nodes[0].canon.buffer, 0);

  std::vector<uint32_t> frontier{0};
  std::vector<RawEdge> raw;
  uint32_t depth = 0;
  bool cut = false;

  while (!frontier.empty()) {
    const bool last_layer = max_depth != 0 && depth >= max_depth;

    std::vector<std::vector<Child>> expanded(frontier.size());
    const unsigned jobs =
        std::min<std::size_t>(std::max(1u, opts.jobs), frontier.size());
    if (jobs <= 1) {
      for (std::size_t i = 0; i < frontier.size(); ++i)
        expand_node(g.nodes[frontier[i]].config, expanded[i]);
    } else {
      std::atomic<std::size_t> cursor{0};
      std::exception_ptr failure;
      std::mutex failure_mu;
      auto work = [&] {
        try {
          for (std::size_t i; (i = cursor.fetch_add(1)) < frontier.size();)
            expand_node(g.nodes[frontier[i]].config, expanded[i]);
        } catch (...) {
          std::lock_guard lk(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      };
      {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work);
      }
      if (failure) std::rethrow_exception(failure);
    }

    // First discovery wins the representative, in (parent, move) order.
    std::map<std::vector<uint64_t>, const Child*> fresh;
    for (const auto& children : expanded)
      for (const Child& ch : children)
        if (!seen.contains(ch.canon.buffer))
          fresh.try_emplace(ch.canon.buffer, &ch);

    std::vector<uint32_t> next;
    for (const auto& [buf, rep] : fresh) {
      if (last_layer || g.nodes.size() >= max_nodes) {
        cut = true;
        continue;
      }
      const auto id = static_cast<uint32_t>(g.nodes.size());
      g.nodes.push_back({rep->cfg, rep->canon, depth + 1});
      seen.emplace(buf, id);
      next.push_back(id);
    }

    for (std::size_t i = 0; i < frontier.size(); ++i)
      for (Child& ch : expanded[i]) {
        auto it = seen.find(ch.canon.buffer);
        if (it == seen.end()) continue;  // target was cut off
        raw.push_back(
            {frontier[i], it->second, ch.kind, ch.pool, std::move(ch.label)});
      }

    frontier = std::move(next);
    ++depth;
  }

  g.truncated = cut;

  std::sort(raw.begin(), raw.end(), [](const RawEdge& a, const RawEdge& b) {
    return std::tie(a.from, a.to, a.kind, a.label, a.pool) <
           std::tie(b.from, b.to, b.kind, b.label, b.pool);
  });
  for (RawEdge& e : raw) {
    if (!g.edges.empty()) {
      GraphEdge& last = g.edges.back();
      if (last.from == e.from && last.to == e.to && last.kind == e.kind &&
          last.label == e.label && last.pool == e.pool) {
        ++last.multiplicity;
        continue;
      }
    }
    g.edges.push_back(
        {e.from, e.to, e.kind, e.pool, std::move(e.label), 1});
  }
  return g;
}

std::vector<uint32_t> TransitionGraph::undirected_degree() const {
  std::vector<std::set<uint32_t>> nbr(nodes.size());
  for (const GraphEdge& e : edges) {
    if (e.from == e.to) continue;
    nbr[e.from].insert(e.to);
    nbr[e.to].insert(e.from);
  }
  std::vector<uint32_t> deg(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    deg[i] = static_cast<uint32_t>(nbr[i].size());
  return deg;
}

std::size_t TransitionGraph::undirected_pair_count() const {
  std::set<std::pair<uint32_t, uint32_t>> pairs;
  for (const GraphEdge& e : edges)
    if (e.from != e.to)
      pairs.emplace(std::min(e.from, e.to), std::max(e.from, e.to));
  return pairs.size();
}

std::vector<uint32_t> TransitionGraph::terminals() const {
  std::vector<uint32_t> out;
  const auto deg = undirected_degree();
  for (uint32_t i = 0; i < deg.size(); ++i)
    if (deg[i] == 1 && i != initial) out.push_back(i);
  return out;
}

int TransitionGraph::find(const CanonicalForm& form) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].canon.buffer == form.buffer) return static_cast<int>(i);
  return -1;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

bool poisoned(const TransitionGraph& g, PropertyReport& r) {
  if (!g.truncated) return false;
  r.verdict = Verdict::Inconclusive;
  r.detail = "graph truncated; verdict unavailable on a partial graph";
  return true;
}

}  // namespace

PropertyReport check_reversibility(const TransitionGraph& g) {
  PropertyReport r;
  r.property = "reversibility";
  if (poisoned(g, r)) return r;

  std::set<std::tuple<uint32_t, uint32_t, MoveKind>> present;
  for (const GraphEdge& e : g.edges) present.emplace(e.from, e.to, e.kind);
  for (const GraphEdge& e : g.edges) {
    if (!present.contains({e.to, e.from, inverse_kind(e.kind)})) {
      r.verdict = Verdict::Fails;
      r.detail = "edge `" + e.label + "` has no inverse";
      r.witness = {g.nodes[e.from].canon.digest, g.nodes[e.to].canon.digest};
      return r;
    }
  }
  r.detail = "every edge has an inverse-kind edge back";
  return r;
}

PropertyReport check_corridor(const TransitionGraph& g,
                              std::span<const ParallelDecl> declared) {
  PropertyReport r;
  r.property = "corridor";
  if (poisoned(g, r)) return r;

  const auto deg = g.undirected_degree();
  std::size_t exempt = 0;
  for (uint32_t i = 0; i < g.nodes.size(); ++i) {
    if (deg[i] <= 2) continue;
    const auto vecs = g.nodes[i].config.port_states();
    bool covered = false;
    for (const ParallelDecl& d : declared)
      if (d.matches(g.nodes[i].config, vecs)) {
        covered = true;
        break;
      }
    if (covered) {
      ++exempt;
      continue;
    }
    r.verdict = Verdict::Fails;
    r.detail = "undeclared node with " + std::to_string(deg[i]) +
               " distinct neighbors";
    r.witness = {g.nodes[i].canon.digest};
    return r;
  }
  r.detail = "all undeclared nodes have at most 2 neighbors (" +
             std::to_string(exempt) + " declared nodes exempt)";
  return r;
}

PropertyReport check_catalysis(const TransitionGraph& g, AtomTypeId catalyst) {
  PropertyReport r;
  r.property = "catalysis";
  if (poisoned(g, r)) return r;

  const Scheme* s = g.nodes[g.initial].config.scheme;
  auto free_instances = [&](const GraphNode& n, bool& any, bool& all_free) {
    const auto vecs = n.config.port_states();
    any = false;
    all_free = true;
    for (std::size_t i = 0; i < n.config.instances.size(); ++i) {
      if (n.config.instances[i] != catalyst) continue;
      any = true;
      for (PortState p : vecs[i])
        if (is_bound(p)) {
          all_free = false;
          return;
        }
    }
  };

  bool any = false, all_free = false;
  free_instances(g.nodes[g.initial], any, all_free);
  if (!any || !all_free) {
    r.verdict = Verdict::Inconclusive;
    r.detail = "initial node lacks a free instance of " +
               s->atoms[catalyst].name;
    return r;
  }

  for (uint32_t t : g.terminals()) {
    free_instances(g.nodes[t], any, all_free);
    if (!all_free) {
      r.verdict = Verdict::Fails;
      r.detail = "terminal node holds a bonded " + s->atoms[catalyst].name;
      r.witness = {g.nodes[t].canon.digest};
      return r;
    }
  }
  r.detail = "catalyst " + s->atoms[catalyst].name +
             " is free in every terminal node";
  return r;
}

std::vector<int64_t> path_pool_deltas(const TransitionGraph& g,
                                      std::span<const uint32_t> path) {
  std::vector<int64_t> deltas(g.nodes[g.initial].config.pools.size(), 0);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const GraphEdge* hop = nullptr;
    for (const GraphEdge& e : g.edges)
      if (e.from == path[i] && e.to == path[i + 1]) {
        hop = &e;
        break;
      }
    if (!hop)
      throw MalformedInput("path_pool_deltas: nodes " +
                           std::to_string(path[i]) + " and " +
                           std::to_string(path[i + 1]) + " are not adjacent");
    if (hop->pool < 0) continue;
    if (hop->kind == MoveKind::Draw) --deltas[hop->pool];
    if (hop->kind == MoveKind::Return) ++deltas[hop->pool];
  }
  return deltas;
}

PropertyReport check_fuel_conservation(
    const TransitionGraph& g, std::span<const uint32_t> path,
    uint32_t draw_pool, uint32_t return_pool, int64_t expected_k,
    const std::vector<int64_t>* expected_deltas) {
  PropertyReport r;
  r.property = "fuel";
  if (poisoned(g, r)) return r;

  const auto& pools = g.nodes[g.initial].config.pools;
  std::vector<int64_t> deltas;
  try {
    deltas = path_pool_deltas(g, path);
  } catch (const MalformedInput& e) {
    r.verdict = Verdict::Inconclusive;
    r.detail = e.what();
    return r;
  }
  for (uint32_t id : path) r.witness.push_back(g.nodes[id].canon.digest);

  const int64_t k = -deltas[draw_pool];
  std::string ledger = "k=" + std::to_string(k);
  for (std::size_t i = 0; i < deltas.size(); ++i)
    if (deltas[i] != 0)
      ledger += "; " + pools[i].alias + " " +
                (deltas[i] > 0 ? "+" : "") + std::to_string(deltas[i]);
  r.detail = ledger;

  if (k < 0 || deltas[return_pool] != k) {
    r.verdict = Verdict::Fails;
    r.detail += "; draw/return species are not balanced one-for-one";
    return r;
  }
  if (expected_k >= 0 && k != expected_k) {
    r.verdict = Verdict::Fails;
    r.detail += "; expected k=" + std::to_string(expected_k);
    return r;
  }
  if (expected_deltas && *expected_deltas != deltas) {
    r.verdict = Verdict::Fails;
    r.detail += "; pool deltas differ from the declared net effect";
    return r;
  }
  return r;
}

std::vector<uint32_t> shortest_path(const TransitionGraph& g, uint32_t from,
                                    uint32_t to) {
  std::vector<std::vector<uint32_t>> out(g.nodes.size());
  for (const GraphEdge& e : g.edges) out[e.from].push_back(e.to);

  std::vector<int64_t> prev(g.nodes.size(), -1);
  std::deque<uint32_t> q{from};
  prev[from] = from;
  while (!q.empty()) {
    uint32_t n = q.front();
    q.pop_front();
    if (n == to) break;
    for (uint32_t m : out[n])
      if (prev[m] < 0) {
        prev[m] = n;
        q.push_back(m);
      }
  }
  if (prev[to] < 0) return {};
  std::vector<uint32_t> path{to};
  while (path.back() != from)
    path.push_back(static_cast<uint32_t>(prev[path.back()]));
  std::reverse(path.begin(), path.end());
  return path;
}

bool all_on_terminal_paths(const TransitionGraph& g) {
  const auto terms = g.terminals();
  if (terms.empty()) return false;
  std::vector<std::vector<uint32_t>> in(g.nodes.size());
  for (const GraphEdge& e : g.edges) in[e.to].push_back(e.from);
  std::vector<char> hit(g.nodes.size(), 0);
  std::deque<uint32_t> q;
  for (uint32_t t : terms) {
    hit[t] = 1;
    q.push_back(t);
  }
  while (!q.empty()) {
    uint32_t n = q.front();
    q.pop_front();
    for (uint32_t m : in[n])
      if (!hit[m]) {
        hit[m] = 1;
        q.push_back(m);
      }
  }
  return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
}

std::string report_json_line(const PropertyReport& r) {
  nlohmann::json j;
  j["property"] = r.property;
  j["verdict"] = std::string(verdict_name(r.verdict));
  j["detail"] = r.detail;
  auto& w = j["witness"] = nlohmann::json::array();
  for (uint64_t d : r.witness) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(d));
    w.push_back(buf);
  }
  return j.dump();
}

}  // namespace rbl
