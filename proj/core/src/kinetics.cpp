#include "rbl/kinetics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>

#include <json.hpp>

#include "rbl/canonical.hpp"
#include "rbl/diag.hpp"

namespace rbl {

uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

// 53-bit uniform draw in (0, 1]; bit-stable across platforms, and never 0 so
// -log stays finite.
double u01(std::mt19937_64& g) {
  return static_cast<double>((g() >> 11) + 1) * 0x1.0p-53;
}

double pool_concentration(const PoolEntry& p, double volume) {
  return p.finite() ? static_cast<double>(p.count) / volume : p.conc;
}

double propensity(const SystemConfiguration& c,
                  const std::vector<StateVector>& vecs, const Move& m,
                  const RateConstants& r, double volume) {
  double base = m.kind == MoveKind::Draw
                    ? r.k2 * pool_concentration(c.pools[m.pool], volume)
                    : r.k1;
  double de = move_energy_delta(c, vecs, m);
  if (de > 0) base *= std::exp(-de);
  return base;
}

void check_params(const SimParams& p) {
  if (!(p.rates.k1 > 0) || !(p.rates.k2 > 0))
    throw MalformedInput("simulate: rate constants must be positive");
  if (!(p.t_max > 0)) throw MalformedInput("simulate: t_max must be positive");
  if (!(p.volume > 0)) throw MalformedInput("simulate: volume must be positive");
}

std::vector<std::string> touched_atoms(const SystemConfiguration& pre,
                                       const SystemConfiguration& post,
                                       const Move& m) {
  std::vector<std::string> out;
  auto add = [&out](const std::string& n) {
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  };
  if (m.kind == MoveKind::Draw) {
    // The drawn instance only has a name in the post configuration.
    add(post.names[m.from.inst]);
    add(post.names[m.to.inst]);
  } else {
    add(pre.names[m.from.inst]);
    add(pre.names[m.to.inst]);
    if (m.kind == MoveKind::Return) add(pre.names[m.removed]);
  }
  return out;
}

SimTrace simulate_seeded(const ConfigBundle& b, const SimParams& p,
                         uint64_t rng_seed) {
  check_params(p);
  SystemConfiguration cfg = b.config;
  if (!config_valid(cfg))
    throw MalformedInput("simulate: initial configuration is invalid");

  SimTrace tr;
  tr.rates = p.rates;
  tr.t_max = p.t_max;
  tr.seed = rng_seed;
  tr.fuel = b.fuel;
  for (const PositionObserver& o : b.observers) tr.observers.push_back(o.name);
  for (const PoolEntry& pe : cfg.pools) {
    tr.pools.push_back(pe.alias);
    tr.pool_concs.push_back(pool_concentration(pe, p.volume));
  }

  std::mt19937_64 rng(rng_seed);

  const size_t nobs = b.observers.size();
  std::vector<ObserverBinding> binds(nobs);
  auto rebind = [&] {
    for (size_t i = 0; i < nobs; ++i) binds[i] = bind_observer(cfg, b.observers[i]);
  };
  rebind();

  std::vector<int> pos(nobs, 0);
  for (size_t i = 0; i < nobs; ++i) {
    int raw = raw_position(cfg, binds[i]);
    pos[i] = raw < 0 ? 0 : raw;
  }
  tr.initial_positions = pos;

  std::vector<double> cks = p.checkpoints;
  std::sort(cks.begin(), cks.end());
  cks.erase(std::unique(cks.begin(), cks.end()), cks.end());
  tr.checkpoints = cks;
  tr.checkpoint_positions.assign(nobs, {});
  size_t next_ck = 0;
  auto flush_checkpoints = [&](double upto) {
    while (next_ck < cks.size() && cks[next_ck] < upto) {
      for (size_t i = 0; i < nobs; ++i) tr.checkpoint_positions[i].push_back(pos[i]);
      ++next_ck;
    }
  };

  std::vector<int64_t> totals(cfg.pools.size(), 0);

  const bool want_digest = p.record_visits || p.record_events;
  uint64_t cur_digest = 0;
  if (want_digest) cur_digest = canonicalize(cfg).digest;
  tr.initial_state = cur_digest;
  if (p.record_visits) tr.visits[cur_digest].entries += 1;

  double t = 0;
  std::vector<double> props, des;
  while (true) {
    auto vecs = cfg.port_states();
    auto moves = legal_moves(cfg);
    if (moves.empty()) {
      tr.stalled = true;
      tr.end_time = t;
      break;
    }
    props.resize(moves.size());
    des.resize(moves.size());
    double total = 0;
    for (size_t k = 0; k < moves.size(); ++k) {
      des[k] = move_energy_delta(cfg, vecs, moves[k]);
      double base = moves[k].kind == MoveKind::Draw
                        ? p.rates.k2 * pool_concentration(cfg.pools[moves[k].pool], p.volume)
                        : p.rates.k1;
      props[k] = des[k] > 0 ? base * std::exp(-des[k]) : base;
      total += props[k];
    }
    double dt = -std::log(u01(rng)) / total;
    if (t + dt > p.t_max) {
      if (p.record_visits) tr.visits[cur_digest].time += p.t_max - t;
      tr.end_time = p.t_max;
      break;
    }
    double tn = t + dt;
    flush_checkpoints(tn);
    if (p.record_visits) tr.visits[cur_digest].time += dt;

    double r = u01(rng) * total;
    size_t pick = moves.size() - 1;
    for (size_t k = 0; k < moves.size(); ++k) {
      if (r <= props[k]) {
        pick = k;
        break;
      }
      r -= props[k];
    }
    const Move mv = moves[pick];

    SystemConfiguration post = apply_move(cfg, mv);
    std::string label;
    std::vector<std::string> atoms;
    if (p.record_events) {
      label = describe_move(cfg, mv);
      atoms = touched_atoms(cfg, post, mv);
    }
    cfg = std::move(post);
    t = tn;
    if (mv.kind == MoveKind::Draw) totals[mv.pool] -= 1;
    if (mv.kind == MoveKind::Return) {
      totals[mv.pool] += 1;
      rebind();  // instance ids above the removed one shifted down
    }
    for (size_t i = 0; i < nobs; ++i) {
      int raw = raw_position(cfg, binds[i]);
      if (raw < 0) continue;  // position persists while unlocated
      int np = unwrap_position(pos[i], raw, binds[i].cycle);
      if (np != pos[i]) {
        pos[i] = np;
        tr.position_changes += 1;
      }
    }
    auto vecs_post = cfg.port_states();
    int par = 0;
    for (const ParallelDecl& d : b.parallel) {
      if (d.matches(cfg, vecs_post)) {
        par = d.width;
        break;
      }
    }
    if (want_digest) cur_digest = canonicalize(cfg).digest;
    if (p.record_visits) tr.visits[cur_digest].entries += 1;
    tr.event_count += 1;
    if (p.record_events) {
      TraceEvent ev;
      ev.t = t;
      ev.kind = mv.kind;
      ev.pool = (mv.kind == MoveKind::Draw || mv.kind == MoveKind::Return)
                    ? static_cast<int32_t>(mv.pool)
                    : -1;
      ev.delta_e = des[pick];
      ev.state = cur_digest;
      ev.move = mv;
      ev.label = std::move(label);
      ev.atoms = std::move(atoms);
      ev.pool_totals = totals;
      ev.positions = pos;
      ev.par = par;
      tr.events.push_back(std::move(ev));
    }
    if (p.max_events && tr.event_count >= p.max_events) {
      tr.event_capped = true;
      tr.end_time = t;
      break;
    }
  }

  flush_checkpoints(std::numeric_limits<double>::infinity());
  tr.final_positions = pos;
  tr.final_pool_totals = std::move(totals);
  tr.final_config = std::move(cfg);
  return tr;
}

}  // namespace

SimTrace simulate(const ConfigBundle& b, const SimParams& p) {
  uint64_t stream = p.seed;
  return simulate_seeded(b, p, splitmix64_next(stream));
}

std::vector<SimTrace> simulate_ensemble(const ConfigBundle& b,
                                        const SimParams& p, std::size_t count,
                                        unsigned jobs) {
  std::vector<uint64_t> seeds(count);
  uint64_t stream = p.seed;
  for (size_t i = 0; i < count; ++i) seeds[i] = splitmix64_next(stream);

  std::vector<SimTrace> out(count);
  unsigned workers = std::max(1u, std::min<unsigned>(jobs, count));
  if (workers == 1) {
    for (size_t i = 0; i < count; ++i) out[i] = simulate_seeded(b, p, seeds[i]);
    return out;
  }
  std::atomic<size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          size_t i = cursor.fetch_add(1);
          if (i >= count) return;
          try {
            out[i] = simulate_seeded(b, p, seeds[i]);
          } catch (...) {
            std::lock_guard lk(failure_mu);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ObserverBinding bind_observer(const SystemConfiguration& c,
                              const PositionObserver& o) {
  ObserverBinding b;
  b.cycle = o.cycle;
  b.subject = c.find_instance(o.subject);
  if (b.subject < 0)
    throw MalformedInput("observer " + o.name + ": no instance named " + o.subject);
  const AtomType& at = c.scheme->atoms[c.instances[b.subject]];
  for (const std::string& label : o.ports) {
    int idx = at.port_index(label);
    if (idx < 0)
      throw MalformedInput("observer " + o.name + ": " + at.name +
                           " has no port " + label);
    b.ports.push_back(static_cast<uint32_t>(idx));
  }
  for (const std::string& name : o.track) {
    int id = c.find_instance(name);
    if (id < 0)
      throw MalformedInput("observer " + o.name + ": no instance named " + name);
    b.track.push_back(static_cast<InstanceId>(id));
  }
  return b;
}

int raw_position(const SystemConfiguration& c, const ObserverBinding& b) {
  for (uint32_t port : b.ports) {
    PortRef ref{static_cast<InstanceId>(b.subject), port};
    for (const Bond& bd : c.bonds) {
      InstanceId other;
      if (bd.from == ref) other = bd.to.inst;
      else if (bd.to == ref) other = bd.from.inst;
      else continue;
      for (size_t slot = 0; slot < b.track.size(); ++slot)
        if (b.track[slot] == other) return static_cast<int>(slot);
    }
  }
  return -1;
}

int unwrap_position(int prev, int raw, int cycle) {
  if (cycle <= 0) return raw;
  int d = ((raw - prev) % cycle + cycle) % cycle;
  if (2 * d > cycle) d -= cycle;
  return prev + d;
}

int position_at(const SimTrace& t, std::size_t obs, double time) {
  if (obs >= t.initial_positions.size())
    throw MalformedInput("position_at: no such observer");
  int p = t.initial_positions[obs];
  for (const TraceEvent& ev : t.events) {
    if (ev.t > time) break;
    p = ev.positions[obs];
  }
  return p;
}

DriftPrediction predicted_drift(const RateConstants& r, double g_plus,
                                double g_minus) {
  if (!(g_plus > 0) || !(g_minus > 0))
    throw MalformedInput("predicted_drift: concentrations must be positive");
  DriftPrediction d;
  d.bias = (g_plus - g_minus) / (g_plus + g_minus);
  d.per_hop = r.k2 * (g_plus - g_minus);
  return d;
}

namespace {

// In-place Gauss-Jordan with partial pivoting; returns x solving a x = rhs.
std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> rhs,
                                size_t n) {
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (std::fabs(a[piv * n + col]) < 1e-300)
      throw MalformedInput("drift reduction: linear system is singular");
    if (piv != col) {
      for (size_t k = 0; k < n; ++k) std::swap(a[piv * n + k], a[col * n + k]);
      std::swap(rhs[piv], rhs[col]);
    }
    double d = a[col * n + col];
    for (size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = a[r * n + col] / d;
      if (f == 0) continue;
      for (size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = rhs[i] / a[i * n + i];
  return x;
}

// Solves pi Q = 0 with sum(pi) = 1; Q is row-major with off-diagonal rates
// and ignored diagonal.
std::vector<double> solve_stationary(const std::vector<double>& q, size_t n) {
  std::vector<double> a(n * n, 0.0), rhs(n, 0.0);
  for (size_t j = 0; j + 1 < n; ++j) {
    for (size_t i = 0; i < n; ++i) {
      if (i == j) {
        double exit = 0;
        for (size_t k = 0; k < n; ++k)
          if (k != i) exit += q[i * n + k];
        a[j * n + i] = -exit;
      } else {
        a[j * n + i] = q[i * n + j];
      }
    }
  }
  for (size_t i = 0; i < n; ++i) a[(n - 1) * n + i] = 1.0;
  rhs[n - 1] = 1.0;
  std::vector<double> pi = gauss_solve(std::move(a), std::move(rhs), n);
  double sum = 0;
  for (double& v : pi) {
    v = std::max(v, 0.0);
    sum += v;
  }
  for (double& v : pi) v /= sum;
  return pi;
}

}  // namespace

DriftReduction reduce_drift(const TransitionGraph& g,
                            const PositionObserver& obs,
                            const RateConstants& rates, double volume) {
  if (g.truncated)
    throw MalformedInput("drift reduction requires a complete graph");
  const size_t n = g.nodes.size();
  if (n == 0) throw MalformedInput("drift reduction: empty graph");

  std::vector<int> slot(n);
  for (size_t i = 0; i < n; ++i) {
    ObserverBinding b = bind_observer(g.nodes[i].config, obs);
    slot[i] = raw_position(g.nodes[i].config, b);
  }

  std::vector<double> q(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const SystemConfiguration& cfg = g.nodes[i].config;
    auto vecs = cfg.port_states();
    for (const Move& m : legal_moves(cfg)) {
      int j = g.find(canonicalize(apply_move(cfg, m)));
      if (j < 0)
        throw MalformedInput("drift reduction: graph is missing a successor");
      if (static_cast<size_t>(j) == i) continue;
      q[i * n + j] += propensity(cfg, vecs, m, rates, volume);
    }
  }

  DriftReduction red;
  red.pi = solve_stationary(q, n);
  red.exit_rate.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (j != i) red.exit_rate[i] += q[i * n + j];

  std::vector<double> dpos(n * n, 0.0), local_drift(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j || q[i * n + j] == 0) continue;
      if (slot[i] < 0 || slot[j] < 0) continue;
      int dp = unwrap_position(slot[i], slot[j], obs.cycle) - slot[i];
      if (dp == 0) continue;
      dpos[i * n + j] = dp;
      local_drift[i] += q[i * n + j] * dp;
      double flux = red.pi[i] * q[i * n + j] * std::fabs(dp);
      if (dp > 0) red.fwd_flux += flux;
      else red.bwd_flux += flux;
    }
  }
  red.drift = red.fwd_flux - red.bwd_flux;

  // Asymptotic variance of the position per unit time. h solves the Poisson
  // equation Q h = drift - local_drift (one balance row traded for a gauge
  // fix); each jump then contributes (dpos + h_to - h_from)^2 to the rate.
  std::vector<double> a(n * n, 0.0), rhs(n, 0.0);
  for (size_t i = 0; i + 1 < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (j == i) {
        a[i * n + i] = -red.exit_rate[i];
      } else {
        a[i * n + j] = q[i * n + j];
      }
    }
    rhs[i] = red.drift - local_drift[i];
  }
  for (size_t j = 0; j < n; ++j) a[(n - 1) * n + j] = 1.0;
  rhs[n - 1] = 0.0;
  std::vector<double> h = gauss_solve(std::move(a), std::move(rhs), n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (i == j || q[i * n + j] == 0) continue;
      double jump = dpos[i * n + j] + h[j] - h[i];
      red.diffusion += red.pi[i] * q[i * n + j] * jump * jump;
    }
  }
  return red;
}

namespace {

int collapsed_length(const std::vector<std::pair<uint64_t, int>>& path) {
  int count = 0;
  for (size_t i = 0; i < path.size();) {
    if (path[i].second == 0) {
      ++count;
      ++i;
      continue;
    }
    int w = path[i].second;
    size_t j = i;
    while (j < path.size() && path[j].second == w) ++j;
    count += static_cast<int>((j - i + w - 1) / w);
    i = j;
  }
  return count;
}

}  // namespace

std::map<int, int64_t> steps_per_transition(const SimTrace& t,
                                            std::size_t obs) {
  if (t.event_count == 0) return {};  // nothing moved, nothing to count
  if (obs >= t.initial_positions.size())
    throw MalformedInput("steps_per_transition: no such observer");
  if (t.events.empty())
    throw MalformedInput("steps_per_transition needs recorded events");

  std::map<int, int64_t> hist;
  // Loop-erased path since the last rest state: (state digest, region width).
  std::vector<std::pair<uint64_t, int>> path;
  uint64_t rest_state = t.initial_state;  // the trace starts at rest
  int last_rest_pos = t.initial_positions[obs];
  for (const TraceEvent& ev : t.events) {
    if (ev.state == rest_state) {
      path.clear();  // walked all the way back; the whole excursion cancels
    } else {
      size_t k = path.size();
      while (k > 0 && path[k - 1].first != ev.state) --k;
      if (k > 0) path.resize(k);  // close the cycle at its first visit
      else path.emplace_back(ev.state, ev.par);
    }
    if (ev.kind != MoveKind::Return) continue;
    // A pool return puts the machine back in a rest state; a new position
    // closes one net step.
    if (ev.positions[obs] != last_rest_pos) {
      hist[collapsed_length(path)] += 1;
      last_rest_pos = ev.positions[obs];
    }
    rest_state = ev.state;
    path.clear();
  }
  return hist;
}

WalkerStats walker_stats(std::span<const SimTrace> traces, std::size_t obs) {
  if (traces.empty()) throw MalformedInput("walker_stats: no traces");
  WalkerStats ws;
  ws.n = traces.size();
  double sum = 0, sumsq = 0, dur = 0;
  for (const SimTrace& t : traces) {
    if (obs >= t.initial_positions.size())
      throw MalformedInput("walker_stats: no such observer");
    double d = t.final_positions[obs] - t.initial_positions[obs];
    sum += d;
    sumsq += d * d;
    dur += t.end_time;
    ws.steps_observed += static_cast<int64_t>(t.position_changes);
  }
  ws.mean_displacement = sum / ws.n;
  if (ws.n > 1) {
    double var = (sumsq - sum * sum / ws.n) / (ws.n - 1);
    ws.displacement_std = std::sqrt(std::max(var, 0.0));
  }
  ws.duration = dur / ws.n;

  const SimTrace& t0 = traces[0];
  if (t0.fuel) {
    auto idx = [&t0](const std::string& alias) -> int {
      for (size_t i = 0; i < t0.pools.size(); ++i)
        if (t0.pools[i] == alias) return static_cast<int>(i);
      return -1;
    };
    int di = idx(t0.fuel->draw_alias), ri = idx(t0.fuel->return_alias);
    if (di >= 0 && ri >= 0)
      ws.predicted_drift_rate =
          t0.rates.k2 * (t0.pool_concs[di] - t0.pool_concs[ri]);
  }
  double se = ws.n > 1 ? ws.displacement_std / std::sqrt(double(ws.n)) : 0;
  double gap = ws.mean_displacement - ws.predicted_drift_rate * ws.duration;
  ws.z = se > 0 ? gap / se : (gap == 0 ? 0 : std::numeric_limits<double>::infinity());
  return ws;
}

FuelStats fuel_stats(std::span<const SimTrace> traces) {
  FuelStats fs;
  for (const SimTrace& t : traces) {
    if (!t.fuel) continue;
    int di = -1, ri = -1;
    for (size_t i = 0; i < t.pools.size(); ++i) {
      if (t.pools[i] == t.fuel->draw_alias) di = static_cast<int>(i);
      if (t.pools[i] == t.fuel->return_alias) ri = static_cast<int>(i);
    }
    if (di < 0 || ri < 0) continue;
    fs.consumed += -t.final_pool_totals[di];
    fs.produced += t.final_pool_totals[ri];
    fs.duration += t.end_time;
    fs.n += 1;
  }
  if (fs.n == 0) throw MalformedInput("fuel_stats: no traces carry a fuel declaration");
  fs.rate = fs.duration > 0 ? fs.consumed / fs.duration : 0;
  return fs;
}

namespace {

nlohmann::json positions_json(const std::vector<int>& v) {
  return nlohmann::json(v);
}

MoveKind kind_from_name(const std::string& s) {
  if (s == "form") return MoveKind::Form;
  if (s == "break") return MoveKind::Break;
  if (s == "recolor") return MoveKind::Recolor;
  if (s == "draw") return MoveKind::Draw;
  if (s == "return") return MoveKind::Return;
  throw MalformedInput("trace: unknown move kind " + s);
}

}  // namespace

void write_trace(const SimTrace& t, std::ostream& out) {
  nlohmann::json meta{
      {"rbl_trace", 1},
      {"seed", t.seed},
      {"k1", t.rates.k1},
      {"k2", t.rates.k2},
      {"t_max", t.t_max},
      {"end_time", t.end_time},
      {"stalled", t.stalled},
      {"capped", t.event_capped},
      {"events", t.event_count},
      {"observers", t.observers},
      {"pools", t.pools},
      {"pool_concs", t.pool_concs},
      {"initial_positions", positions_json(t.initial_positions)},
      {"initial_state", t.initial_state},
      {"final_positions", positions_json(t.final_positions)},
      {"final_pool_totals", t.final_pool_totals},
      {"position_changes", t.position_changes},
      {"checkpoints", t.checkpoints},
      {"checkpoint_positions", t.checkpoint_positions},
  };
  if (t.fuel)
    meta["fuel"] = {{"draw", t.fuel->draw_alias}, {"return", t.fuel->return_alias}};
  out << meta.dump() << '\n';
  for (const TraceEvent& ev : t.events) {
    nlohmann::json e{
        {"t", ev.t},          {"kind", move_kind_name(ev.kind)},
        {"de", ev.delta_e},   {"label", ev.label},
        {"atoms", ev.atoms},  {"totals", ev.pool_totals},
        {"pos", positions_json(ev.positions)},
        {"par", ev.par},      {"state", ev.state},
    };
    if (ev.pool >= 0) e["pool"] = ev.pool;
    out << e.dump() << '\n';
  }
}

std::vector<SimTrace> read_traces(std::istream& in) {
  std::vector<SimTrace> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw MalformedInput("trace line " + std::to_string(lineno) +
                           ": not valid JSON");
    try {
      if (j.contains("rbl_trace")) {
        SimTrace t;
        t.seed = j.at("seed").get<uint64_t>();
        t.rates.k1 = j.at("k1").get<double>();
        t.rates.k2 = j.at("k2").get<double>();
        t.t_max = j.at("t_max").get<double>();
        t.end_time = j.at("end_time").get<double>();
        t.stalled = j.at("stalled").get<bool>();
        t.event_capped = j.value("capped", false);
        t.event_count = j.at("events").get<uint64_t>();
        t.observers = j.at("observers").get<std::vector<std::string>>();
        t.pools = j.at("pools").get<std::vector<std::string>>();
        t.pool_concs = j.at("pool_concs").get<std::vector<double>>();
        t.initial_positions = j.at("initial_positions").get<std::vector<int>>();
        t.initial_state = j.value("initial_state", uint64_t{0});
        t.final_positions = j.at("final_positions").get<std::vector<int>>();
        t.final_pool_totals =
            j.at("final_pool_totals").get<std::vector<int64_t>>();
        t.position_changes = j.at("position_changes").get<uint64_t>();
        t.checkpoints = j.value("checkpoints", std::vector<double>{});
        t.checkpoint_positions = j.value("checkpoint_positions",
                                         std::vector<std::vector<int>>{});
        if (j.contains("fuel") && !j["fuel"].is_null())
          t.fuel = FuelDecl{j["fuel"].at("draw").get<std::string>(),
                            j["fuel"].at("return").get<std::string>()};
        out.push_back(std::move(t));
      } else {
        if (out.empty())
          throw MalformedInput("trace line " + std::to_string(lineno) +
                               ": event before any trace header");
        TraceEvent ev;
        ev.t = j.at("t").get<double>();
        ev.kind = kind_from_name(j.at("kind").get<std::string>());
        ev.pool = j.value("pool", -1);
        ev.delta_e = j.at("de").get<double>();
        ev.label = j.value("label", std::string{});
        ev.atoms = j.value("atoms", std::vector<std::string>{});
        ev.pool_totals = j.at("totals").get<std::vector<int64_t>>();
        ev.positions = j.at("pos").get<std::vector<int>>();
        ev.par = j.at("par").get<int>();
        ev.state = j.value("state", uint64_t{0});
        out.back().events.push_back(std::move(ev));
      }
    } catch (const nlohmann::json::exception& e) {
      throw MalformedInput("trace line " + std::to_string(lineno) + ": " +
                           e.what());
    }
  }
  return out;
}

}  // namespace rbl
