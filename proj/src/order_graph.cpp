#include "mms/order_graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>

#include "mms/precision.hpp"

namespace mms {
namespace order_graph {

namespace {

using Adjacency = std::vector<std::vector<Eigen::Index>>;

Adjacency adjacency(const MmsInstance& instance, const OrderSpec& spec) {
  Adjacency adj(static_cast<std::size_t>(instance.mode_count()));
  for (const auto& [from, to] : spec.edges) {
    const Eigen::Index a = instance.mode_index(from);
    const Eigen::Index b = instance.mode_index(to);
    adj[static_cast<std::size_t>(a)].push_back(b);
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

// shortest path, ties resolved toward smaller mode indices by BFS order
std::vector<Eigen::Index> bfs_path(const Adjacency& adj, Eigen::Index from, Eigen::Index to,
                                   const std::vector<bool>* inside) {
  std::vector<Eigen::Index> parent(adj.size(), -2);
  std::queue<Eigen::Index> frontier;
  parent[static_cast<std::size_t>(from)] = -1;
  frontier.push(from);
  while (!frontier.empty()) {
    const Eigen::Index v = frontier.front();
    frontier.pop();
    for (Eigen::Index w : adj[static_cast<std::size_t>(v)]) {
      if (inside != nullptr && !(*inside)[static_cast<std::size_t>(w)]) continue;
      if (parent[static_cast<std::size_t>(w)] != -2) continue;
      parent[static_cast<std::size_t>(w)] = v;
      if (w == to) {
        std::vector<Eigen::Index> path;
        for (Eigen::Index at = to; at != -1; at = parent[static_cast<std::size_t>(at)])
          path.push_back(at);
        std::reverse(path.begin(), path.end());
        return path;
      }
      frontier.push(w);
    }
  }
  return {};
}

bool has_edge(const Adjacency& adj, Eigen::Index a, Eigen::Index b) {
  const auto& row = adj[static_cast<std::size_t>(a)];
  return std::binary_search(row.begin(), row.end(), b);
}

}  // namespace

void OrderSpec::validate(const MmsInstance& instance) const {
  if (instance.mode_index(initial) < 0)
    throw std::invalid_argument("initial mode '" + initial + "' is not a mode of the instance");
  for (const auto& [from, to] : edges) {
    if (instance.mode_index(from) < 0)
      throw std::invalid_argument("order-graph edge references unknown mode '" + from + "'");
    if (instance.mode_index(to) < 0)
      throw std::invalid_argument("order-graph edge references unknown mode '" + to + "'");
  }
}

std::vector<std::vector<Eigen::Index>> scc_candidates(const MmsInstance& instance,
                                                      const OrderSpec& spec) {
  instance.validate();
  spec.validate(instance);
  const Adjacency adj = adjacency(instance, spec);
  const std::size_t n = adj.size();

  // iterative Tarjan
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<Eigen::Index> stack;
  std::vector<std::vector<Eigen::Index>> components;
  int counter = 0;

  struct Frame {
    Eigen::Index v;
    std::size_t child;
  };
  for (std::size_t start = 0; start < n; ++start) {
    if (index[start] != -1) continue;
    std::vector<Frame> call;
    call.push_back({static_cast<Eigen::Index>(start), 0});
    index[start] = low[start] = counter++;
    stack.push_back(static_cast<Eigen::Index>(start));
    on_stack[start] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const std::size_t v = static_cast<std::size_t>(f.v);
      if (f.child < adj[v].size()) {
        const Eigen::Index w = adj[v][f.child++];
        const std::size_t wi = static_cast<std::size_t>(w);
        if (index[wi] == -1) {
          index[wi] = low[wi] = counter++;
          stack.push_back(w);
          on_stack[wi] = true;
          call.push_back({w, 0});
        } else if (on_stack[wi]) {
          low[v] = std::min(low[v], index[wi]);
        }
      } else {
        if (low[v] == index[v]) {
          std::vector<Eigen::Index> comp;
          for (;;) {
            const Eigen::Index w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = false;
            comp.push_back(w);
            if (w == f.v) break;
          }
          std::sort(comp.begin(), comp.end());
          components.push_back(std::move(comp));
        }
        call.pop_back();
        if (!call.empty()) {
          const std::size_t p = static_cast<std::size_t>(call.back().v);
          low[p] = std::min(low[p], low[v]);
        }
      }
    }
  }

  // reachability filter from the initial mode
  const Eigen::Index m0 = instance.mode_index(spec.initial);
  std::vector<bool> reachable(n, false);
  {
    std::queue<Eigen::Index> q;
    q.push(m0);
    reachable[static_cast<std::size_t>(m0)] = true;
    while (!q.empty()) {
      const Eigen::Index v = q.front();
      q.pop();
      for (Eigen::Index w : adj[static_cast<std::size_t>(v)]) {
        if (!reachable[static_cast<std::size_t>(w)]) {
          reachable[static_cast<std::size_t>(w)] = true;
          q.push(w);
        }
      }
    }
  }

  std::vector<std::vector<Eigen::Index>> out;
  for (auto& comp : components) {
    bool any = false;
    for (Eigen::Index v : comp)
      if (reachable[static_cast<std::size_t>(v)]) any = true;
    if (any) out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

std::vector<Eigen::Index> rho_sequence(const MmsInstance& instance, const OrderSpec& spec,
                                       const std::vector<Eigen::Index>& component) {
  const Adjacency adj = adjacency(instance, spec);
  std::vector<bool> inside(adj.size(), false);
  for (Eigen::Index v : component) inside[static_cast<std::size_t>(v)] = true;

  std::vector<Eigen::Index> targets = component;
  std::sort(targets.begin(), targets.end());

  if (targets.size() == 1) {
    if (!has_edge(adj, targets[0], targets[0]))
      throw std::invalid_argument("component admits no closed walk");
    return {targets[0]};
  }

  std::vector<Eigen::Index> walk{targets[0]};
  for (std::size_t k = 1; k <= targets.size(); ++k) {
    const Eigen::Index goal = k < targets.size() ? targets[k] : targets[0];
    const std::vector<Eigen::Index> path = bfs_path(adj, walk.back(), goal, &inside);
    if (path.empty()) throw std::logic_error("strongly connected component lost connectivity");
    walk.insert(walk.end(), path.begin() + 1, path.end());
  }
  walk.pop_back();  // the closing edge back to the head stays implicit
  return walk;
}

namespace {

// Exact rational value of a long double (the significand is 64 bits, so the
// value is m * 2^e for integers m, e).
Rational exact_rational_of(long double value) {
  if (value == 0.0L) return 0;
  int exp = 0;
  const long double mant = std::frexp(FloatOps<long double>::abs(value), &exp);
  const unsigned long long m = static_cast<unsigned long long>(std::ldexp(mant, 64));
  Rational q;
  mpz_class num(static_cast<unsigned long>(m));
  const long shift = exp - 64;
  if (shift >= 0) {
    mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
    q = Rational(num);
  } else {
    mpz_class den(1);
    mpz_mul_2exp(den.get_mpz_t(), den.get_mpz_t(), static_cast<mp_bitcnt_t>(-shift));
    q = Rational(num, den);
    q.canonicalize();
  }
  return value < 0 ? Rational(-q) : q;
}

// directed bracket around a floating coordinate: granularity 2^-48 plus a
// relative pad absorbing the accumulated rounding of the prefix flows
std::pair<Rational, Rational> bracket_coordinate(long double value) {
  const Rational exact = exact_rational_of(value);
  static const Rational unit = rat(1, 1) / Rational(mpz_class(1) << 48);
  const Rational pad = rat_max(unit, rat_abs(exact) / Rational(mpz_class(1) << 44));
  return {exact - pad, exact + pad};
}

}  // namespace

bool complies(const PeriodicController& controller, const OrderSpec& spec) {
  std::vector<std::string> sequence;
  for (const TimedAction& a : controller.prefix) sequence.push_back(a.mode);
  for (const TimedAction& a : controller.period) sequence.push_back(a.mode);
  if (sequence.empty() || sequence.front() != spec.initial) return false;
  const auto edge = [&](const std::string& a, const std::string& b) {
    for (const auto& [from, to] : spec.edges)
      if (from == a && to == b) return true;
    return false;
  };
  for (std::size_t k = 0; k + 1 < sequence.size(); ++k)
    if (!edge(sequence[k], sequence[k + 1])) return false;
  // the period wraps onto its own head forever
  return edge(controller.period.back().mode, controller.period.front().mode);
}

synthesis::Outcome synthesize_ordered(const MmsInstance& instance, const SafeBox& box,
                                      const RatVec& x0, const OrderSpec& spec) {
  instance.validate();
  box.validate();
  spec.validate(instance);
  if (!box.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the safe set");

  const Adjacency adj = adjacency(instance, spec);
  const Eigen::Index m0 = instance.mode_index(spec.initial);

  for (const auto& component : scc_candidates(instance, spec)) {
    // a component must support an infinite stay: internal edges are required
    if (component.size() == 1 && !has_edge(adj, component[0], component[0])) continue;

    std::vector<Eigen::Index> walk = rho_sequence(instance, spec, component);

    std::vector<std::string> component_ids;
    for (Eigen::Index v : component)
      component_ids.push_back(instance.modes[static_cast<std::size_t>(v)].id);
    const MmsInstance sub = instance.restricted_to(component_ids);
    const synthesis::Decision d = synthesis::decide(sub, box);
    if (!d.feasible) continue;

    // frequency over the component; modes pruned away keep weight zero
    FrequencyVector freq;
    for (const std::string& id : component_ids)
      freq.weights[id] = d.strict_witness.weight(id);

    std::map<Eigen::Index, long> multiplicity;
    for (Eigen::Index v : walk) ++multiplicity[v];

    const bool starts_inside =
        std::find(component.begin(), component.end(), m0) != component.end();

    std::vector<TimedAction> prefix_actions;
    Rational scale;
    if (starts_inside) {
      // rotate the cyclic walk so the first action is the initial mode
      const auto at = std::find(walk.begin(), walk.end(), m0);
      std::rotate(walk.begin(), at, walk.end());
      scale = synthesis::dwell_scale(sub, box, x0, freq, d.vars,
                                     static_cast<Eigen::Index>(walk.size()));
    } else {
      const std::vector<Eigen::Index> path = bfs_path(adj, m0, walk.front(), nullptr);
      if (path.empty()) continue;  // the walk's head is not reachable

      // equal per-step dwell small enough to stay interior for the whole path
      Rational max_drift = 0;
      bool finite = false;
      Rational bound;
      for (Eigen::Index i = 0; i < instance.num_vars; ++i) {
        Rational drift = 0;
        for (const Mode& m : instance.modes)
          drift = rat_max(drift, rat_abs(m.drive(i) - m.decay(i) * x0(i)));
        if (drift == 0) continue;
        const Rational margin = rat_min(x0(i) - box.lower(i), box.upper(i) - x0(i));
        const Rational candidate = margin / drift;
        if (!finite || candidate < bound) bound = candidate;
        finite = true;
      }
      const std::size_t steps = path.size() - 1;
      Rational step_dwell =
          finite ? Rational(bound / Rational(static_cast<long>(steps))) : Rational(1);

      // walk the prefix and certify interiority, halving on any miss
      RatVec lo_corner(instance.num_vars), hi_corner(instance.num_vars);
      for (int attempt = 0;; ++attempt) {
        if (attempt > 200) throw std::logic_error("prefix dwell refinement failed to converge");
        Vec<long double> x(instance.num_vars);
        for (Eigen::Index i = 0; i < instance.num_vars; ++i) x(i) = to_fp<long double>(x0(i));
        bool interior = true;
        const long double dt = to_fp<long double>(step_dwell);
        for (std::size_t k = 0; k + 1 < path.size() && interior; ++k) {
          const Mode& m = instance.modes[static_cast<std::size_t>(path[k])];
          x = flow_segment<long double>(x, m, dt);
          for (Eigen::Index i = 0; i < instance.num_vars; ++i) {
            if (!(to_fp<long double>(box.lower(i)) < x(i) &&
                  x(i) < to_fp<long double>(box.upper(i))))
              interior = false;
          }
        }
        if (interior) {
          for (Eigen::Index i = 0; i < instance.num_vars; ++i) {
            auto [lo, hi] = bracket_coordinate(x(i));
            lo_corner(i) = lo;
            hi_corner(i) = hi;
          }
          if (box.strictly_inside(lo_corner) && box.strictly_inside(hi_corner)) break;
        }
        step_dwell /= 2;
      }

      for (std::size_t k = 0; k + 1 < path.size(); ++k)
        prefix_actions.push_back(
            {instance.modes[static_cast<std::size_t>(path[k])].id, step_dwell});

      // conservative rescale over the whole bracket of reachable end states
      const Rational s_lo = synthesis::dwell_scale(sub, box, lo_corner, freq, d.vars,
                                                   static_cast<Eigen::Index>(walk.size()));
      const Rational s_hi = synthesis::dwell_scale(sub, box, hi_corner, freq, d.vars,
                                                   static_cast<Eigen::Index>(walk.size()));
      scale = rat_min(s_lo, s_hi);
    }

    std::vector<TimedAction> period;
    for (Eigen::Index v : walk) {
      const std::string& id = instance.modes[static_cast<std::size_t>(v)].id;
      period.push_back(
          {id, freq.weight(id) * scale / Rational(multiplicity.at(v))});
    }

    synthesis::Outcome out;
    out.feasible = true;
    out.controller = PeriodicController::make(std::move(prefix_actions), std::move(period));
    out.frequency = freq;
    out.scale = scale;
    out.surviving_modes = component_ids;
    out.surviving_vars = d.vars;
    return out;
  }
  return {};
}

}  // namespace order_graph
}  // namespace mms
