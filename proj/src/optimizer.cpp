#include "mms/optimizer.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <stdexcept>

namespace mms {
namespace optimizer {

void CostWeights::validate() const {
  if (mu_avg < 0 || mu_peak < 0) throw std::invalid_argument("cost weights must be nonnegative");
  if (mu_avg == 0 && mu_peak == 0)
    throw std::invalid_argument("at least one cost weight must be positive");
}

Rational average_cost_of(const PeriodicController& controller, const MmsInstance& instance) {
  Rational weighted = 0, total = 0;
  for (const TimedAction& act : controller.period) {
    const Mode* m = instance.find_mode(act.mode);
    if (m == nullptr)
      throw std::invalid_argument("controller uses unknown mode '" + act.mode + "'");
    weighted += m->price * act.dwell;
    total += act.dwell;
  }
  if (total == 0) throw std::invalid_argument("controller period has zero total time");
  return weighted / total;
}

namespace {

Rational mix_epsilon(const Rational& epsilon, const Rational& interior_cost,
                     const Rational& infimum) {
  const Rational gap = interior_cost - infimum;
  return gap > 1 ? Rational(epsilon / gap) : epsilon;
}

FrequencyVector mix_vectors(const FrequencyVector& optimum, const FrequencyVector& interior,
                            const Rational& eps) {
  FrequencyVector out;
  for (const auto& [id, w] : optimum.weights) out.weights[id] += (1 - eps) * w;
  for (const auto& [id, w] : interior.weights) out.weights[id] += eps * w;
  for (auto it = out.weights.begin(); it != out.weights.end();)
    it = it->second == 0 ? out.weights.erase(it) : std::next(it);
  return out;
}

// ---------------------------------------------------------------------------
// Implicit mode sets: restricted-master solves with zone-separable pricing.
// The capped product space never gets materialized; candidate joint choices
// are generated against the master's dual prices.
// ---------------------------------------------------------------------------

using Choice = BuildingSpec::Choice;

struct ColGenClock {
  double master_ms = 0;
  double pricing_ms = 0;
  long master_calls = 0;
  ~ColGenClock() {
    if (std::getenv("MMS_DEBUG_COLGEN") != nullptr)
      std::cerr << "[colgen] master " << master_ms << " ms over " << master_calls
                << " solves, pricing " << pricing_ms << " ms\n";
  }
};
thread_local ColGenClock g_colgen_clock;
struct ScopedMs {
  double& slot;
  std::chrono::steady_clock::time_point start;
  explicit ScopedMs(double& s) : slot(s), start(std::chrono::steady_clock::now()) {}
  ~ScopedMs() {
    slot += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
  }
};

struct MasterSolve {
  Rational margin;  // maximized strictness margin (meaningless for cost solves)
  std::vector<Rational> f;
  std::vector<Rational> duals;
  Rational cost;  // objective for cost solves
};

class ImplicitSolver {
 public:
  ImplicitSolver(const BuildingSpec& building, std::optional<Rational> cap,
                 const std::vector<Choice>* warm_start = nullptr,
                 const std::vector<lp::BasisEntry>* basis_hint = nullptr)
      : building_(building), cap_(std::move(cap)) {
    if (basis_hint != nullptr) margin_hint_ = *basis_hint;
    building_.validate();
    const std::size_t zones = building_.zones.size();
    allowed_.resize(zones);
    for (std::size_t z = 0; z < zones; ++z) {
      allowed_[z].push_back(-1);
      for (std::size_t s = 0; s < building_.zones[z].settings.size(); ++s)
        allowed_[z].push_back(static_cast<int>(s));
    }
    for (Eigen::Index i = 0; i < building_.zone_count(); ++i) vars_.push_back(i);
    if (warm_start != nullptr) {
      for (auto it = warm_start->rbegin(); it != warm_start->rend(); ++it) {
        if (columns_.size() >= 128) break;
        add_if_admissible(*it);
      }
    }
    seed_columns();
  }

  struct Decision {
    bool feasible = false;
    bool weak_feasible = false;
    Rational margin;
    FrequencyVector strict_witness;
    std::vector<Eigen::Index> vars;
    std::vector<Choice> columns;
    std::vector<lp::BasisEntry> margin_basis;
  };

  Decision decide() {
    Decision out;
    for (;;) {
      const MasterSolve global = certify_margin(std::nullopt, /*early_positive=*/true);
      if (global.margin > 0) {
        out.feasible = true;
        out.weak_feasible = true;
        out.margin = global.margin;
        out.strict_witness = witness_from(global.f);
        out.vars = vars_;
        out.columns = columns_;
        out.margin_basis = margin_hint_;
        return out;
      }
      if (global.margin < 0) {
        out.margin_basis = margin_hint_;
        return out;  // certified weakly infeasible
      }

      out.weak_feasible = true;
      // margin == 0 certified: some variable is critical in every good vector
      bool removed = false;
      for (std::size_t k = 0; k < vars_.size() && !removed; ++k) {
        const MasterSolve probe = certify_margin(k, /*early_positive=*/true);
        if (probe.margin > 0) continue;
        restrict_variable(k, global.f);
        removed = true;
      }
      if (!removed)
        throw std::logic_error("zero-margin system must have a variable critical everywhere");
      if (columns_.empty() && !reseed_restricted()) return out;  // capped space emptied
    }
  }

  struct CostOutcome {
    Rational infimum;
    FrequencyVector optimum;
    std::vector<Choice> columns;
  };

  // exact minimum of the mode-price objective over the weak closure; requires
  // a prior feasible decide() so the master carries a feasible column set
  CostOutcome min_cost() {
    for (std::size_t round = 0;; ++round) {
      guard_rounds(round);
      const lp::LinearProgram master = cost_master();
      const lp::LpResult r = lp::solve(master, cost_hint_.empty() ? nullptr : &cost_hint_);
      if (r.status != lp::LpStatus::Optimal)
        throw std::logic_error("cost master must stay feasible and bounded");
      cost_hint_ = r.basis;
      PricingQuery q;
      q.cost_scale = 1;
      q.constant = -r.duals[0];
      q.row_duals = row_duals(r.duals);
      for (auto& [lo, hi] : q.row_duals) {
        lo = -lo;  // reduced cost of a column is price - y^T A
        hi = -hi;
      }
      const auto priced = price_out_batch(q);
      if (priced.empty() || !(priced.front().second < 0)) {
        CostOutcome out;
        out.infimum = r.value;
        out.optimum = witness_from(r.assignment);
        out.columns = columns_;
        return out;
      }
      for (const auto& [choice, value] : priced)
        if (value < 0 && !known_.count(choice)) add_column(choice);
    }
  }

  Mode materialize(const Choice& c) const { return materialize_mode(building_, c); }

 private:
  struct PricingQuery {
    Rational cost_scale;  // 1: include mode price in the reduced cost
    Rational constant;
    std::vector<std::pair<Rational, Rational>> row_duals;  // per vars_ entry: (lower, upper)
  };

  void guard_rounds(std::size_t round) const {
    if (round > 100000)
      throw std::logic_error("column generation failed to converge");
  }

  std::vector<std::pair<Rational, Rational>> row_duals(const std::vector<Rational>& duals) const {
    std::vector<std::pair<Rational, Rational>> out(vars_.size());
    for (std::size_t k = 0; k < vars_.size(); ++k)
      out[k] = {duals[1 + 2 * k], duals[2 + 2 * k]};
    return out;
  }

  FrequencyVector witness_from(const std::vector<Rational>& f) const {
    FrequencyVector out;
    for (std::size_t c = 0; c < columns_.size(); ++c)
      if (f[c] != 0) out.weights[building_.choice_id(columns_[c])] = f[c];
    return out;
  }

  void seed_columns() {
    add_if_admissible(Choice(building_.zones.size(), -1));
    // per zone: the strongest affordable single-zone engagement
    for (std::size_t z = 0; z < building_.zones.size(); ++z) {
      int best = -1;
      for (int e : allowed_[z]) {
        if (e < 0) continue;
        Choice c(building_.zones.size(), -1);
        c[z] = e;
        if (cap_ && building_.choice_price(c) > *cap_) continue;
        if (best < 0 || building_.zones[z].settings[static_cast<std::size_t>(e)].drive >
                            building_.zones[z].settings[static_cast<std::size_t>(best)].drive)
          best = e;
      }
      if (best >= 0) {
        Choice c(building_.zones.size(), -1);
        c[z] = best;
        add_if_admissible(c);
      }
    }
    // every zone at its cheapest powered setting, when affordable
    if (!building_.max_active || static_cast<std::size_t>(*building_.max_active) >=
                                     building_.zones.size()) {
      Choice c(building_.zones.size(), -1);
      bool complete = true;
      for (std::size_t z = 0; z < building_.zones.size(); ++z) {
        int cheapest = -1;
        for (int e : allowed_[z]) {
          if (e < 0) continue;
          if (cheapest < 0 ||
              building_.zones[z].settings[static_cast<std::size_t>(e)].power <
                  building_.zones[z].settings[static_cast<std::size_t>(cheapest)].power)
            cheapest = e;
        }
        if (cheapest < 0) complete = false;
        c[z] = cheapest;
      }
      if (complete && (!cap_ || building_.choice_price(c) <= *cap_)) add_if_admissible(c);
    }
    if (columns_.empty())
      throw std::invalid_argument("no admissible mode within the price cap");
  }

  void add_if_admissible(const Choice& c) {
    for (std::size_t z = 0; z < c.size(); ++z) {
      if (std::find(allowed_[z].begin(), allowed_[z].end(), c[z]) == allowed_[z].end()) return;
    }
    if (cap_ && building_.choice_price(c) > *cap_) return;
    if (!building_.admissible(c)) return;
    if (!known_.insert(c).second) return;
    columns_.push_back(c);
  }

  void add_column(const Choice& c) {
    if (!known_.insert(c).second)
      throw std::logic_error("pricing produced a column that is already present");
    columns_.push_back(c);
  }

  // keep the master small: drop zero-weight columns once the objective has
  // strictly improved since the last purge (they may always price back in)
  void purge_columns(const std::vector<Rational>& weights, std::size_t keep_limit) {
    if (columns_.size() <= keep_limit) return;
    std::vector<Choice> kept;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const bool active = c < weights.size() && weights[c] != 0;
      const bool recent = c + 32 >= columns_.size();
      if (active || recent) {
        kept.push_back(columns_[c]);
      } else {
        known_.erase(columns_[c]);
      }
    }
    columns_ = std::move(kept);
  }

  // after a restriction emptied the master, try the cheapest choice of the
  // restricted space so the simplex row stays satisfiable
  bool reseed_restricted() {
    Choice c(building_.zones.size(), -1);
    int on = 0;
    for (std::size_t z = 0; z < building_.zones.size(); ++z) {
      if (allowed_[z].empty()) return false;
      int pick = allowed_[z].front();
      for (int e : allowed_[z]) {
        if (e < 0) {
          pick = e;  // off costs nothing and keeps the cap slack
          break;
        }
        if (pick >= 0 && building_.zones[z].settings[static_cast<std::size_t>(e)].power <
                             building_.zones[z].settings[static_cast<std::size_t>(pick)].power)
          pick = e;
      }
      c[z] = pick;
      if (pick >= 0) ++on;
    }
    if (cap_ && building_.choice_price(c) > *cap_) return false;
    if (building_.max_active && on > *building_.max_active) return false;
    add_if_admissible(c);
    return !columns_.empty();
  }

  // master with a free margin variable subtracted from the strict rows;
  // margin_k = nullopt makes every remaining variable's rows strict
  lp::LinearProgram margin_master(std::optional<std::size_t> margin_k) const {
    lp::LinearProgram p;
    for (const Choice& c : columns_) p.variables.push_back(building_.choice_id(c));
    p.variables.push_back("_margin");
    p.nonnegative.assign(p.variables.size(), true);
    p.nonnegative.back() = false;  // the margin may go negative; the master stays solvable

    const std::size_t n = p.variables.size();
    std::vector<Rational> simplex(n, Rational(0));
    for (std::size_t c = 0; c < columns_.size(); ++c) simplex[c] = 1;
    p.add_constraint(std::move(simplex), lp::Relation::Equal, Rational(1));

    for (std::size_t k = 0; k < vars_.size(); ++k) {
      const Eigen::Index i = vars_[k];
      const bool strict = !margin_k || *margin_k == k;
      std::vector<Rational> lo(n, Rational(0)), hi(n, Rational(0));
      for (std::size_t c = 0; c < columns_.size(); ++c) {
        const auto [a, b] = building_.zone_dynamics(static_cast<std::size_t>(i),
                                                    columns_[c][static_cast<std::size_t>(i)]);
        lo[c] = b - a * building_.comfort.lower(i);
        hi[c] = b - a * building_.comfort.upper(i);
      }
      if (strict) {
        lo.back() = -1;
        hi.back() = 1;
      }
      p.add_constraint(std::move(lo), lp::Relation::GreaterEqual, Rational(0));
      p.add_constraint(std::move(hi), lp::Relation::LessEqual, Rational(0));
    }
    std::vector<Rational> bound(n, Rational(0));
    bound.back() = 1;
    p.add_constraint(std::move(bound), lp::Relation::LessEqual, Rational(1));

    lp::Objective obj;
    obj.sense = lp::Sense::Maximize;
    obj.coeffs.assign(n, Rational(0));
    obj.coeffs.back() = 1;
    p.objective = obj;
    return p;
  }

  lp::LinearProgram cost_master() const {
    lp::LinearProgram p;
    for (const Choice& c : columns_) p.variables.push_back(building_.choice_id(c));
    p.nonnegative.assign(p.variables.size(), true);
    const std::size_t n = p.variables.size();
    std::vector<Rational> simplex(n, Rational(1));
    p.add_constraint(std::move(simplex), lp::Relation::Equal, Rational(1));
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      const Eigen::Index i = vars_[k];
      std::vector<Rational> lo(n), hi(n);
      for (std::size_t c = 0; c < columns_.size(); ++c) {
        const auto [a, b] = building_.zone_dynamics(static_cast<std::size_t>(i),
                                                    columns_[c][static_cast<std::size_t>(i)]);
        lo[c] = b - a * building_.comfort.lower(i);
        hi[c] = b - a * building_.comfort.upper(i);
      }
      p.add_constraint(std::move(lo), lp::Relation::GreaterEqual, Rational(0));
      p.add_constraint(std::move(hi), lp::Relation::LessEqual, Rational(0));
    }
    lp::Objective obj;
    obj.sense = lp::Sense::Minimize;
    obj.coeffs.resize(n);
    for (std::size_t c = 0; c < columns_.size(); ++c)
      obj.coeffs[c] = building_.choice_price(columns_[c]);
    p.objective = obj;
    return p;
  }

  // column generation until either the margin goes positive (early exit,
  // sound for feasibility) or the master optimum is certified over the whole
  // capped choice space. The convexity row makes delta*_master + max reduced
  // cost an upper bound on the full optimum, so hopelessly negative systems
  // stop without exhausting the pricing.
  MasterSolve certify_margin(std::optional<std::size_t> margin_k, bool early_positive) {
    for (std::size_t round = 0;; ++round) {
      guard_rounds(round);
      g_colgen_clock.master_calls += 1;
      const lp::LinearProgram master = margin_master(margin_k);
      lp::LpResult r;
      {
        ScopedMs t(g_colgen_clock.master_ms);
        r = lp::solve(master, margin_hint_.empty() ? nullptr : &margin_hint_);
      }
      if (r.status != lp::LpStatus::Optimal)
        throw std::logic_error("margin master must stay feasible and bounded");
      margin_hint_ = r.basis;
      MasterSolve ms;
      ms.margin = r.value;
      ms.f.assign(r.assignment.begin(), r.assignment.end() - 1);
      ms.duals = r.duals;
      if (early_positive && ms.margin > 0) return ms;

      PricingQuery q;
      q.cost_scale = 0;
      q.constant = r.duals[0];
      q.row_duals = row_duals(r.duals);
      // maximization master: a new column improves when its dual price
      // y^T A_m is negative
      std::vector<std::pair<Choice, Rational>> priced;
      {
        ScopedMs t(g_colgen_clock.pricing_ms);
        priced = price_out_batch(q);
      }
      if (priced.empty() || !(priced.front().second < 0)) return ms;
      const Rational upper = ms.margin - priced.front().second;
      if (upper < 0) {
        ms.margin = upper;  // certified infeasible without further pricing
        return ms;
      }
      purge_columns(ms.f, 96);  // safe here: nothing downstream reads ms.f
      for (const auto& [choice, value] : priced)
        if (value < 0 && !known_.count(choice)) add_column(choice);
      if (std::getenv("MMS_DEBUG_COLGEN") != nullptr && round % 16 == 0)
        std::cerr << "colgen round " << round << " cols " << columns_.size() << " margin "
                  << to_double(ms.margin) << "\n";
    }
  }

  // the best few complete states, cheapest first; the head is the exact
  // minimum, the tail feeds the master extra columns per round
  std::vector<std::pair<Choice, Rational>> price_out_batch(const PricingQuery& q) const {
    std::vector<std::pair<Choice, Rational>> out;
    const auto single = price_out(q);
    if (!single) return out;
    out.push_back(*single);
    for (auto& [choice, value] : extra_candidates_) {
      if (choice == single->first) continue;
      out.push_back({choice, value});
    }
    return out;
  }

  // zone-separable pricing: minimize constant + sum_z h_z(entry) over
  // admissible choices within the cap
  std::optional<std::pair<Choice, Rational>> price_out(const PricingQuery& q) const {
    const std::size_t zones = building_.zones.size();
    // h contributions per zone and allowed entry
    std::vector<std::vector<std::pair<int, Rational>>> contrib(zones);
    std::vector<std::size_t> var_slot(zones, SIZE_MAX);
    for (std::size_t k = 0; k < vars_.size(); ++k)
      var_slot[static_cast<std::size_t>(vars_[k])] = k;
    for (std::size_t z = 0; z < zones; ++z) {
      for (int e : allowed_[z]) {
        const auto [a, b] = building_.zone_dynamics(z, e);
        Rational h = 0;
        if (var_slot[z] != SIZE_MAX) {
          const auto& [y_lo, y_hi] = q.row_duals[var_slot[z]];
          h += y_lo * (b - a * building_.comfort.lower(static_cast<Eigen::Index>(z)));
          h += y_hi * (b - a * building_.comfort.upper(static_cast<Eigen::Index>(z)));
        }
        if (q.cost_scale != 0 && e >= 0)
          h += q.cost_scale * building_.zones[z].settings[static_cast<std::size_t>(e)].power;
        contrib[z].push_back({e, h});
      }
    }

    // relaxed per-zone minima bound every completion; states that cannot
    // reach a negative total any more are useless both for improvement and
    // for the no-improving-column certificate
    std::vector<Rational> suffix_min(zones + 1, Rational(0));
    for (std::size_t z = zones; z-- > 0;) {
      const Rational* best_h = nullptr;
      for (const auto& [e, h] : contrib[z])
        if (best_h == nullptr || h < *best_h) best_h = &h;
      suffix_min[z] = suffix_min[z + 1] + (best_h != nullptr ? *best_h : Rational(0));
    }

    extra_candidates_.clear();
    if (!cap_ && !building_.max_active) {
      // unconstrained: zones separate completely
      Choice best(zones, -1);
      Rational total = q.constant;
      for (std::size_t z = 0; z < zones; ++z) {
        const auto* pick = &contrib[z].front();
        for (const auto& cand : contrib[z])
          if (cand.second < pick->second) pick = &cand;
        best[z] = pick->first;
        total += pick->second;
      }
      return std::make_pair(best, total);
    }

    // DP over zones; states keyed by (accumulated price, heaters on). After
    // each zone only the Pareto staircase survives: a state is dropped when a
    // cheaper-or-equal state with no more heaters already costs no more,
    // which keeps the state count tied to useful price/cost tradeoffs rather
    // than the number of distinct subset sums.
    struct State {
      Rational cost;
      Choice partial;
    };
    std::map<std::pair<Rational, int>, State> states;
    states[{Rational(0), 0}] = {Rational(0), {}};
    const int on_limit =
        building_.max_active ? *building_.max_active : static_cast<int>(zones);
    for (std::size_t z = 0; z < zones; ++z) {
      std::map<std::pair<Rational, int>, State> next;
      for (const auto& [key, st] : states) {
        for (const auto& [e, h] : contrib[z]) {
          Rational price = key.first;
          int on = key.second;
          if (e >= 0) {
            price += building_.zones[z].settings[static_cast<std::size_t>(e)].power;
            ++on;
          }
          if (cap_ && price > *cap_) continue;
          if (on > on_limit) continue;
          State cand;
          cand.cost = st.cost + h;
          if (cand.cost + suffix_min[z + 1] + q.constant >= 0) continue;
          cand.partial = st.partial;
          cand.partial.push_back(e);
          auto it = next.find({price, on});
          if (it == next.end()) {
            next.emplace(std::make_pair(price, on), std::move(cand));
          } else if (cand.cost < it->second.cost ||
                     (cand.cost == it->second.cost && cand.partial < it->second.partial)) {
            it->second = std::move(cand);
          }
        }
      }
      if (next.empty()) return std::nullopt;
      // staircase sweep in (price, on) order: min cost per on-count so far
      std::map<std::pair<Rational, int>, State> kept;
      std::vector<std::optional<Rational>> best(static_cast<std::size_t>(on_limit) + 1);
      for (auto& [key, st] : next) {
        bool dominated = false;
        for (int on = 0; on <= key.second && !dominated; ++on) {
          const auto& b = best[static_cast<std::size_t>(on)];
          if (b && *b <= st.cost) dominated = true;
        }
        if (dominated) continue;
        auto& slot = best[static_cast<std::size_t>(key.second)];
        if (!slot || st.cost < *slot) slot = st.cost;
        kept.emplace(key, std::move(st));
      }
      states = std::move(kept);
    }
    const State* best = nullptr;
    std::vector<const State*> ranked;
    for (const auto& [key, st] : states) {
      ranked.push_back(&st);
      if (best == nullptr || st.cost < best->cost ||
          (st.cost == best->cost && st.partial < best->partial))
        best = &st;
    }
    if (best == nullptr) return std::nullopt;
    std::sort(ranked.begin(), ranked.end(), [](const State* a, const State* b) {
      if (a->cost != b->cost) return a->cost < b->cost;
      return a->partial < b->partial;
    });
    for (std::size_t k = 0; k < ranked.size() && extra_candidates_.size() < 23; ++k) {
      if (ranked[k] == best) continue;
      extra_candidates_.push_back({ranked[k]->partial, ranked[k]->cost + q.constant});
    }
    return std::make_pair(best->partial, best->cost + q.constant);
  }

  // variable vars_[k] is critical in every good vector: pin zone k's choices
  // to the equilibria matching the critical bound and drop the variable
  void restrict_variable(std::size_t k, const std::vector<Rational>& weak_witness) {
    const Eigen::Index i = vars_[k];
    const std::size_t z = static_cast<std::size_t>(i);
    Rational drift_lo = 0;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto [a, b] = building_.zone_dynamics(z, columns_[c][z]);
      drift_lo += weak_witness[c] * (b - a * building_.comfort.lower(i));
    }
    const Rational bound = drift_lo == 0 ? building_.comfort.lower(i) : building_.comfort.upper(i);

    std::vector<int> kept;
    for (int e : allowed_[z]) {
      const auto [a, b] = building_.zone_dynamics(z, e);
      if (b == a * bound) kept.push_back(e);
    }
    allowed_[z] = std::move(kept);
    vars_.erase(vars_.begin() + static_cast<std::ptrdiff_t>(k));

    std::vector<Choice> surviving;
    for (const Choice& c : columns_) {
      if (std::find(allowed_[z].begin(), allowed_[z].end(), c[z]) != allowed_[z].end())
        surviving.push_back(c);
      else
        known_.erase(c);
    }
    columns_ = std::move(surviving);
  }

  BuildingSpec building_;
  std::optional<Rational> cap_;
  mutable std::vector<std::pair<Choice, Rational>> extra_candidates_;
  Rational last_margin_;
  bool margin_improved_valid_ = false;
  std::vector<lp::BasisEntry> margin_hint_;
  std::vector<lp::BasisEntry> cost_hint_;
  std::vector<std::vector<int>> allowed_;
  std::vector<Eigen::Index> vars_;
  std::vector<Choice> columns_;
  std::set<Choice> known_;
};

// ---------------------------------------------------------------------------
// Price-level pools: explicit instances sort their modes once; buildings
// consume the lazy cursor and remember only (level, cumulative count).
// ---------------------------------------------------------------------------

class LevelPool {
 public:
  virtual ~LevelPool() = default;
  // ensures at least `count` cheapest modes (with price ties completed) are
  // known; returns false once the space is exhausted below that count
  virtual bool ensure_count(std::size_t count) = 0;
  virtual void ensure_price(const Rational& price) = 0;
  const std::vector<Rational>& levels() const { return levels_; }
  bool exhausted() const { return exhausted_; }

 protected:
  std::vector<Rational> levels_;
  bool exhausted_ = false;
};

class ExplicitPool : public LevelPool {
 public:
  explicit ExplicitPool(const MmsInstance& instance) {
    std::vector<Rational> prices;
    for (const Mode& m : instance.modes) prices.push_back(m.price);
    std::sort(prices.begin(), prices.end());
    sorted_prices_ = prices;
    prices.erase(std::unique(prices.begin(), prices.end()), prices.end());
    levels_ = std::move(prices);
    exhausted_ = true;
  }
  bool ensure_count(std::size_t count) override { return count <= sorted_prices_.size(); }
  void ensure_price(const Rational&) override {}
  Rational level_for_count(std::size_t count) const {
    return sorted_prices_[std::min(count, sorted_prices_.size()) - 1];
  }

 private:
  std::vector<Rational> sorted_prices_;
};

class CursorPool : public LevelPool {
 public:
  explicit CursorPool(const BuildingSpec& building) : cursor_(building) {}

  bool ensure_count(std::size_t count) override {
    while (total_ < count) {
      if (!pull()) return false;
    }
    // complete the tie class so M_{<=level} is whole
    while (const Rational* p = cursor_.peek_price()) {
      if (*p != levels_.back()) break;
      pull();
    }
    return true;
  }

  void ensure_price(const Rational& price) override {
    while (const Rational* p = cursor_.peek_price()) {
      if (*p > price) return;
      pull();
    }
  }

  Rational level_for_count(std::size_t count) {
    ensure_count(count);
    std::size_t cumulative = 0;
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      cumulative += counts_[i];
      if (cumulative >= count) return levels_[i];
    }
    return levels_.back();
  }

 private:
  bool pull() {
    const Rational* p = cursor_.peek_price();
    if (p == nullptr) {
      exhausted_ = true;
      return false;
    }
    const Rational price = *p;
    cursor_.next();
    ++total_;
    if (levels_.empty() || levels_.back() != price) {
      levels_.push_back(price);
      counts_.push_back(1);
    } else {
      ++counts_.back();
    }
    return true;
  }

  ModeCursor cursor_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

// Doubling on the candidate-set size, then binary search on the bracketed
// levels. `probe` answers safe controllability of the price-capped set; a
// missing cap means the whole mode space.
std::optional<Rational> peak_search(
    LevelPool& pool, const std::function<Rational(std::size_t)>& level_for_count,
    const std::function<bool(std::optional<Rational>)>& probe) {
  if (!probe(std::nullopt)) return std::nullopt;

  std::ptrdiff_t last_infeasible = -1;
  std::ptrdiff_t first_feasible = -1;
  std::map<Rational, bool> cache;
  auto cached_probe = [&](const Rational& level) {
    auto it = cache.find(level);
    if (it != cache.end()) return it->second;
    const bool ok = probe(level);
    cache.emplace(level, ok);
    return ok;
  };

  std::size_t size = 1;
  for (;;) {
    size *= 2;
    const bool have = pool.ensure_count(size);
    const Rational level =
        have ? level_for_count(size) : pool.levels().back();
    const auto idx = static_cast<std::ptrdiff_t>(
        std::lower_bound(pool.levels().begin(), pool.levels().end(), level) -
        pool.levels().begin());
    if (cached_probe(level)) {
      first_feasible = idx;
      break;
    }
    last_infeasible = std::max(last_infeasible, idx);
    if (!have) {
      // the whole space was already covered by this probe, yet probe(all)
      // succeeded; the full set's level must be feasible
      first_feasible = static_cast<std::ptrdiff_t>(pool.levels().size()) - 1;
      if (first_feasible <= last_infeasible)
        throw std::logic_error("full-space probe disagrees with capped probe");
      break;
    }
  }

  std::ptrdiff_t lo = last_infeasible + 1, hi = first_feasible;
  while (lo < hi) {
    const std::ptrdiff_t mid = lo + (hi - lo) / 2;
    if (cached_probe(pool.levels()[static_cast<std::size_t>(mid)]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return pool.levels()[static_cast<std::size_t>(lo)];
}

MmsInstance explicit_subset(const MmsInstance& instance, const Rational& cap) {
  MmsInstance sub;
  sub.num_vars = instance.num_vars;
  for (const Mode& m : instance.modes)
    if (m.price <= cap) sub.modes.push_back(m);
  return sub;
}

// per-level average-cost data shared by the weighted drivers
struct AvgAtLevel {
  bool feasible = false;
  Rational infimum;
  FrequencyVector optimum;
  FrequencyVector realizing;
  Rational realized;
  MmsInstance pruned;  // canonical-order instance the controller cycles over
  std::vector<Eigen::Index> vars;
};

AvgAtLevel avg_from_result(AvgCostResult&& r) {
  AvgAtLevel out;
  out.feasible = r.feasible;
  if (!r.feasible) return out;
  out.infimum = std::move(r.infimum);
  out.optimum = std::move(r.optimum);
  out.realizing = std::move(r.realizing);
  out.realized = std::move(r.realized_cost);
  out.pruned = std::move(r.pruned);
  out.vars = std::move(r.vars);
  return out;
}

AvgAtLevel implicit_avg(const BuildingSpec& building, std::optional<Rational> cap,
                        const Rational& epsilon,
                        std::vector<Choice>* warm = nullptr) {
  AvgAtLevel out;
  ImplicitSolver solver(building, std::move(cap), warm);
  ImplicitSolver::Decision d = solver.decide();
  if (!d.feasible) return out;
  ImplicitSolver::CostOutcome cost = solver.min_cost();
  if (warm != nullptr) {
    for (const Choice& c : cost.columns)
      if (std::find(warm->begin(), warm->end(), c) == warm->end()) warm->push_back(c);
  }

  Rational interior_cost = 0;
  for (const auto& [id, w] : d.strict_witness.weights) {
    // witness support columns are all in the master; recover the price
    // from the id via the decision columns
    for (const Choice& c : cost.columns) {
      if (building.choice_id(c) == id) {
        interior_cost += w * building.choice_price(c);
        break;
      }
    }
  }

  out.feasible = true;
  out.infimum = cost.infimum;
  out.optimum = cost.optimum;
  const Rational eps = mix_epsilon(epsilon, interior_cost, cost.infimum);
  out.realizing = mix_vectors(cost.optimum, d.strict_witness, eps);
  out.realized = (1 - eps) * cost.infimum + eps * interior_cost;
  out.vars = d.vars;

  // the controller cycles only the realized support, ordered by (price, id)
  std::vector<Mode> support;
  for (const Choice& c : cost.columns) {
    const std::string id = building.choice_id(c);
    if (out.realizing.weight(id) > 0) support.push_back(materialize_mode(building, c));
  }
  std::sort(support.begin(), support.end(), [](const Mode& a, const Mode& b) {
    if (a.price != b.price) return a.price < b.price;
    return a.id < b.id;
  });
  out.pruned.num_vars = building.zone_count();
  out.pruned.modes = std::move(support);
  return out;
}

OptimizationResult assemble(const AvgAtLevel& avg, const SafeBox& box, const RatVec& x0,
                            const CostWeights& weights, const Rational& p_star,
                            const Rational& epsilon) {
  OptimizationResult out;
  out.feasible = true;
  const synthesis::Outcome realized =
      synthesis::realize_controller(avg.pruned, box, x0, avg.realizing, avg.vars);
  out.controller = realized.controller;
  out.frequency = avg.realizing;
  out.scale = realized.scale;
  out.avg_infimum = avg.infimum;
  out.avg_realized = avg.realized;
  out.chosen_peak_level = p_star;
  out.weighted_infimum = weights.mu_peak * p_star + weights.mu_avg * avg.infimum;
  out.epsilon = epsilon;
  out.surviving_modes = realized.surviving_modes;
  Rational peak = 0;
  for (const TimedAction& act : out.controller.period) {
    if (act.dwell == 0) continue;
    const Mode* m = avg.pruned.find_mode(act.mode);
    if (m != nullptr && m->price > peak) peak = m->price;
  }
  out.peak = peak;
  return out;
}

// the shared Algorithm-2 narrowing given a peak search and a level oracle
OptimizationResult weighted_drive(
    const SafeBox& box, const RatVec& x0, const CostWeights& weights, const Rational& epsilon,
    const std::function<std::optional<Rational>()>& find_p_min,
    const std::function<AvgAtLevel(std::optional<Rational>)>& avg_at,
    const std::function<std::vector<Rational>(const Rational& lo, const Rational& hi)>& levels_in) {
  weights.validate();
  if (!(epsilon > 0) || !(epsilon < 1))
    throw std::invalid_argument("epsilon must lie strictly between 0 and 1");

  if (weights.mu_peak == 0) {
    AvgAtLevel avg = avg_at(std::nullopt);
    if (!avg.feasible) return {};
    Rational support_peak = 0;
    for (const Mode& m : avg.pruned.modes)
      if (avg.realizing.weight(m.id) > 0) support_peak = rat_max(support_peak, m.price);
    OptimizationResult out = assemble(avg, box, x0, weights, support_peak, epsilon);
    return out;
  }

  const std::optional<Rational> p_min = find_p_min();
  if (!p_min) return {};

  if (weights.mu_avg == 0) {
    AvgAtLevel avg = avg_at(*p_min);
    if (!avg.feasible) return {};
    return assemble(avg, box, x0, weights, *p_min, epsilon);
  }

  std::map<Rational, AvgAtLevel> memo;
  auto avg_cached = [&](const Rational& cap) -> const AvgAtLevel& {
    auto it = memo.find(cap);
    if (it == memo.end()) it = memo.emplace(cap, avg_at(cap)).first;
    return it->second;
  };

  const Rational ratio = weights.mu_avg / weights.mu_peak;
  const Rational base_avg = avg_cached(*p_min).infimum;
  Rational p_upper = *p_min + ratio * base_avg;
  for (;;) {
    const Rational refreshed = *p_min + ratio * (base_avg - avg_cached(p_upper).infimum);
    if (refreshed >= p_upper) break;
    p_upper = refreshed;
  }

  const std::vector<Rational> candidates = levels_in(*p_min, p_upper);
  bool have = false;
  Rational best_score, best_level;
  for (const Rational& level : candidates) {
    const AvgAtLevel& avg = avg_cached(level);
    if (!avg.feasible) continue;
    const Rational score = weights.mu_peak * level + weights.mu_avg * avg.infimum;
    if (!have || score < best_score) {
      best_score = score;
      best_level = level;
      have = true;
    }
  }
  if (!have) return {};
  return assemble(avg_cached(best_level), box, x0, weights, best_level, epsilon);
}

}  // namespace

BuildingDecision decide_building(const BuildingSpec& building,
                                 std::optional<Rational> price_cap) {
  BuildingDecision out;
  ImplicitSolver solver(building, std::move(price_cap));
  ImplicitSolver::Decision d = solver.decide();
  if (!d.feasible) return out;
  out.feasible = true;
  out.witness = d.strict_witness;
  out.vars = d.vars;
  out.support.num_vars = building.zone_count();
  for (const Choice& c : d.columns) {
    if (out.witness.weight(building.choice_id(c)) > 0)
      out.support.modes.push_back(materialize_mode(building, c));
  }
  std::sort(out.support.modes.begin(), out.support.modes.end(),
            [](const Mode& a, const Mode& b) {
              if (a.price != b.price) return a.price < b.price;
              return a.id < b.id;
            });
  return out;
}

synthesis::Outcome synthesize_building(const BuildingSpec& building, const RatVec& x0) {
  building.validate();
  if (!building.comfort.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the comfort box");
  const BuildingDecision d = decide_building(building, std::nullopt);
  if (!d.feasible) return {};
  return synthesis::realize_controller(d.support, building.comfort, x0, d.witness, d.vars);
}

AvgCostResult min_average_cost(const MmsInstance& instance, const SafeBox& box,
                               const Rational& epsilon) {
  if (!(epsilon > 0) || !(epsilon < 1))
    throw std::invalid_argument("epsilon must lie strictly between 0 and 1");
  AvgCostResult out;
  synthesis::Decision d = synthesis::decide(instance, box);
  if (!d.feasible) return out;

  lp::LinearProgram program = synthesis::frequency_lp(d.pruned, box, d.vars);
  lp::Objective obj;
  obj.sense = lp::Sense::Minimize;
  for (const Mode& m : d.pruned.modes) obj.coeffs.push_back(m.price);
  program.objective = obj;
  const lp::LpResult r = lp::solve(program);
  if (r.status != lp::LpStatus::Optimal)
    throw std::logic_error("average-cost program must be bounded over the simplex");

  out.feasible = true;
  out.infimum = r.value;
  out.optimum = synthesis::frequency_from_assignment(d.pruned, r.assignment);

  Rational interior_cost = 0;
  for (const Mode& m : d.pruned.modes)
    interior_cost += d.strict_witness.weight(m.id) * m.price;
  const Rational eps = mix_epsilon(epsilon, interior_cost, out.infimum);
  out.realizing = mix_vectors(out.optimum, d.strict_witness, eps);
  out.realized_cost = (1 - eps) * out.infimum + eps * interior_cost;
  out.pruned = std::move(d.pruned);
  out.vars = std::move(d.vars);
  return out;
}

PeakResult min_peak_cost(const MmsInstance& instance, const SafeBox& box, const RatVec& x0) {
  instance.validate();
  box.validate();
  if (!box.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the safe set");

  ExplicitPool pool(instance);
  auto probe = [&](std::optional<Rational> cap) {
    const MmsInstance sub = cap ? explicit_subset(instance, *cap) : instance;
    if (sub.modes.empty()) return false;
    return synthesis::decide(sub, box).feasible;
  };
  const auto p = peak_search(
      pool, [&](std::size_t k) { return pool.level_for_count(k); }, probe);

  PeakResult out;
  if (!p) return out;
  out.feasible = true;
  out.p_min = *p;
  for (const Mode& m : instance.modes)
    if (m.price <= *p) out.mode_ids.push_back(m.id);
  return out;
}

namespace {

PeakResult min_peak_building(const BuildingSpec& building, const RatVec& x0,
                             std::vector<Choice>* warm_io) {
  building.validate();
  if (!building.comfort.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the comfort box");

  CursorPool pool(building);
  std::vector<Choice> local_warm;
  std::vector<Choice>& warm = warm_io != nullptr ? *warm_io : local_warm;
  std::map<Rational, FrequencyVector> witnesses;
  std::vector<lp::BasisEntry> shared_basis;
  auto probe = [&](std::optional<Rational> cap) {
    try {
      ImplicitSolver solver(building, cap, &warm,
                            shared_basis.empty() ? nullptr : &shared_basis);
      const auto d = solver.decide();
      for (const auto& c : d.columns)
        if (std::find(warm.begin(), warm.end(), c) == warm.end()) warm.push_back(c);
      if (!d.margin_basis.empty()) shared_basis = d.margin_basis;
      if (d.feasible && cap) witnesses[*cap] = d.strict_witness;
      return d.feasible;
    } catch (const std::invalid_argument&) {
      return false;  // no admissible mode within the cap
    }
  };
  const auto p = peak_search(
      pool, [&](std::size_t k) { return pool.level_for_count(k); }, probe);

  PeakResult out;
  if (!p) return out;
  out.feasible = true;
  out.p_min = *p;
  out.mode_ids = witnesses.at(*p).support();
  return out;
}

}  // namespace

PeakResult min_peak_cost(const BuildingSpec& building, const RatVec& x0) {
  return min_peak_building(building, x0, nullptr);
}

OptimizationResult optimize_weighted(const MmsInstance& instance, const SafeBox& box,
                                     const RatVec& x0, const CostWeights& weights,
                                     const Rational& epsilon) {
  instance.validate();
  box.validate();
  if (!box.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the safe set");

  auto find_p_min = [&]() -> std::optional<Rational> {
    const PeakResult pk = min_peak_cost(instance, box, x0);
    if (!pk.feasible) return std::nullopt;
    return pk.p_min;
  };
  auto avg_at = [&](std::optional<Rational> cap) {
    const MmsInstance sub = cap ? explicit_subset(instance, *cap) : instance;
    if (sub.modes.empty()) return AvgAtLevel{};
    return avg_from_result(min_average_cost(sub, box, epsilon));
  };
  auto levels_in = [&](const Rational& lo, const Rational& hi) {
    std::vector<Rational> levels;
    for (const Mode& m : instance.modes)
      if (m.price >= lo && m.price <= hi) levels.push_back(m.price);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    return levels;
  };
  return weighted_drive(box, x0, weights, epsilon, find_p_min, avg_at, levels_in);
}

OptimizationResult optimize_weighted(const BuildingSpec& building, const RatVec& x0,
                                     const CostWeights& weights, const Rational& epsilon) {
  building.validate();
  if (!building.comfort.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the comfort box");

  CursorPool pool(building);
  std::vector<Choice> warm;
  auto find_p_min = [&]() -> std::optional<Rational> {
    const PeakResult pk = min_peak_building(building, x0, &warm);
    if (!pk.feasible) return std::nullopt;
    return pk.p_min;
  };
  auto avg_at = [&](std::optional<Rational> cap) {
    return implicit_avg(building, std::move(cap), epsilon, &warm);
  };
  auto levels_in = [&](const Rational& lo, const Rational& hi) {
    pool.ensure_price(hi);
    std::vector<Rational> out;
    for (const Rational& level : pool.levels())
      if (level >= lo && level <= hi) out.push_back(level);
    return out;
  };
  return weighted_drive(building.comfort, x0, weights, epsilon, find_p_min, avg_at, levels_in);
}

OptimizationResult optimize_weighted_full_scan(const MmsInstance& instance, const SafeBox& box,
                                               const RatVec& x0, const CostWeights& weights,
                                               const Rational& epsilon) {
  instance.validate();
  box.validate();
  weights.validate();
  if (!box.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the safe set");

  std::vector<Rational> levels;
  for (const Mode& m : instance.modes) levels.push_back(m.price);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  bool have = false;
  Rational best_score, best_level;
  std::map<Rational, AvgAtLevel> memo;
  for (const Rational& level : levels) {
    const MmsInstance sub = explicit_subset(instance, level);
    AvgAtLevel avg = avg_from_result(min_average_cost(sub, box, epsilon));
    if (!avg.feasible) continue;
    const Rational score = weights.mu_peak * level + weights.mu_avg * avg.infimum;
    memo.emplace(level, std::move(avg));
    if (!have || score < best_score) {
      best_score = score;
      best_level = level;
      have = true;
    }
  }
  if (!have) return {};
  return assemble(memo.at(best_level), box, x0, weights, best_level, epsilon);
}

}  // namespace optimizer
}  // namespace mms
