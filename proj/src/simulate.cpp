#include "mms/simulate.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "mms/optimizer.hpp"

namespace mms {
namespace simulate {

namespace {

template <typename F>
struct FlowTable {
  std::vector<Vec<F>> decay;
  std::vector<Vec<F>> equilibrium;
  std::map<std::string, std::size_t> index;

  FlowTable(const MmsInstance& instance, const PeriodicController& controller) {
    auto intern = [&](const std::string& id) {
      if (index.count(id)) return;
      const Mode* m = instance.find_mode(id);
      if (m == nullptr) throw std::invalid_argument("controller uses unknown mode '" + id + "'");
      Vec<F> a(m->decay.size()), eq(m->decay.size());
      for (Eigen::Index i = 0; i < m->decay.size(); ++i) {
        a(i) = to_fp<F>(m->decay(i));
        eq(i) = to_fp<F>(m->equilibrium(i));
      }
      index[id] = decay.size();
      decay.push_back(std::move(a));
      equilibrium.push_back(std::move(eq));
    };
    for (const TimedAction& t : controller.prefix) intern(t.mode);
    for (const TimedAction& t : controller.period) intern(t.mode);
  }

  void advance(Vec<F>& x, const std::string& id, F dt) const {
    const std::size_t k = index.at(id);
    const Vec<F>& a = decay[k];
    const Vec<F>& eq = equilibrium[k];
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x(i) += (eq(i) - x(i)) * (-FloatOps<F>::expm1(-a(i) * dt));
  }
};

template <typename F>
class SafetyCheck {
 public:
  SafetyCheck(const SafeBox& box, F guard) : guard_(guard) {
    lower_.resize(box.dim());
    upper_.resize(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
      lower_(i) = to_fp<F>(box.lower(i));
      upper_(i) = to_fp<F>(box.upper(i));
    }
  }

  void inspect(Trajectory<F>& tr, F time, const Vec<F>& x) const {
    if (!tr.safe) return;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) < lower_(i) - guard_) {
        tr.safe = false;
        tr.first_violation = {time, i, true};
        return;
      }
      if (x(i) > upper_(i) + guard_) {
        tr.safe = false;
        tr.first_violation = {time, i, false};
        return;
      }
    }
  }

 private:
  Vec<F> lower_, upper_;
  F guard_;
};

}  // namespace

template <typename F>
Trajectory<F> run(const MmsInstance& instance, const SafeBox& box, const Vec<F>& x0,
                  const PeriodicController& controller, const Horizon& horizon,
                  const SimOptions<F>& options) {
  if (x0.size() != instance.num_vars)
    throw std::invalid_argument("run: state dimension mismatch");
  if (horizon.kind != Horizon::Kind::Time && horizon.count <= 0)
    throw std::invalid_argument("run: horizon must be positive");
  if (horizon.kind == Horizon::Kind::Time && !(horizon.time > 0))
    throw std::invalid_argument("run: horizon must be positive");

  const FlowTable<F> flows(instance, controller);
  const SafetyCheck<F> check(box, options.guard);

  Trajectory<F> tr;
  Vec<F> x = x0;
  F t = 0;
  const F t_end = horizon.kind == Horizon::Kind::Time ? to_fp<F>(horizon.time) : F(0);
  long actions_left =
      horizon.kind == Horizon::Kind::Actions
          ? horizon.count
          : (horizon.kind == Horizon::Kind::Periods
                 ? horizon.count * static_cast<long>(controller.period.size()) +
                       static_cast<long>(controller.prefix.size())
                 : 0);

  F next_sample = 0;
  long sample_idx = 0;
  auto emit_samples_through = [&](F seg_start, F dt, const Vec<F>& seg_x,
                                  const std::string& mode) {
    if (!options.sample_step) return;
    const F step = *options.sample_step;
    while (next_sample <= seg_start + dt) {
      Vec<F> xs = seg_x;
      flows.advance(xs, mode, next_sample - seg_start);
      tr.samples.push_back({next_sample, xs, mode});
      check.inspect(tr, next_sample, xs);
      ++sample_idx;
      next_sample = F(sample_idx) * step;
    }
  };

  const std::string* first_mode = nullptr;
  if (!controller.prefix.empty())
    first_mode = &controller.prefix.front().mode;
  else
    first_mode = &controller.period.front().mode;
  tr.switch_points.push_back({F(0), x, *first_mode});
  check.inspect(tr, F(0), x);

  std::size_t prefix_at = 0;
  std::size_t period_at = 0;
  auto current_action = [&]() -> const TimedAction& {
    if (prefix_at < controller.prefix.size()) return controller.prefix[prefix_at];
    return controller.period[period_at];
  };
  auto advance_cursor = [&]() {
    if (prefix_at < controller.prefix.size()) {
      ++prefix_at;
    } else {
      period_at = (period_at + 1) % controller.period.size();
    }
  };
  auto next_mode_name = [&]() -> const std::string& {
    if (prefix_at < controller.prefix.size()) return controller.prefix[prefix_at].mode;
    return controller.period[period_at].mode;
  };

  for (;;) {
    if (horizon.kind != Horizon::Kind::Time && actions_left <= 0) break;
    const TimedAction& act = current_action();
    F dt = to_fp<F>(act.dwell);
    bool final_cut = false;
    if (horizon.kind == Horizon::Kind::Time) {
      if (t >= t_end) break;
      if (t + dt >= t_end) {
        dt = t_end - t;
        final_cut = true;
      }
    }
    const Vec<F> seg_start_state = x;
    emit_samples_through(t, dt, seg_start_state, act.mode);
    flows.advance(x, act.mode, dt);
    t += dt;
    if (horizon.kind != Horizon::Kind::Time) --actions_left;
    if (final_cut) {
      tr.switch_points.push_back({t, x, act.mode});
      check.inspect(tr, t, x);
      break;
    }
    advance_cursor();
    tr.switch_points.push_back({t, x, next_mode_name()});
    check.inspect(tr, t, x);
  }
  return tr;
}

template <typename F>
PeriodMap<F> analyze_period(const MmsInstance& instance, const PeriodicController& controller) {
  const FlowTable<F> flows(instance, controller);
  PeriodMap<F> pm;
  const Eigen::Index n = instance.num_vars;
  pm.contraction.resize(n);
  pm.one_minus.resize(n);
  pm.offset.resize(n);
  pm.fixed_point.resize(n);

  // total decay exposure over one period, exact until the final conversion
  for (Eigen::Index i = 0; i < n; ++i) {
    Rational exposure = 0;
    for (const TimedAction& act : controller.period) {
      const Mode* m = instance.find_mode(act.mode);
      if (m == nullptr) throw std::invalid_argument("controller uses unknown mode '" + act.mode + "'");
      exposure += m->decay(i) * act.dwell;
    }
    const F e = to_fp<F>(exposure);
    pm.contraction(i) = FloatOps<F>::exp(-e);
    pm.one_minus(i) = -FloatOps<F>::expm1(-e);
  }

  // telescoped affine offset: beta_i = sum_j (1 - e_j) eq_j prod_{k>j} e_k.
  // Every term is a small nonnegative product, so nothing cancels even when
  // dwells are far below the time constants.
  for (Eigen::Index i = 0; i < n; ++i) {
    F offset = 0;
    F suffix = 1;
    for (std::size_t j = controller.period.size(); j-- > 0;) {
      const TimedAction& act = controller.period[j];
      const Mode* m = instance.find_mode(act.mode);
      const F a = to_fp<F>(m->decay(i));
      const F eq = to_fp<F>(m->equilibrium(i));
      const F z = a * to_fp<F>(act.dwell);
      offset += eq * (-FloatOps<F>::expm1(-z)) * suffix;
      suffix *= FloatOps<F>::exp(-z);
    }
    pm.offset(i) = offset;
    pm.fixed_point(i) = pm.one_minus(i) == F(0) ? offset : offset / pm.one_minus(i);
  }
  return pm;
}

template <typename F>
Trajectory<F> sample_periodic(const MmsInstance& instance, const SafeBox& box, const Vec<F>& x0,
                              const PeriodicController& controller, const Rational& duration,
                              const Rational& step, const SimOptions<F>& options) {
  if (!(step > 0) || !(duration > 0))
    throw std::invalid_argument("sample_periodic: duration and step must be positive");
  const FlowTable<F> flows(instance, controller);
  const SafetyCheck<F> check(box, options.guard);
  const PeriodMap<F> pm = analyze_period<F>(instance, controller);

  // prefix switch states, exact action times
  std::vector<Rational> prefix_times;  // cumulative end times of prefix actions
  std::vector<Vec<F>> prefix_states;   // state at each prefix action start
  Rational prefix_total = 0;
  {
    Vec<F> x = x0;
    for (const TimedAction& act : controller.prefix) {
      prefix_states.push_back(x);
      prefix_total += act.dwell;
      prefix_times.push_back(prefix_total);
      flows.advance(x, act.mode, to_fp<F>(act.dwell));
    }
    prefix_states.push_back(x);  // state entering the periodic part
  }
  const Rational period_total = controller.period_time();

  // per-variable decay exposure of one period, for the n-period contraction
  std::vector<Rational> exposure(static_cast<std::size_t>(instance.num_vars), Rational(0));
  for (const TimedAction& act : controller.period) {
    const Mode* m = instance.find_mode(act.mode);
    for (Eigen::Index i = 0; i < instance.num_vars; ++i)
      exposure[static_cast<std::size_t>(i)] += m->decay(i) * act.dwell;
  }

  Trajectory<F> tr;
  const Vec<F> x_entry = prefix_states.back();

  for (Rational t = 0; t <= duration; t += step) {
    Vec<F> x;
    std::string mode;
    if (t < prefix_total) {
      // locate the prefix action containing t
      std::size_t k = 0;
      Rational seg_start = 0;
      while (k < prefix_times.size() && prefix_times[k] <= t) seg_start = prefix_times[k++];
      x = prefix_states[k];
      mode = controller.prefix[k].mode;
      flows.advance(x, mode, to_fp<F>(t - seg_start));
    } else {
      const Rational tau = t - prefix_total;
      Rational cycles_r = tau / period_total;
      mpz_class cycles = cycles_r.get_num() / cycles_r.get_den();  // floor, tau >= 0
      Rational phase = tau - Rational(cycles) * period_total;
      // contract the whole stack of completed periods in one step
      x.resize(instance.num_vars);
      for (Eigen::Index i = 0; i < instance.num_vars; ++i) {
        const Rational total_exposure = Rational(cycles) * exposure[static_cast<std::size_t>(i)];
        const F decay_n = FloatOps<F>::exp(-to_fp<F>(total_exposure));
        x(i) = pm.fixed_point(i) + (x_entry(i) - pm.fixed_point(i)) * decay_n;
      }
      // then walk the partial period
      std::size_t k = 0;
      for (; k < controller.period.size(); ++k) {
        const Rational& dwell = controller.period[k].dwell;
        if (phase <= dwell) break;
        flows.advance(x, controller.period[k].mode, to_fp<F>(dwell));
        phase -= dwell;
      }
      if (k == controller.period.size()) k = controller.period.size() - 1;
      mode = controller.period[k].mode;
      flows.advance(x, mode, to_fp<F>(phase));
    }
    tr.samples.push_back({to_fp<F>(t), x, mode});
    check.inspect(tr, to_fp<F>(t), x);
  }
  return tr;
}

template <typename F>
LazyStep lazy_controller_step(const BuildingSpec& building, const Vec<F>& state,
                              const BuildingSpec::Choice& current) {
  if (state.size() != building.zone_count())
    throw std::invalid_argument("lazy step: state dimension mismatch");
  if (current.size() != building.zones.size())
    throw std::invalid_argument("lazy step: choice dimension mismatch");

  LazyStep out;
  out.choice = current;

  const std::size_t zones = building.zones.size();
  std::vector<bool> needs_heat(zones, false);
  bool any_needs_heat = false;

  for (std::size_t z = 0; z < zones; ++z) {
    const F lo = to_fp<F>(building.comfort.lower(static_cast<Eigen::Index>(z)));
    const F hi = to_fp<F>(building.comfort.upper(static_cast<Eigen::Index>(z)));
    const F range = hi - lo;
    const F x = state(static_cast<Eigen::Index>(z));
    if (building.zones[z].settings.empty()) {
      out.choice[z] = -1;
      continue;
    }
    if (x >= hi - range * F(0.05L)) {
      // top band: drop to the weakest setting
      std::size_t weakest = 0;
      for (std::size_t s = 1; s < building.zones[z].settings.size(); ++s)
        if (building.zones[z].settings[s].power < building.zones[z].settings[weakest].power)
          weakest = s;
      out.choice[z] = static_cast<int>(weakest);
    } else if (x <= lo + range * F(0.05L)) {
      needs_heat[z] = true;
      any_needs_heat = true;
    }
  }

  if (any_needs_heat) {
    // make room first: switch off every zone sitting above 10% of its range
    for (std::size_t z = 0; z < zones; ++z) {
      const F lo = to_fp<F>(building.comfort.lower(static_cast<Eigen::Index>(z)));
      const F hi = to_fp<F>(building.comfort.upper(static_cast<Eigen::Index>(z)));
      const F x = state(static_cast<Eigen::Index>(z));
      if (x > lo + (hi - lo) * F(0.10L)) out.choice[z] = -1;
    }
    for (std::size_t z = 0; z < zones; ++z) {
      if (!needs_heat[z]) continue;
      const F x = state(static_cast<Eigen::Index>(z));
      // least-power setting whose drift at the current state is nonnegative
      int best = -1;
      for (std::size_t s = 0; s < building.zones[z].settings.size(); ++s) {
        const HeaterSetting& hs = building.zones[z].settings[s];
        const F drift = to_fp<F>(hs.drive) - to_fp<F>(hs.decay) * x;
        if (drift < F(0)) continue;
        if (best < 0 ||
            hs.power < building.zones[z].settings[static_cast<std::size_t>(best)].power)
          best = static_cast<int>(s);
      }
      if (best < 0) {
        // nothing holds the zone: flag it and use the strongest setting
        std::size_t strongest = 0;
        for (std::size_t s = 1; s < building.zones[z].settings.size(); ++s)
          if (building.zones[z].settings[s].power >
              building.zones[z].settings[strongest].power)
            strongest = s;
        best = static_cast<int>(strongest);
        out.flagged.push_back(static_cast<Eigen::Index>(z));
      }
      out.choice[z] = best;
    }
  }
  return out;
}

template <typename F>
LazyRun<F> run_lazy(const BuildingSpec& building, const Vec<F>& x0, const Rational& duration,
                    const Rational& step, const SimOptions<F>& options) {
  building.validate();
  if (!(step > 0) || !(duration > 0))
    throw std::invalid_argument("run_lazy: duration and step must be positive");

  const SafetyCheck<F> check(building.comfort, options.guard);
  const F step_f = to_fp<F>(step);

  LazyRun<F> out;
  Vec<F> x = x0;
  BuildingSpec::Choice held(building.zones.size(), -1);
  bool first = true;
  Rational weighted_power = 0;
  Rational run_length = 0;
  bool have_dwell = false;

  for (Rational t = 0; t < duration;) {
    const Rational dt = rat_min(step, duration - t);
    const LazyStep decision = lazy_controller_step<F>(building, x, held);
    const bool switched = !first && decision.choice != held;
    if (switched) {
      ++out.stats.mode_switch_count;
      if (!have_dwell || run_length < out.stats.min_dwell_observed) {
        out.stats.min_dwell_observed = run_length;
        have_dwell = true;
      }
      run_length = 0;
    }
    held = decision.choice;
    first = false;
    run_length += dt;

    out.trajectory.samples.push_back({to_fp<F>(t), x, building.choice_id(held)});
    out.schedule.push_back({to_fp<F>(t), held});
    check.inspect(out.trajectory, to_fp<F>(t), x);

    const Rational price = building.choice_price(held);
    weighted_power += price * dt;
    if (price > out.stats.peak_power) out.stats.peak_power = price;

    const F dt_f = dt == step ? step_f : to_fp<F>(dt);
    for (std::size_t z = 0; z < building.zones.size(); ++z) {
      const auto [a, b] = building.zone_dynamics(z, held[z]);
      const F af = to_fp<F>(a);
      const F eq = to_fp<F>(b) / af;
      const Eigen::Index i = static_cast<Eigen::Index>(z);
      x(i) = eq + (x(i) - eq) * FloatOps<F>::exp(-af * dt_f);
    }
    t += dt;
  }
  out.trajectory.samples.push_back({to_fp<F>(duration), x, building.choice_id(held)});
  check.inspect(out.trajectory, to_fp<F>(duration), x);

  if (!have_dwell) out.stats.min_dwell_observed = run_length;  // never switched
  out.stats.avg_power = weighted_power / duration;
  return out;
}

Rational savings_percent(const Rational& worse, const Rational& better) {
  if (worse == 0) return 0;
  return (worse - better) / worse * 100;
}

template <typename F>
ComparisonResult<F> compare(const BuildingSpec& building, const RatVec& x0,
                            const Rational& horizon, const Rational& step,
                            const SimOptions<F>& options) {
  building.validate();
  if (!(horizon > 0) || !(step > 0))
    throw std::invalid_argument("compare: horizon and step must be positive");

  ComparisonResult<F> out;
  out.epsilon = rat(1, 1 << 20);

  // minimum peak first, then the best average within it
  const auto opt = optimizer::optimize_weighted(building, x0, optimizer::CostWeights{0, 1},
                                                out.epsilon);
  if (!opt.feasible) return out;
  out.feasible = true;
  out.optimal_controller = opt.controller;
  out.optimal_frequency = opt.frequency;
  out.optimal_scale = opt.scale;
  out.p_min = opt.chosen_peak_level;
  out.avg_infimum = opt.avg_infimum;

  out.support.num_vars = building.zone_count();
  for (const auto& [id, w] : opt.frequency.weights) {
    const auto choice = parse_choice_id(building, id);
    if (!choice) throw std::logic_error("optimizer emitted an undecodable mode id");
    out.support.modes.push_back(materialize_mode(building, *choice));
  }
  std::sort(out.support.modes.begin(), out.support.modes.end(),
            [](const Mode& a, const Mode& b) {
              return a.price != b.price ? a.price < b.price : a.id < b.id;
            });

  Vec<F> x0f(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0f(i) = to_fp<F>(x0(i));

  out.optimal_trajectory =
      sample_periodic<F>(out.support, building.comfort, x0f, opt.controller, horizon, step,
                         options);
  out.optimal_safe = out.optimal_trajectory.safe;
  const PeriodMap<F> pm = analyze_period<F>(out.support, opt.controller);
  for (Eigen::Index i = 0; i < out.support.num_vars; ++i) {
    const F lo = to_fp<F>(building.comfort.lower(i)) - options.guard;
    const F hi = to_fp<F>(building.comfort.upper(i)) + options.guard;
    if (!(pm.fixed_point(i) >= lo && pm.fixed_point(i) <= hi)) out.optimal_safe = false;
  }

  out.optimal.peak_power = opt.peak;
  out.optimal.avg_power = opt.avg_realized;
  out.optimal.min_dwell_observed = opt.controller.min_dwell;
  {
    long positive_actions = 0;
    for (const TimedAction& a : opt.controller.period)
      if (a.dwell > 0) ++positive_actions;
    const Rational cycles = horizon / opt.controller.period_time();
    const mpz_class whole = cycles.get_num() / cycles.get_den();
    out.optimal.mode_switch_count =
        positive_actions * (whole.fits_slong_p() ? whole.get_si() : 0);
  }

  LazyRun<F> lazy = run_lazy<F>(building, x0f, horizon, step, options);
  out.lazy = lazy.stats;
  out.lazy_safe = lazy.trajectory.safe;
  out.lazy_trajectory = std::move(lazy.trajectory);

  out.savings_peak_percent = savings_percent(out.lazy.peak_power, out.optimal.peak_power);
  out.savings_avg_percent = savings_percent(out.lazy.avg_power, out.optimal.avg_power);
  return out;
}

#define MMS_INSTANTIATE(F)                                                                      \
  template Trajectory<F> run<F>(const MmsInstance&, const SafeBox&, const Vec<F>&,              \
                                const PeriodicController&, const Horizon&, const SimOptions<F>&); \
  template PeriodMap<F> analyze_period<F>(const MmsInstance&, const PeriodicController&);       \
  template Trajectory<F> sample_periodic<F>(const MmsInstance&, const SafeBox&, const Vec<F>&,  \
                                            const PeriodicController&, const Rational&,        \
                                            const Rational&, const SimOptions<F>&);            \
  template LazyStep lazy_controller_step<F>(const BuildingSpec&, const Vec<F>&,                 \
                                            const BuildingSpec::Choice&);                       \
  template LazyRun<F> run_lazy<F>(const BuildingSpec&, const Vec<F>&, const Rational&,          \
                                  const Rational&, const SimOptions<F>&);                       \
  template ComparisonResult<F> compare<F>(const BuildingSpec&, const RatVec&, const Rational&,  \
                                          const Rational&, const SimOptions<F>&);

MMS_INSTANTIATE(double)
MMS_INSTANTIATE(long double)
MMS_INSTANTIATE(__float128)

#undef MMS_INSTANTIATE

}  // namespace simulate
}  // namespace mms
