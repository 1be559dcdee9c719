#include "mms/synthesis.hpp"

#include <algorithm>
#include <stdexcept>

namespace mms {
namespace synthesis {

lp::LinearProgram frequency_lp(const MmsInstance& instance, const SafeBox& box,
                               const std::vector<Eigen::Index>& vars) {
  lp::LinearProgram program;
  for (const Mode& m : instance.modes) program.variables.push_back(m.id);
  program.nonnegative.assign(program.variables.size(), true);

  const std::size_t n = program.variables.size();
  std::vector<Rational> ones(n, Rational(1));
  program.add_constraint(std::move(ones), lp::Relation::Equal, Rational(1));

  for (Eigen::Index i : vars) {
    std::vector<Rational> at_lower(n), at_upper(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Mode& m = instance.modes[k];
      at_lower[k] = m.drive(i) - m.decay(i) * box.lower(i);
      at_upper[k] = m.drive(i) - m.decay(i) * box.upper(i);
    }
    program.add_constraint(std::move(at_lower), lp::Relation::GreaterEqual, Rational(0));
    program.add_constraint(std::move(at_upper), lp::Relation::LessEqual, Rational(0));
  }
  return program;
}

FrequencyVector frequency_from_assignment(const MmsInstance& instance,
                                          const std::vector<Rational>& assignment) {
  FrequencyVector f;
  for (std::size_t k = 0; k < instance.modes.size(); ++k)
    f.weights[instance.modes[k].id] = assignment[k];
  return f;
}

namespace {

std::vector<Eigen::Index> all_vars(const MmsInstance& instance) {
  std::vector<Eigen::Index> vars(static_cast<std::size_t>(instance.num_vars));
  for (std::size_t i = 0; i < vars.size(); ++i) vars[i] = static_cast<Eigen::Index>(i);
  return vars;
}

std::optional<FrequencyVector> weak_witness(const MmsInstance& instance, const SafeBox& box,
                                            const std::vector<Eigen::Index>& vars) {
  if (instance.modes.empty()) return std::nullopt;
  const lp::LinearProgram program = frequency_lp(instance, box, vars);
  const lp::LpResult r = lp::solve(program);
  if (r.status != lp::LpStatus::Feasible && r.status != lp::LpStatus::Optimal)
    return std::nullopt;
  return frequency_from_assignment(instance, r.assignment);
}

// rows of vars[k] in the LP built by frequency_lp
std::pair<std::size_t, std::size_t> rows_of(std::size_t k) { return {1 + 2 * k, 2 + 2 * k}; }

}  // namespace

std::optional<FrequencyVector> find_good_vector(const MmsInstance& instance, const SafeBox& box) {
  instance.validate();
  box.validate();
  if (box.dim() != instance.num_vars)
    throw std::invalid_argument("box dimension must match the instance");
  return weak_witness(instance, box, all_vars(instance));
}

PrunedSystem eliminate_criticals(const MmsInstance& instance, const SafeBox& box,
                                 const FrequencyVector& good_witness) {
  PrunedSystem out;
  out.instance = instance;
  out.vars = all_vars(instance);
  out.witness = good_witness;
  out.feasible = true;

  bool removed_mode = true;
  while (removed_mode) {
    removed_mode = false;
    const std::vector<Eigen::Index> sweep = out.vars;
    for (Eigen::Index j : sweep) {
      auto pos = std::find(out.vars.begin(), out.vars.end(), j);
      if (pos == out.vars.end()) continue;
      const std::size_t k = static_cast<std::size_t>(pos - out.vars.begin());
      const lp::LinearProgram program = frequency_lp(out.instance, box, out.vars);
      const auto [low_row, up_row] = rows_of(k);
      const lp::StrictResult strict = lp::solve_strict(program, {low_row, up_row});
      if (strict.feasible) continue;

      // j is critical in every good vector; the witness tells us on which side
      const Rational at_lower = mean_drift(out.instance, out.witness, j, box.lower(j));
      const bool lower_side = at_lower == 0;
      if (!lower_side) {
        const Rational at_upper = mean_drift(out.instance, out.witness, j, box.upper(j));
        if (at_upper != 0)
          throw std::logic_error("witness must be critical on a variable with no strict vector");
      }
      const Rational bound = lower_side ? box.lower(j) : box.upper(j);

      std::vector<Mode> kept;
      for (const Mode& m : out.instance.modes)
        if (m.equilibrium(j) == bound) kept.push_back(m);
      const bool shrank = kept.size() != out.instance.modes.size();
      out.instance.modes = std::move(kept);
      out.vars.erase(std::find(out.vars.begin(), out.vars.end(), j));

      if (shrank) {
        removed_mode = true;
        if (out.instance.modes.empty()) {
          out.feasible = false;
          return out;
        }
        auto fresh = weak_witness(out.instance, box, out.vars);
        if (!fresh) {
          out.feasible = false;
          return out;
        }
        out.witness = *fresh;
      }
      // dropping rows only relaxes the system, so the witness stays valid
      // when no mode was removed
    }
  }
  return out;
}

Decision decide(const MmsInstance& instance, const SafeBox& box) {
  Decision d;
  auto witness = find_good_vector(instance, box);
  if (!witness) return d;

  PrunedSystem pruned = eliminate_criticals(instance, box, *witness);
  if (!pruned.feasible || pruned.instance.modes.empty()) return d;

  const lp::LinearProgram program = frequency_lp(pruned.instance, box, pruned.vars);
  std::vector<std::size_t> strict_rows;
  for (std::size_t k = 0; k < pruned.vars.size(); ++k) {
    const auto [low_row, up_row] = rows_of(k);
    strict_rows.push_back(low_row);
    strict_rows.push_back(up_row);
  }
  const lp::StrictResult strict = lp::solve_strict(program, strict_rows);
  if (!strict.feasible) return d;

  d.feasible = true;
  d.pruned = std::move(pruned.instance);
  d.vars = std::move(pruned.vars);
  d.strict_witness = frequency_from_assignment(d.pruned, strict.assignment);
  d.margin = strict.slack;
  return d;
}

Rational dwell_scale(const MmsInstance& instance, const SafeBox& box, const RatVec& x0,
                     const FrequencyVector& f, const std::vector<Eigen::Index>& vars,
                     std::optional<Eigen::Index> period_len) {
  if (x0.size() != instance.num_vars)
    throw std::invalid_argument("dwell_scale: state dimension mismatch");
  if (!box.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the safe set");

  const Rational cycle_len(period_len ? static_cast<long>(*period_len)
                                      : static_cast<long>(instance.mode_count()));
  bool have = false;
  Rational scale;

  auto consider = [&](const Rational& candidate) {
    if (!have || candidate < scale) {
      scale = candidate;
      have = true;
    }
  };

  for (Eigen::Index i : vars) {
    // worst-case excursion while the first cycle completes
    Rational drift_at_x0 = 0;
    Rational eq_spread = 0;
    for (const Mode& m : instance.modes) {
      drift_at_x0 = rat_max(drift_at_x0, rat_abs(m.drive(i) - m.decay(i) * x0(i)));
      eq_spread = rat_max(eq_spread, rat_abs(m.equilibrium(i)));
    }
    const Rational margin = rat_min(x0(i) - box.lower(i), box.upper(i) - x0(i));
    if (drift_at_x0 > 0) consider(margin / drift_at_x0);

    // contraction bound from the strict drift margins
    const Rational at_lower = mean_drift(instance, f, i, box.lower(i));
    const Rational at_upper = mean_drift(instance, f, i, box.upper(i));
    if (at_lower <= 0 || at_upper >= 0)
      throw std::invalid_argument("frequency vector must be strictly feasible on the variable set");
    Rational rate_mix = 0;
    for (const Mode& m : instance.modes) rate_mix += f.weight(m.id) * m.decay(i);
    const Rational spread = rat_abs(box.lower(i)) + rat_abs(box.upper(i)) + 2 * eq_spread;
    const Rational strict_margin = rat_min(at_lower, -at_upper);
    consider(strict_margin / (spread * cycle_len * rate_mix * rate_mix));
  }
  return have ? scale : Rational(1);
}

Outcome realize_controller(const MmsInstance& pruned, const SafeBox& box, const RatVec& x0,
                           const FrequencyVector& f, const std::vector<Eigen::Index>& vars) {
  Outcome out;
  out.feasible = true;
  out.frequency = f;
  out.scale = dwell_scale(pruned, box, x0, f, vars);
  out.surviving_vars = vars;
  std::vector<TimedAction> period;
  for (const Mode& m : pruned.modes) {
    out.surviving_modes.push_back(m.id);
    period.push_back({m.id, f.weight(m.id) * out.scale});
  }
  out.controller = PeriodicController::make({}, std::move(period));
  return out;
}

Outcome synthesize(const MmsInstance& instance, const SafeBox& box, const RatVec& x0) {
  instance.validate();
  box.validate();
  if (box.dim() != instance.num_vars || x0.size() != instance.num_vars)
    throw std::invalid_argument("instance, box and starting point dimensions must agree");
  if (!box.strictly_inside(x0))
    throw std::invalid_argument("starting point must lie strictly inside the safe set");

  Decision d = decide(instance, box);
  if (!d.feasible) return {};
  return realize_controller(d.pruned, box, x0, d.strict_witness, d.vars);
}

}  // namespace synthesis
}  // namespace mms
