#include <doctest.h>

#include "fixtures.hpp"
#include "mms/generator.hpp"
#include "mms/lp.hpp"
#include "mms/synthesis.hpp"
#include "oracles.hpp"

using namespace mms;
using namespace mms::lp;

namespace {

LinearProgram single_var() {
  LinearProgram p;
  p.variables = {"x"};
  return p;
}

Rational evaluate(const Constraint& c, const std::vector<Rational>& x) {
  Rational lhs = 0;
  for (std::size_t k = 0; k < x.size(); ++k) lhs += c.coeffs[k] * x[k];
  return lhs;
}

void check_satisfies_exactly(const LinearProgram& p, const std::vector<Rational>& x) {
  for (const Constraint& c : p.constraints) {
    const Rational lhs = evaluate(c, x);
    switch (c.rel) {
      case Relation::GreaterEqual: CHECK(lhs >= c.rhs); break;
      case Relation::LessEqual: CHECK(lhs <= c.rhs); break;
      case Relation::Equal: CHECK(lhs == c.rhs); break;
    }
  }
}

}  // namespace

TEST_CASE("an empty interval is infeasible") {
  LinearProgram p = single_var();
  p.add_constraint({Rational(1)}, Relation::GreaterEqual, Rational(0));
  p.add_constraint({Rational(1)}, Relation::LessEqual, Rational(-1));
  CHECK(solve(p).status == LpStatus::Infeasible);
}

TEST_CASE("minimization lands on the boundary vertex") {
  LinearProgram p;
  p.variables = {"x", "y"};
  p.add_constraint({1, 1}, Relation::Equal, Rational(1));
  p.add_constraint({1, 0}, Relation::GreaterEqual, Rational(0));
  p.add_constraint({0, 1}, Relation::GreaterEqual, Rational(0));
  p.objective = Objective{Sense::Minimize, {Rational(0), Rational(1)}};
  const LpResult r = solve(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.value == 0);
  CHECK(r.value_of(p, "x") == 1);
  CHECK(r.value_of(p, "y") == 0);
}

TEST_CASE("the apartment's weak frequency system is feasible") {
  const auto instance = fixtures::two_room_apartment();
  const auto box = fixtures::two_room_box();
  const LinearProgram p = synthesis::frequency_lp(instance, box, {0, 1});
  const LpResult r = solve(p);
  REQUIRE(r.status == LpStatus::Feasible);
  check_satisfies_exactly(p, r.assignment);

  // brute-force confirmation that the region is nonempty
  bool grid_found = false;
  oracles::for_each_grid_vector(3, 64, [&](const std::vector<Rational>& f) {
    if (grid_found) return;
    for (std::size_t k = 0; k < p.constraints.size(); ++k) {
      const auto& c = p.constraints[k];
      const Rational lhs = evaluate(c, f);
      if (c.rel == Relation::GreaterEqual && lhs < c.rhs) return;
      if (c.rel == Relation::LessEqual && lhs > c.rhs) return;
      if (c.rel == Relation::Equal && lhs != c.rhs) return;
    }
    grid_found = true;
  });
  CHECK(grid_found);
}

TEST_CASE("strict relaxation of a pinched system is infeasible") {
  LinearProgram p = single_var();
  p.add_constraint({Rational(1)}, Relation::GreaterEqual, Rational(0));
  p.add_constraint({Rational(1)}, Relation::LessEqual, Rational(0));
  const StrictResult r = solve_strict(p, {0});
  CHECK_FALSE(r.feasible);
  CHECK(r.slack == 0);
}

TEST_CASE("the apartment's strict system has margin at the half-and-half vector") {
  const auto instance = fixtures::two_room_apartment();
  const auto box = fixtures::two_room_box();
  LinearProgram p = synthesis::frequency_lp(instance, box, {0, 1});
  const StrictResult r = solve_strict(p, {1, 2, 3, 4});
  REQUIRE(r.feasible);
  CHECK(r.slack > 0);
  CHECK(r.slack == 1);  // min(3, 1) margins allow a full unit of slack
  check_satisfies_exactly(p, r.assignment);
}

TEST_CASE("strict feasibility of the cheap trio of the priced system") {
  MmsInstance trio = fixtures::priced_quad();
  trio.modes.pop_back();
  LinearProgram p = synthesis::frequency_lp(trio, fixtures::unit_box(), {0, 1});
  const StrictResult r = solve_strict(p, {1, 3});  // both lower rows strict
  REQUIRE(r.feasible);
  CHECK(r.slack > 0);
}

TEST_CASE("strict rows must be inequalities") {
  LinearProgram p = single_var();
  p.add_constraint({Rational(1)}, Relation::Equal, Rational(0));
  CHECK_THROWS_AS(solve_strict(p, {0}), std::invalid_argument);
}

TEST_CASE("strict feasibility implies weak feasibility") {
  gen::SplitMix64 rng(23);
  for (int trial = 0; trial < 150; ++trial) {
    LinearProgram p;
    const int nv = static_cast<int>(rng.uniform(1, 3));
    for (int v = 0; v < nv; ++v) p.variables.push_back("x" + std::to_string(v));
    const int rows = static_cast<int>(rng.uniform(1, 5));
    std::vector<std::size_t> strict_rows;
    for (int r = 0; r < rows; ++r) {
      std::vector<Rational> coeffs;
      for (int v = 0; v < nv; ++v) coeffs.push_back(rng.uniform(-3, 3));
      const Relation rel = rng.uniform(0, 1) == 0 ? Relation::GreaterEqual : Relation::LessEqual;
      p.add_constraint(std::move(coeffs), rel, rng.uniform(-2, 2));
      if (rng.uniform(0, 1) == 0) strict_rows.push_back(static_cast<std::size_t>(r));
    }
    const StrictResult strict = solve_strict(p, strict_rows);
    if (strict.feasible) {
      const LpStatus weak = solve(p).status;
      CHECK(weak == LpStatus::Feasible);
      check_satisfies_exactly(p, strict.assignment);
    }
  }
}

TEST_CASE("verdicts match basic-point enumeration on random pointed programs") {
  gen::SplitMix64 rng(41);
  int feasible_seen = 0, infeasible_seen = 0;
  for (int trial = 0; trial < 400; ++trial) {
    LinearProgram p;
    const int nv = static_cast<int>(rng.uniform(1, 4));
    for (int v = 0; v < nv; ++v) p.variables.push_back("x" + std::to_string(v));
    // nonnegativity rows keep the region pointed, as the oracle requires
    for (int v = 0; v < nv; ++v) {
      std::vector<Rational> coeffs(static_cast<std::size_t>(nv), Rational(0));
      coeffs[static_cast<std::size_t>(v)] = 1;
      p.add_constraint(std::move(coeffs), Relation::GreaterEqual, Rational(0));
    }
    const int rows = static_cast<int>(rng.uniform(1, 8));
    for (int r = 0; r < rows; ++r) {
      std::vector<Rational> coeffs;
      for (int v = 0; v < nv; ++v) coeffs.push_back(rng.uniform(-3, 3));
      const long pick = rng.uniform(0, 2);
      const Relation rel = pick == 0   ? Relation::GreaterEqual
                           : pick == 1 ? Relation::LessEqual
                                       : Relation::Equal;
      p.add_constraint(std::move(coeffs), rel, rng.uniform(-3, 3));
    }
    const bool oracle = oracles::lp_feasible_by_vertices(p);
    const LpResult r = solve(p);
    const bool solver = r.status == LpStatus::Feasible;
    CHECK(solver == oracle);
    if (solver) {
      check_satisfies_exactly(p, r.assignment);
      ++feasible_seen;
    } else {
      ++infeasible_seen;
    }
  }
  // the sample must exercise both outcomes to mean anything
  CHECK(feasible_seen > 50);
  CHECK(infeasible_seen > 50);
}

TEST_CASE("reported optima agree with vertex enumeration on bounded programs") {
  gen::SplitMix64 rng(59);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LinearProgram p;
    const int nv = static_cast<int>(rng.uniform(1, 3));
    for (int v = 0; v < nv; ++v) p.variables.push_back("x" + std::to_string(v));
    for (int v = 0; v < nv; ++v) {
      std::vector<Rational> coeffs(static_cast<std::size_t>(nv), Rational(0));
      coeffs[static_cast<std::size_t>(v)] = 1;
      p.add_constraint(std::move(coeffs), Relation::GreaterEqual, Rational(0));
      std::vector<Rational> cap(static_cast<std::size_t>(nv), Rational(0));
      cap[static_cast<std::size_t>(v)] = 1;
      p.add_constraint(std::move(cap), Relation::LessEqual, rng.uniform(1, 4));
    }
    const int rows = static_cast<int>(rng.uniform(0, 4));
    for (int r = 0; r < rows; ++r) {
      std::vector<Rational> coeffs;
      for (int v = 0; v < nv; ++v) coeffs.push_back(rng.uniform(-3, 3));
      p.add_constraint(std::move(coeffs),
                       rng.uniform(0, 1) == 0 ? Relation::GreaterEqual : Relation::LessEqual,
                       rng.uniform(-3, 3));
    }
    std::vector<Rational> obj;
    for (int v = 0; v < nv; ++v) obj.push_back(rng.uniform(-3, 3));
    p.objective = Objective{Sense::Minimize, obj};

    const LpResult r = solve(p);
    if (r.status != LpStatus::Optimal) continue;
    check_satisfies_exactly(p, r.assignment);

    // enumerate feasible basic points and take the best objective
    std::optional<Rational> best;
    const std::size_t n = p.variables.size();
    std::vector<std::size_t> pick;
    std::function<void(std::size_t)> rec = [&](std::size_t from) {
      if (pick.size() == n) {
        std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n + 1, Rational(0)));
        for (std::size_t row = 0; row < n; ++row) {
          for (std::size_t c = 0; c < n; ++c)
            a[row][c] = p.constraints[pick[row]].coeffs[c];
          a[row][n] = p.constraints[pick[row]].rhs;
        }
        for (std::size_t col = 0, row = 0; col < n; ++col) {
          std::size_t pr = row;
          while (pr < n && a[pr][col] == 0) ++pr;
          if (pr == n) return;
          std::swap(a[pr], a[row]);
          for (std::size_t r2 = 0; r2 < n; ++r2) {
            if (r2 == row || a[r2][col] == 0) continue;
            const Rational f = a[r2][col] / a[row][col];
            for (std::size_t c = col; c <= n; ++c) a[r2][c] -= f * a[row][c];
          }
          ++row;
        }
        std::vector<Rational> x(n);
        for (std::size_t r2 = 0, col = 0; r2 < n; ++r2) {
          while (a[r2][col] == 0) ++col;
          x[col] = a[r2][n] / a[r2][col];
        }
        for (const auto& c : p.constraints) {
          const Rational lhs = evaluate(c, x);
          if (c.rel == Relation::GreaterEqual && lhs < c.rhs) return;
          if (c.rel == Relation::LessEqual && lhs > c.rhs) return;
          if (c.rel == Relation::Equal && lhs != c.rhs) return;
        }
        Rational value = 0;
        for (std::size_t k = 0; k < n; ++k) value += obj[k] * x[k];
        if (!best || value < *best) best = value;
        return;
      }
      for (std::size_t i = from; i < p.constraints.size(); ++i) {
        pick.push_back(i);
        rec(i + 1);
        pick.pop_back();
      }
    };
    rec(0);
    REQUIRE(best.has_value());
    CHECK(r.value == *best);
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("maximization duals price columns with the opposite sign") {
  // at a maximization optimum every declared variable's reduced cost is
  // nonpositive under the reported duals
  gen::SplitMix64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    LinearProgram p;
    const int nv = static_cast<int>(rng.uniform(1, 4));
    for (int v = 0; v < nv; ++v) p.variables.push_back("x" + std::to_string(v));
    p.nonnegative.assign(static_cast<std::size_t>(nv), true);
    std::vector<Rational> ones(static_cast<std::size_t>(nv), Rational(1));
    p.add_constraint(std::move(ones), Relation::Equal, Rational(1));
    const int rows = static_cast<int>(rng.uniform(1, 4));
    for (int r = 0; r < rows; ++r) {
      std::vector<Rational> coeffs;
      for (int v = 0; v < nv; ++v) coeffs.push_back(rng.uniform(-3, 3));
      p.add_constraint(std::move(coeffs),
                       rng.uniform(0, 1) == 0 ? Relation::GreaterEqual : Relation::LessEqual,
                       rng.uniform(-1, 1));
    }
    std::vector<Rational> obj;
    for (int v = 0; v < nv; ++v) obj.push_back(rng.uniform(-3, 3));
    p.objective = Objective{Sense::Maximize, obj};
    const LpResult r = solve(p);
    if (r.status != LpStatus::Optimal) continue;
    for (int v = 0; v < nv; ++v) {
      Rational reduced = obj[static_cast<std::size_t>(v)];
      for (std::size_t row = 0; row < p.constraints.size(); ++row)
        reduced -= r.duals[row] * p.constraints[row].coeffs[static_cast<std::size_t>(v)];
      CHECK(reduced <= 0);
    }
  }
}

TEST_CASE("basis hints reproduce the optimum and skip phase one") {
  LinearProgram p;
  p.variables = {"x", "y"};
  p.nonnegative = {true, true};
  p.add_constraint({1, 1}, Relation::Equal, Rational(1));
  p.add_constraint({1, -1}, Relation::LessEqual, Rational(0));
  p.objective = Objective{Sense::Minimize, {Rational(-1), Rational(0)}};
  const LpResult cold = solve(p);
  REQUIRE(cold.status == LpStatus::Optimal);
  REQUIRE(!cold.basis.empty());
  const LpResult warm = solve(p, &cold.basis);
  CHECK(warm.status == LpStatus::Optimal);
  CHECK(warm.value == cold.value);
  CHECK(warm.assignment == cold.assignment);

  // a stale hint naming unknown variables falls back gracefully
  std::vector<BasisEntry> stale = cold.basis;
  stale[0].variable = "zz";
  stale[0].kind = BasisEntry::Kind::Variable;
  const LpResult fallback = solve(p, &stale);
  CHECK(fallback.status == LpStatus::Optimal);
  CHECK(fallback.value == cold.value);
}

TEST_CASE("duals price every column consistently at the optimum") {
  // minimization: reduced costs of declared variables must be nonnegative
  gen::SplitMix64 rng(67);
  for (int trial = 0; trial < 100; ++trial) {
    LinearProgram p;
    const int nv = static_cast<int>(rng.uniform(1, 4));
    for (int v = 0; v < nv; ++v) p.variables.push_back("x" + std::to_string(v));
    p.nonnegative.assign(static_cast<std::size_t>(nv), true);
    std::vector<Rational> ones(static_cast<std::size_t>(nv), Rational(1));
    p.add_constraint(std::move(ones), Relation::Equal, Rational(1));
    const int rows = static_cast<int>(rng.uniform(1, 4));
    for (int r = 0; r < rows; ++r) {
      std::vector<Rational> coeffs;
      for (int v = 0; v < nv; ++v) coeffs.push_back(rng.uniform(-3, 3));
      p.add_constraint(std::move(coeffs),
                       rng.uniform(0, 1) == 0 ? Relation::GreaterEqual : Relation::LessEqual,
                       rng.uniform(-1, 1));
    }
    std::vector<Rational> obj;
    for (int v = 0; v < nv; ++v) obj.push_back(rng.uniform(-3, 3));
    p.objective = Objective{Sense::Minimize, obj};
    const LpResult r = solve(p);
    if (r.status != LpStatus::Optimal) continue;
    REQUIRE(r.duals.size() == p.constraints.size());
    for (int v = 0; v < nv; ++v) {
      Rational reduced = obj[static_cast<std::size_t>(v)];
      for (std::size_t row = 0; row < p.constraints.size(); ++row)
        reduced -= r.duals[row] * p.constraints[row].coeffs[static_cast<std::size_t>(v)];
      CHECK(reduced >= 0);
    }
  }
}
