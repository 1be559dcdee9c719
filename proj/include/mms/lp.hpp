#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mms/rational.hpp"
#include "mms/types.hpp"

namespace mms {
namespace lp {

enum class Relation { GreaterEqual, LessEqual, Equal };

struct Constraint {
  std::vector<Rational> coeffs;  // one per declared variable
  Relation rel;
  Rational rhs;
};

enum class Sense { Minimize, Maximize };

struct Objective {
  Sense sense;
  std::vector<Rational> coeffs;
};

// Exact-arithmetic linear program. Variables are free unless flagged
// nonnegative; nonnegativity may equally be stated as an explicit row.
struct LinearProgram {
  std::vector<std::string> variables;
  std::vector<Constraint> constraints;
  std::optional<Objective> objective;
  std::vector<bool> nonnegative;  // empty means all free

  Eigen::Index var_count() const { return static_cast<Eigen::Index>(variables.size()); }
  void add_constraint(std::vector<Rational> coeffs, Relation rel, Rational rhs);
  void validate() const;
};

enum class LpStatus { Infeasible, Feasible, Optimal, Unbounded };

// A basis position: either a declared variable (with the sign of the split
// piece used for free variables) or the slack of a constraint row. Stable
// across column insertions and deletions, so callers that re-solve a growing
// program can skip phase one entirely.
struct BasisEntry {
  enum class Kind { Variable, Slack };
  Kind kind = Kind::Variable;
  std::string variable;
  int piece_sign = 1;
  std::size_t row = 0;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<Rational> assignment;  // per declared variable
  Rational value;                    // objective value when Optimal
  std::vector<Rational> duals;       // per constraint, populated when Optimal
  std::vector<BasisEntry> basis;     // optimal basis, when expressible

  Rational value_of(const LinearProgram& program, const std::string& variable) const;
};

// Two-phase exact simplex with Bland's rule. Without an objective the result
// is Feasible/Infeasible; with one it is Optimal/Unbounded/Infeasible. Any
// returned assignment satisfies every constraint exactly. A basis hint that
// maps onto the program and is primal feasible skips phase one.
LpResult solve(const LinearProgram& program, const std::vector<BasisEntry>* hint = nullptr);

struct StrictResult {
  bool feasible = false;
  std::vector<Rational> assignment;
  Rational slack;  // optimal margin, > 0 iff feasible
};

// Decides the system where the listed rows must hold strictly. A single
// margin variable d is subtracted from every strict >= row (added to <=),
// bounded by 0 <= d <= 1 and maximized; strict feasibility holds iff the
// optimum is positive. The witness is taken at that optimum.
StrictResult solve_strict(const LinearProgram& program,
                          const std::vector<std::size_t>& strict_rows);

}  // namespace lp
}  // namespace mms
