#include "mms/lp.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace mms {
namespace lp {

void LinearProgram::add_constraint(std::vector<Rational> coeffs, Relation rel, Rational rhs) {
  constraints.push_back({std::move(coeffs), rel, std::move(rhs)});
}

void LinearProgram::validate() const {
  const std::size_t n = variables.size();
  if (n == 0) throw std::invalid_argument("linear program declares no variables");
  if (!nonnegative.empty() && nonnegative.size() != n)
    throw std::invalid_argument("nonnegative flag count must match variable count");
  for (const Constraint& c : constraints)
    if (c.coeffs.size() != n)
      throw std::invalid_argument("constraint coefficient count must match variable count");
  if (objective && objective->coeffs.size() != n)
    throw std::invalid_argument("objective coefficient count must match variable count");
}

Rational LpResult::value_of(const LinearProgram& program, const std::string& variable) const {
  for (std::size_t j = 0; j < program.variables.size(); ++j)
    if (program.variables[j] == variable) return assignment[j];
  throw std::invalid_argument("unknown variable '" + variable + "'");
}

namespace {

using RatMat = Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic>;

// Columns of the standard form: structural pieces of declared variables
// (free ones split into positive/negative parts), then slack/surplus, then
// phase-1 artificials.
struct StdForm {
  RatMat a;                 // m x n, fixed snapshot for dual extraction
  RatVec rhs;               // m, nonnegative
  std::vector<Rational> cost;  // n, phase-2 costs (minimization)
  Eigen::Index structural_cols = 0;
  Eigen::Index artificial_begin = 0;
  std::vector<std::pair<Eigen::Index, int>> var_pieces_flat;  // (declared var, sign) per column
  std::vector<Eigen::Index> slack_owner;      // per column: constraint of this slack, or -1
  std::vector<Eigen::Index> row_of_original;  // original row -> std row
};

struct Working {
  RatMat a;
  RatVec rhs;
  std::vector<Eigen::Index> basis;       // per row: column index
  std::vector<Eigen::Index> row_origin;  // per row: original constraint row (-1: synthetic)
};

void pivot(Working& w, Eigen::Index prow, Eigen::Index pcol) {
  const Rational pv = w.a(prow, pcol);
  w.a.row(prow) /= pv;
  w.rhs(prow) /= pv;
  for (Eigen::Index r = 0; r < w.a.rows(); ++r) {
    if (r == prow) continue;
    const Rational factor = w.a(r, pcol);
    if (factor == 0) continue;
    w.a.row(r) -= factor * w.a.row(prow);
    w.rhs(r) -= factor * w.rhs(prow);
  }
  w.basis[static_cast<std::size_t>(prow)] = pcol;
}

// Bland's rule simplex over the current basis; costs are minimized.
// Returns false when unbounded.
bool run_simplex(Working& w, const std::vector<Rational>& cost, Eigen::Index usable_cols) {
  const Eigen::Index m = w.a.rows();
  for (;;) {
    // reduced costs, scanning for the lowest-index eligible column
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < usable_cols && entering < 0; ++j) {
      bool basic = false;
      for (Eigen::Index r = 0; r < m; ++r)
        if (w.basis[static_cast<std::size_t>(r)] == j) basic = true;
      if (basic) continue;
      Rational z = cost[static_cast<std::size_t>(j)];
      for (Eigen::Index r = 0; r < m; ++r) {
        const Rational cb = cost[static_cast<std::size_t>(w.basis[static_cast<std::size_t>(r)])];
        if (cb != 0 && w.a(r, j) != 0) z -= cb * w.a(r, j);
      }
      if (z < 0) entering = j;
    }
    if (entering < 0) return true;  // optimal

    Eigen::Index leaving = -1;
    Rational best_ratio;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (w.a(r, entering) <= 0) continue;
      Rational ratio = w.rhs(r) / w.a(r, entering);
      if (leaving < 0 || ratio < best_ratio ||
          (ratio == best_ratio && w.basis[static_cast<std::size_t>(r)] <
                                      w.basis[static_cast<std::size_t>(leaving)])) {
        leaving = r;
        best_ratio = ratio;
      }
    }
    if (leaving < 0) return false;  // unbounded
    pivot(w, leaving, entering);
  }
}

StdForm build_std_form(const LinearProgram& p) {
  StdForm sf;
  const Eigen::Index n_decl = p.var_count();
  const std::size_t m = p.constraints.size();

  for (Eigen::Index j = 0; j < n_decl; ++j) {
    const bool nn = !p.nonnegative.empty() && p.nonnegative[static_cast<std::size_t>(j)];
    sf.var_pieces_flat.push_back({j, +1});
    if (!nn) sf.var_pieces_flat.push_back({j, -1});
  }
  sf.structural_cols = static_cast<Eigen::Index>(sf.var_pieces_flat.size());

  Eigen::Index slack_cols = 0;
  for (const Constraint& c : p.constraints)
    if (c.rel != Relation::Equal) ++slack_cols;

  // artificial need is decided after rhs normalization, so allocate lazily
  std::vector<int> row_sign(m, 1);
  std::vector<bool> needs_artificial(m, false);
  Eigen::Index artificial_cols = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Constraint& c = p.constraints[i];
    Relation rel = c.rel;
    if (c.rhs < 0) {
      row_sign[i] = -1;
      if (rel == Relation::GreaterEqual)
        rel = Relation::LessEqual;
      else if (rel == Relation::LessEqual)
        rel = Relation::GreaterEqual;
    }
    // after normalization: <= rows carry a basic slack; >= and = rows need
    // an artificial
    if (rel != Relation::LessEqual) {
      needs_artificial[i] = true;
      ++artificial_cols;
    }
  }

  const Eigen::Index n = sf.structural_cols + slack_cols + artificial_cols;
  sf.artificial_begin = sf.structural_cols + slack_cols;
  sf.a = RatMat::Zero(static_cast<Eigen::Index>(m), n);
  sf.rhs = RatVec::Zero(static_cast<Eigen::Index>(m));
  sf.cost.assign(static_cast<std::size_t>(n), Rational(0));
  sf.slack_owner.assign(static_cast<std::size_t>(n), -1);

  if (p.objective) {
    const Rational sign = p.objective->sense == Sense::Minimize ? 1 : -1;
    for (Eigen::Index col = 0; col < sf.structural_cols; ++col) {
      const auto [var, piece_sign] = sf.var_pieces_flat[static_cast<std::size_t>(col)];
      sf.cost[static_cast<std::size_t>(col)] =
          sign * Rational(piece_sign) * p.objective->coeffs[static_cast<std::size_t>(var)];
    }
  }

  Eigen::Index slack_at = sf.structural_cols;
  Eigen::Index art_at = sf.artificial_begin;
  for (std::size_t i = 0; i < m; ++i) {
    const Constraint& c = p.constraints[i];
    const Eigen::Index row = static_cast<Eigen::Index>(i);
    const Rational sgn_row(row_sign[i]);
    for (Eigen::Index col = 0; col < sf.structural_cols; ++col) {
      const auto [var, piece_sign] = sf.var_pieces_flat[static_cast<std::size_t>(col)];
      const Rational& coef = c.coeffs[static_cast<std::size_t>(var)];
      if (coef != 0) sf.a(row, col) = sgn_row * Rational(piece_sign) * coef;
    }
    sf.rhs(row) = sgn_row * c.rhs;
    Relation rel = c.rel;
    if (row_sign[i] < 0) {
      if (rel == Relation::GreaterEqual)
        rel = Relation::LessEqual;
      else if (rel == Relation::LessEqual)
        rel = Relation::GreaterEqual;
    }
    if (rel == Relation::LessEqual) {
      sf.slack_owner[static_cast<std::size_t>(slack_at)] = row;
      sf.a(row, slack_at++) = 1;
    } else if (rel == Relation::GreaterEqual) {
      sf.slack_owner[static_cast<std::size_t>(slack_at)] = row;
      sf.a(row, slack_at++) = -1;
    }
    if (needs_artificial[i]) sf.a(row, art_at++) = 1;
  }
  return sf;
}

}  // namespace

LpResult solve(const LinearProgram& program, const std::vector<BasisEntry>* hint) {
  program.validate();
  LpResult result;
  StdForm sf = build_std_form(program);

  const Eigen::Index m = sf.a.rows();
  const Eigen::Index n = sf.a.cols();

  auto fresh_working = [&] {
    Working w;
    w.a = sf.a;
    w.rhs = sf.rhs;
    w.basis.assign(static_cast<std::size_t>(m), -1);
    w.row_origin.resize(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) w.row_origin[static_cast<std::size_t>(r)] = r;
    return w;
  };
  Working w = fresh_working();

  // a mapped, primal-feasible hint basis replaces phase one
  bool warm = false;
  if (hint != nullptr && hint->size() == static_cast<std::size_t>(m)) {
    std::vector<Eigen::Index> cols;
    bool mapped = true;
    for (const BasisEntry& e : *hint) {
      Eigen::Index col = -1;
      if (e.kind == BasisEntry::Kind::Variable) {
        Eigen::Index var = -1;
        for (std::size_t j = 0; j < program.variables.size(); ++j)
          if (program.variables[j] == e.variable) var = static_cast<Eigen::Index>(j);
        if (var >= 0) {
          for (Eigen::Index c = 0; c < sf.structural_cols; ++c) {
            const auto [v, sgn_piece] = sf.var_pieces_flat[static_cast<std::size_t>(c)];
            if (v == var && sgn_piece == e.piece_sign) col = c;
          }
        }
      } else {
        for (Eigen::Index c = sf.structural_cols; c < sf.artificial_begin; ++c)
          if (sf.slack_owner[static_cast<std::size_t>(c)] ==
              static_cast<Eigen::Index>(e.row))
            col = c;
      }
      if (col < 0) {
        mapped = false;
        break;
      }
      cols.push_back(col);
    }
    if (mapped) {
      bool ok = true;
      for (Eigen::Index k = 0; k < m && ok; ++k) {
        const Eigen::Index col = cols[static_cast<std::size_t>(k)];
        Eigen::Index pr = -1;
        for (Eigen::Index r = k; r < m && pr < 0; ++r)
          if (w.a(r, col) != 0) pr = r;
        if (pr < 0) {
          ok = false;
          break;
        }
        if (pr != k) {
          w.a.row(pr).swap(w.a.row(k));
          std::swap(w.rhs(pr), w.rhs(k));
          std::swap(w.row_origin[static_cast<std::size_t>(pr)],
                    w.row_origin[static_cast<std::size_t>(k)]);
        }
        pivot(w, k, col);
      }
      for (Eigen::Index r = 0; r < m && ok; ++r)
        if (w.rhs(r) < 0) ok = false;
      if (ok) {
        warm = true;
      } else {
        w = fresh_working();
      }
    }
  }

  // initial basis: the slack of a <= row, otherwise the row's artificial
  for (Eigen::Index j = sf.structural_cols; j < sf.artificial_begin; ++j) {
    for (Eigen::Index r = 0; r < m; ++r)
      if (w.a(r, j) == 1 && w.basis[static_cast<std::size_t>(r)] < 0)
        w.basis[static_cast<std::size_t>(r)] = j;
  }
  for (Eigen::Index j = sf.artificial_begin; j < n; ++j) {
    for (Eigen::Index r = 0; r < m; ++r)
      if (w.a(r, j) == 1 && w.basis[static_cast<std::size_t>(r)] < 0)
        w.basis[static_cast<std::size_t>(r)] = j;
  }
  for (Eigen::Index r = 0; r < m; ++r)
    if (w.basis[static_cast<std::size_t>(r)] < 0)
      throw std::logic_error("simplex setup failed to find a starting basis");

  // Phase 1: drive artificials to zero.
  if (!warm && sf.artificial_begin < n) {
    std::vector<Rational> phase1(static_cast<std::size_t>(n), Rational(0));
    for (Eigen::Index j = sf.artificial_begin; j < n; ++j)
      phase1[static_cast<std::size_t>(j)] = 1;
    if (!run_simplex(w, phase1, n))
      throw std::logic_error("phase-1 objective cannot be unbounded");
    Rational infeas = 0;
    for (Eigen::Index r = 0; r < m; ++r)
      if (w.basis[static_cast<std::size_t>(r)] >= sf.artificial_begin) infeas += w.rhs(r);
    if (infeas > 0) {
      result.status = LpStatus::Infeasible;
      return result;
    }
    // pivot remaining zero-valued artificials out; a row with no usable
    // pivot is linearly dependent and gets dropped
    for (Eigen::Index r = 0; r < w.a.rows();) {
      if (w.basis[static_cast<std::size_t>(r)] < sf.artificial_begin) {
        ++r;
        continue;
      }
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < sf.artificial_begin && col < 0; ++j)
        if (w.a(r, j) != 0) col = j;
      if (col >= 0) {
        pivot(w, r, col);
        ++r;
      } else {
        const Eigen::Index last = w.a.rows() - 1;
        if (r != last) {
          w.a.row(r) = w.a.row(last);
          w.rhs(r) = w.rhs(last);
          w.basis[static_cast<std::size_t>(r)] = w.basis[static_cast<std::size_t>(last)];
          w.row_origin[static_cast<std::size_t>(r)] = w.row_origin[static_cast<std::size_t>(last)];
        }
        w.a.conservativeResize(last, Eigen::NoChange);
        w.rhs.conservativeResize(last);
        w.basis.pop_back();
        w.row_origin.pop_back();
      }
    }
  }

  const Eigen::Index usable = sf.artificial_begin;

  // Phase 2.
  if (program.objective) {
    if (!run_simplex(w, sf.cost, usable)) {
      result.status = LpStatus::Unbounded;
      return result;
    }
  }

  // extract assignment
  result.assignment.assign(program.variables.size(), Rational(0));
  for (Eigen::Index r = 0; r < w.a.rows(); ++r) {
    const Eigen::Index col = w.basis[static_cast<std::size_t>(r)];
    if (col >= sf.structural_cols) continue;
    const auto [var, piece_sign] = sf.var_pieces_flat[static_cast<std::size_t>(col)];
    result.assignment[static_cast<std::size_t>(var)] += Rational(piece_sign) * w.rhs(r);
  }

  if (!program.objective) {
    result.status = LpStatus::Feasible;
    return result;
  }

  // report the basis in insertion-stable terms when it is expressible
  {
    bool expressible = true;
    std::vector<BasisEntry> basis;
    for (Eigen::Index r = 0; r < w.a.rows(); ++r) {
      const Eigen::Index col = w.basis[static_cast<std::size_t>(r)];
      BasisEntry e;
      if (col < sf.structural_cols) {
        const auto [var, sgn_piece] = sf.var_pieces_flat[static_cast<std::size_t>(col)];
        e.kind = BasisEntry::Kind::Variable;
        e.variable = program.variables[static_cast<std::size_t>(var)];
        e.piece_sign = sgn_piece;
      } else if (col < sf.artificial_begin) {
        e.kind = BasisEntry::Kind::Slack;
        e.row = static_cast<std::size_t>(sf.slack_owner[static_cast<std::size_t>(col)]);
      } else {
        expressible = false;
        break;
      }
      basis.push_back(std::move(e));
    }
    if (expressible) result.basis = std::move(basis);
  }

  result.status = LpStatus::Optimal;
  Rational obj = 0;
  for (std::size_t j = 0; j < program.variables.size(); ++j)
    obj += program.objective->coeffs[j] * result.assignment[j];
  result.value = obj;

  // duals: solve B^T y = c_B against the untouched standard-form columns
  {
    const Eigen::Index rows_left = w.a.rows();
    RatMat bt(rows_left, rows_left);
    RatVec cb(rows_left);
    for (Eigen::Index r = 0; r < rows_left; ++r) {
      const Eigen::Index col = w.basis[static_cast<std::size_t>(r)];
      for (Eigen::Index k = 0; k < rows_left; ++k)
        bt(r, k) = sf.a(w.row_origin[static_cast<std::size_t>(k)], col);
      cb(r) = sf.cost[static_cast<std::size_t>(col)];
    }
    // Gaussian elimination with exact pivoting
    RatVec y = RatVec::Zero(rows_left);
    {
      RatMat aug = bt;
      RatVec b = cb;
      std::vector<Eigen::Index> perm(static_cast<std::size_t>(rows_left), -1);
      Eigen::Index rank = 0;
      for (Eigen::Index c = 0, rr = 0; c < rows_left && rr < rows_left; ++c) {
        Eigen::Index pr = -1;
        for (Eigen::Index r2 = rr; r2 < rows_left; ++r2)
          if (aug(r2, c) != 0) {
            pr = r2;
            break;
          }
        if (pr < 0) continue;
        aug.row(pr).swap(aug.row(rr));
        std::swap(b(pr), b(rr));
        for (Eigen::Index r2 = 0; r2 < rows_left; ++r2) {
          if (r2 == rr || aug(r2, c) == 0) continue;
          const Rational f = aug(r2, c) / aug(rr, c);
          aug.row(r2) -= f * aug.row(rr);
          b(r2) -= f * b(rr);
        }
        perm[static_cast<std::size_t>(rr)] = c;
        ++rr;
        rank = rr;
      }
      if (rank != rows_left) throw std::logic_error("basis matrix must be invertible");
      for (Eigen::Index r2 = 0; r2 < rows_left; ++r2)
        y(perm[static_cast<std::size_t>(r2)]) = b(r2) / aug(r2, perm[static_cast<std::size_t>(r2)]);
    }
    result.duals.assign(program.constraints.size(), Rational(0));
    const Rational sense_sign = program.objective->sense == Sense::Minimize ? 1 : -1;
    for (Eigen::Index k = 0; k < rows_left; ++k) {
      const Eigen::Index orig = w.row_origin[static_cast<std::size_t>(k)];
      const Rational row_sign = program.constraints[static_cast<std::size_t>(orig)].rhs < 0
                                    ? Rational(-1)
                                    : Rational(1);
      result.duals[static_cast<std::size_t>(orig)] = sense_sign * row_sign * y(k);
    }
  }
  return result;
}

StrictResult solve_strict(const LinearProgram& program,
                          const std::vector<std::size_t>& strict_rows) {
  program.validate();
  for (std::size_t row : strict_rows) {
    if (row >= program.constraints.size())
      throw std::invalid_argument("strict row index out of range");
    if (program.constraints[row].rel == Relation::Equal)
      throw std::invalid_argument("equality rows cannot be made strict");
  }

  LinearProgram ext = program;
  ext.variables.push_back("_margin");
  if (ext.nonnegative.empty()) ext.nonnegative.assign(program.variables.size(), false);
  ext.nonnegative.push_back(true);
  for (Constraint& c : ext.constraints) c.coeffs.push_back(0);
  for (std::size_t row : strict_rows) {
    Constraint& c = ext.constraints[row];
    c.coeffs.back() = c.rel == Relation::GreaterEqual ? Rational(-1) : Rational(1);
  }
  {
    std::vector<Rational> bound(ext.variables.size(), Rational(0));
    bound.back() = 1;
    ext.add_constraint(std::move(bound), Relation::LessEqual, Rational(1));
  }
  Objective margin_obj;
  margin_obj.sense = Sense::Maximize;
  margin_obj.coeffs.assign(ext.variables.size(), Rational(0));
  margin_obj.coeffs.back() = 1;
  ext.objective = margin_obj;

  const LpResult r = solve(ext);
  StrictResult out;
  if (r.status == LpStatus::Infeasible) return out;
  if (r.status != LpStatus::Optimal)
    throw std::logic_error("margin maximization must terminate at an optimum");
  out.slack = r.value;
  out.feasible = r.value > 0;
  out.assignment.assign(r.assignment.begin(), r.assignment.end() - 1);
  return out;
}

}  // namespace lp
}  // namespace mms
