#pragma once

// Dense two-phase tableau simplex for small box-bounded LPs.
//
// Variables are shifted to x' = x - lo, upper bounds become explicit rows,
// rows and then columns are scaled to unit max coefficient. The entering
// column is the lowest-index improving one and the leaving row comes from a
// Harris ratio test, so a given program always takes the same pivot path.
// The final basic solution is recomputed from the unpivoted rows and then
// certified by primal, dual and gap residuals.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfqkd/mathkit.hpp"

namespace pfqkd {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Sense { minimize, maximize };
enum class Relation { less_equal, greater_equal };
enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}

struct LinearConstraint {
  std::vector<double> coeffs;
  Relation relation = Relation::less_equal;
  double bound = 0.0;
};

struct VariableBounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct LinearProgram {
  std::vector<std::string> names;
  Sense sense = Sense::minimize;
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;
  std::vector<VariableBounds> bounds;

  std::size_t num_variables() const { return objective.size(); }

  void validate() const {
    const auto n = num_variables();
    if (names.size() != n || bounds.size() != n) throw DomainError("LinearProgram: names/bounds/objective size mismatch");
    for (const auto& b : bounds) {
      if (!(b.lo >= 0.0 && b.lo <= b.hi && b.hi <= 1.0)) throw DomainError("LinearProgram: bounds must satisfy 0 <= lo <= hi <= 1");
    }
    for (const auto& c : constraints) {
      if (c.coeffs.size() != n) throw DomainError("LinearProgram: constraint width differs from variable count");
      if (!std::isfinite(c.bound)) throw DomainError("LinearProgram: non-finite constraint bound");
      for (double a : c.coeffs)
        if (!std::isfinite(a)) throw DomainError("LinearProgram: non-finite coefficient");
    }
    for (double c : objective)
      if (!std::isfinite(c)) throw DomainError("LinearProgram: non-finite objective coefficient");
  }
};

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
  double primal_residual = 0.0;  ///< max violation over row-scaled constraints and bounds
  double dual_residual = 0.0;    ///< max reduced-cost / dual-sign violation
  double duality_gap = 0.0;      ///< |primal - dual| of the scaled problem
  int iterations = 0;
};

struct SimplexOptions {
  double pivot_tol = 1e-11;
  double cost_tol = 1e-12;
  double feas_tol = 1e-9;
  double gap_tol = 1e-8;
  double harris_tol = 1e-16;  ///< ratio-test slack, internal (unit-scaled) units
  double gap_floor = 1e-14;   ///< absolute duality gap allowed at a zero objective
  int max_iterations = 200000;
};

namespace detail {

// Extended precision: the decoy rows come in near-equality pairs whose
// coefficients span many decades, and double rounding in the eliminations
// is visible in the residual certificate.
using Real = long double;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), Real{0}) {}

  Real& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  Real at(std::size_t r, std::size_t c) const { return a_[r * (cols_ + 1) + c]; }
  Real& rhs(std::size_t r) { return at(r, cols_); }
  Real rhs(std::size_t r) const { return at(r, cols_); }
  // Row `rows_` holds reduced costs; its rhs holds minus the objective.
  Real& cost(std::size_t c) { return at(rows_, c); }
  Real cost(std::size_t c) const { return at(rows_, c); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const Real p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const Real f = at(r, pc);
      if (f == 0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Real> a_;
};

// Solves B x = b by Gaussian elimination with partial pivoting; false when
// B is numerically singular.
inline bool solve_dense(std::vector<Real> b_mat, std::vector<Real>& rhs, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(b_mat[i * n + k]) > std::abs(b_mat[p * n + k])) p = i;
    if (b_mat[p * n + k] == 0) return false;
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(b_mat[k * n + c], b_mat[p * n + c]);
      std::swap(rhs[k], rhs[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const Real f = b_mat[i * n + k] / b_mat[k * n + k];
      if (f == 0) continue;
      for (std::size_t c = k; c < n; ++c) b_mat[i * n + c] -= f * b_mat[k * n + c];
      rhs[i] -= f * rhs[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    Real v = rhs[k];
    for (std::size_t c = k + 1; c < n; ++c) v -= b_mat[k * n + c] * rhs[c];
    rhs[k] = v / b_mat[k * n + k];
  }
  return true;
}

}  // namespace detail

namespace detail {

// Internal row: a·x' (<=, >=, =) b with b >= 0 after sign normalisation.
struct InternalRow {
  std::vector<double> a;
  enum Kind { le, ge, eq } kind;
  double b;
};

// Row-scaled constraint with both sides; infinite sides are absent.
struct RangedRow {
  std::vector<double> a;
  double lo;
  double hi;
};

inline bool same_row(const std::vector<double>& x, const std::vector<double>& y) {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (std::abs(x[j] - y[j]) > 1e-13) return false;
  return true;
}

}  // namespace detail

namespace detail {

inline LpResult solve_attempt(const LinearProgram& lp, const SimplexOptions& opt) {
  const std::size_t nv = lp.num_variables();
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Shift to x' = x - lo, scale each row to unit max coefficient, and merge
  // rows with identical coefficients into one two-sided row.
  std::vector<detail::RangedRow> ranged;
  std::vector<double> row_scale;
  for (const auto& c : lp.constraints) {
    std::vector<double> a = c.coeffs;
    double b = c.bound;
    double scale = 0.0;
    for (std::size_t j = 0; j < nv; ++j) {
      b -= a[j] * lp.bounds[j].lo;
      scale = std::max(scale, std::abs(a[j]));
    }
    if (scale == 0.0) scale = 1.0;
    for (double& v : a) v /= scale;
    b /= scale;
    row_scale.push_back(scale);
    const double lo = c.relation == Relation::greater_equal ? b : -inf;
    const double hi = c.relation == Relation::less_equal ? b : inf;
    auto same = std::find_if(ranged.begin(), ranged.end(), [&](const auto& r) { return detail::same_row(r.a, a); });
    if (same != ranged.end()) {
      same->lo = std::max(same->lo, lo);
      same->hi = std::min(same->hi, hi);
    } else {
      ranged.push_back({std::move(a), lo, hi});
    }
  }

  // Column equilibration: z_j = c_j x'_j with c_j the largest scaled entry,
  // so high-order columns with tiny coefficients do not yield tiny pivots.
  std::vector<double> col_scale(nv, 1.0);
  for (std::size_t j = 0; j < nv; ++j) {
    double c = 0.0;
    for (const auto& r : ranged) c = std::max(c, std::abs(r.a[j]));
    if (c > 0.0) col_scale[j] = c;
    for (auto& r : ranged) r.a[j] /= col_scale[j];
  }

  // Two-sided rows become a·x' + s = hi with an extra variable 0 <= s <= hi - lo.
  std::size_t n_range = 0;
  for (const auto& r : ranged) n_range += (std::isfinite(r.lo) && std::isfinite(r.hi)) ? 1 : 0;
  const std::size_t nx = nv + n_range;

  std::vector<detail::InternalRow> rows;
  std::vector<double> upper(nx, 0.0);
  for (std::size_t j = 0; j < nv; ++j) upper[j] = (lp.bounds[j].hi - lp.bounds[j].lo) * col_scale[j];
  {
    std::size_t s = nv;
    for (const auto& r : ranged) {
      std::vector<double> a(nx, 0.0);
      std::copy(r.a.begin(), r.a.end(), a.begin());
      const bool has_lo = std::isfinite(r.lo);
      const bool has_hi = std::isfinite(r.hi);
      if (has_lo && has_hi) {
        if (r.lo - r.hi > opt.feas_tol) {
          LpResult out;
          out.status = LpStatus::infeasible;
          return out;
        }
        a[s] = 1.0;
        upper[s] = std::max(r.hi - r.lo, 0.0);
        ++s;
        rows.push_back({std::move(a), detail::InternalRow::eq, r.hi});
      } else if (has_hi) {
        rows.push_back({std::move(a), detail::InternalRow::le, r.hi});
      } else if (has_lo) {
        rows.push_back({std::move(a), detail::InternalRow::ge, r.lo});
      }
    }
  }
  for (std::size_t j = 0; j < nx; ++j) {
    std::vector<double> a(nx, 0.0);
    a[j] = 1.0;
    rows.push_back({std::move(a), detail::InternalRow::le, upper[j]});
  }
  for (auto& r : rows) {
    if (r.b < 0.0) {
      for (double& v : r.a) v = -v;
      r.b = -r.b;
      if (r.kind != detail::InternalRow::eq)
        r.kind = r.kind == detail::InternalRow::le ? detail::InternalRow::ge : detail::InternalRow::le;
    }
  }

  // Minimisation-form objective scaled to unit max coefficient.
  const double sense_sign = lp.sense == Sense::minimize ? 1.0 : -1.0;
  std::vector<double> cost(nx, 0.0);
  double obj_scale = 0.0;
  for (std::size_t j = 0; j < nv; ++j) {
    cost[j] = sense_sign * lp.objective[j] / col_scale[j];
    obj_scale = std::max(obj_scale, std::abs(cost[j]));
  }
  if (obj_scale == 0.0) obj_scale = 1.0;
  for (double& c : cost) c /= obj_scale;

  const std::size_t m = rows.size();
  std::size_t n_art = 0;
  for (const auto& r : rows) n_art += r.kind == detail::InternalRow::le ? 0 : 1;
  const std::size_t slack0 = nx;
  const std::size_t art0 = nx + m;
  const std::size_t ncols = nx + m + n_art;

  detail::Tableau t(m, ncols);
  std::vector<std::size_t> basis(m);
  std::vector<std::size_t> identity_col(m);
  {
    std::size_t a = art0;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < nx; ++j) t.at(i, j) = rows[i].a[j];
      if (rows[i].kind != detail::InternalRow::eq) t.at(i, slack0 + i) = rows[i].kind == detail::InternalRow::le ? 1.0 : -1.0;
      t.rhs(i) = rows[i].b;
      if (rows[i].kind == detail::InternalRow::le) {
        basis[i] = slack0 + i;
      } else {
        t.at(i, a) = 1.0;
        basis[i] = a++;
      }
      identity_col[i] = basis[i];
    }
  }
  // Equality rows have no slack; keep that column out of the basis.
  auto usable = [&](std::size_t c) {
    if (c >= art0) return false;
    if (c >= slack0) return rows[c - slack0].kind != detail::InternalRow::eq;
    return true;
  };

  LpResult result;

  auto load_costs = [&](const std::vector<double>& c_full) {
    for (std::size_t c = 0; c <= ncols; ++c) t.cost(c) = c < ncols ? c_full[c] : 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const detail::Real cb = c_full[basis[i]];
      if (cb == 0) continue;
      for (std::size_t c = 0; c <= ncols; ++c) t.cost(c) -= cb * t.at(i, c);
    }
  };

  // Lowest-index entering column. Returns false when the phase is unbounded.
  auto iterate = [&]() -> bool {
    for (;;) {
      if (++result.iterations > opt.max_iterations) throw SolverError("simplex: iteration limit reached");
      std::size_t enter = ncols;
      for (std::size_t c = 0; c < ncols; ++c) {
        if (usable(c) && t.cost(c) < -opt.cost_tol) {
          enter = c;
          break;
        }
      }
      if (enter == ncols) return true;
      // Harris two-pass ratio test: bound the step with a small feasibility
      // slack, then take the largest pivot among rows that stay within it.
      const detail::Real piv_min = opt.pivot_tol;
      const detail::Real slack = opt.harris_tol;
      detail::Real bound = inf;
      for (std::size_t i = 0; i < m; ++i) {
        const auto a = t.at(i, enter);
        if (a <= piv_min) continue;
        bound = std::min(bound, (std::max(t.rhs(i), detail::Real{0}) + slack) / a);
      }
      std::size_t leave = m;
      detail::Real best_pivot = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto a = t.at(i, enter);
        if (a <= piv_min) continue;
        if (std::max(t.rhs(i), detail::Real{0}) / a > bound) continue;
        if (a > best_pivot || (a == best_pivot && basis[i] < basis[leave])) {
          best_pivot = a;
          leave = i;
        }
      }
      if (leave == m) return false;
      // A row pushed slightly negative by the slack leaves at zero; pivoting
      // on its negative value would amplify it by 1/pivot.
      if (t.rhs(leave) < 0) t.rhs(leave) = 0;
      t.pivot(leave, enter);
      basis[leave] = enter;
    }
  };

  // Phase 1: drive the artificials to zero.
  if (n_art > 0) {
    std::vector<double> c1(ncols, 0.0);
    for (std::size_t c = art0; c < ncols; ++c) c1[c] = 1.0;
    load_costs(c1);
    iterate();
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] >= art0) infeas += static_cast<double>(std::max(t.rhs(i), detail::Real{0}));
    if (infeas > opt.feas_tol) {
      result.status = LpStatus::infeasible;
      return result;
    }
    // Pivot zero-level artificials out on the largest available entry.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < art0) continue;
      std::size_t col = ncols;
      detail::Real biggest = opt.pivot_tol;
      for (std::size_t c = 0; c < art0; ++c) {
        if (!usable(c)) continue;
        const auto v = std::abs(t.at(i, c));
        if (v > biggest) {
          biggest = v;
          col = c;
        }
      }
      if (col < ncols) {
        t.pivot(i, col);
        basis[i] = col;
      }
    }
  }

  // Phase 2.
  std::vector<double> c2(ncols, 0.0);
  std::copy(cost.begin(), cost.end(), c2.begin());
  load_costs(c2);
  if (!iterate()) {
    result.status = LpStatus::unbounded;
    return result;
  }

  // Recompute the basic solution from the unpivoted rows to shed the
  // rounding accumulated in the tableau.
  std::vector<detail::Real> level(m);
  {
    std::vector<detail::Real> b_mat(m * m, detail::Real{0});
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t c = basis[k];
      for (std::size_t i = 0; i < m; ++i) {
        detail::Real v = 0;
        if (c < nx) {
          v = rows[i].a[c];
        } else if (c < art0) {
          if (c - slack0 == i) v = rows[i].kind == detail::InternalRow::le ? 1 : -1;
        } else if (identity_col[i] == c) {
          v = 1;
        }
        b_mat[i * m + k] = v;
      }
    }
    for (std::size_t i = 0; i < m; ++i) level[i] = rows[i].b;
    if (!detail::solve_dense(std::move(b_mat), level, m))
      for (std::size_t i = 0; i < m; ++i) level[i] = t.rhs(i);
  }
  std::vector<double> xs(ncols, 0.0);
  for (std::size_t i = 0; i < m; ++i) xs[basis[i]] = static_cast<double>(std::max(level[i], detail::Real{0}));

  result.status = LpStatus::optimal;
  result.x.resize(nv);
  double obj = 0.0;
  for (std::size_t j = 0; j < nv; ++j) {
    result.x[j] = std::clamp(lp.bounds[j].lo + xs[j] / col_scale[j], lp.bounds[j].lo, lp.bounds[j].hi);
    obj += lp.objective[j] * result.x[j];
  }
  result.objective = obj;

  // Certificate. Primal feasibility is checked against the caller's rows
  // (row-scaled); dual feasibility and the gap against the internal form.
  double primal_res = 0.0;
  for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
    const auto& c = lp.constraints[i];
    double lhs = 0.0;
    for (std::size_t j = 0; j < nv; ++j) lhs += c.coeffs[j] * result.x[j];
    const double viol = c.relation == Relation::less_equal ? lhs - c.bound : c.bound - lhs;
    primal_res = std::max(primal_res, viol / row_scale[i]);
  }
  std::vector<double> y(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    detail::Real s = 0;
    for (std::size_t r = 0; r < m; ++r) s += c2[basis[r]] * t.at(r, identity_col[i]);
    y[i] = static_cast<double>(s);
  }
  double dual_res = 0.0;
  double dual_obj = 0.0;
  double primal_obj = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    dual_obj += y[i] * rows[i].b;
    if (rows[i].kind == detail::InternalRow::le) dual_res = std::max(dual_res, y[i]);
    if (rows[i].kind == detail::InternalRow::ge) dual_res = std::max(dual_res, -y[i]);
  }
  for (std::size_t j = 0; j < nx; ++j) {
    double reduced = cost[j];
    for (std::size_t i = 0; i < m; ++i) reduced -= y[i] * rows[i].a[j];
    dual_res = std::max(dual_res, -reduced);
    primal_obj += cost[j] * xs[j];
  }
  result.primal_residual = std::max(primal_res, 0.0);
  result.dual_residual = dual_res;
  result.duality_gap = std::abs(primal_obj - dual_obj);

  if (result.primal_residual > opt.feas_tol) {
    throw SolverError("simplex: primal residual " + std::to_string(result.primal_residual * 1e12) + "e-12 above tolerance");
  }
  if (result.dual_residual > opt.feas_tol) {
    throw SolverError("simplex: dual residual " + std::to_string(result.dual_residual * 1e12) + "e-12 above tolerance");
  }
  if (result.duality_gap > opt.gap_tol * std::max({std::abs(primal_obj), std::abs(dual_obj)}) + opt.gap_floor) {
    throw SolverError("simplex: duality gap " + std::to_string(result.duality_gap * 1e12) + "e-12 above tolerance");
  }
  return result;
}

}  // namespace detail

/// Certified solve. The ratio-test slack trades stability against drift on
/// near-degenerate bases, so an uncertified attempt is retried with other
/// slacks before giving up.
inline LpResult solve(const LinearProgram& lp, const SimplexOptions& opt = {}) {
  lp.validate();
  std::string last_error;
  for (double factor : {1.0, 10.0, 0.1, 100.0, 0.0}) {
    SimplexOptions attempt = opt;
    attempt.harris_tol = opt.harris_tol * factor;
    try {
      return detail::solve_attempt(lp, attempt);
    } catch (const SolverError& e) {
      last_error = e.what();
    }
  }
  throw SolverError(last_error);
}

/// Plain-text dump, one line per constraint: `coeff*var + ... <= bound`.
inline std::string to_text(const LinearProgram& lp) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto terms = [&](const std::vector<double>& coeffs) {
    std::string s;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      if (coeffs[j] == 0.0) continue;
      if (!s.empty()) s += " + ";
      s += num(coeffs[j]) + "*" + lp.names[j];
    }
    return s.empty() ? std::string("0") : s;
  };
  std::ostringstream out;
  out << (lp.sense == Sense::minimize ? "min: " : "max: ") << terms(lp.objective) << '\n';
  for (const auto& c : lp.constraints)
    out << terms(c.coeffs) << (c.relation == Relation::less_equal ? " <= " : " >= ") << num(c.bound) << '\n';
  for (std::size_t j = 0; j < lp.num_variables(); ++j)
    out << num(lp.bounds[j].lo) << " <= " << lp.names[j] << " <= " << num(lp.bounds[j].hi) << '\n';
  return out.str();
}

}  // namespace pfqkd
