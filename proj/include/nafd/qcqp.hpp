#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

namespace nafd {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LinTerm {
  int var;
  double coef;
};

// Affine expression used as one factor row of a quadratic term.
struct AffineExpr {
  std::vector<LinTerm> terms;
  double constant = 0;

  double eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x(t.var);
    return v;
  }
};

// One inequality  sum_r (row_r(x))^2 + lin^T x <= rhs.
// The quadratic part is stored in factored form, so it is positive
// semidefinite by construction; an empty row list makes the row linear.
struct Constraint {
  std::string name;
  std::vector<AffineExpr> quad_rows;
  std::vector<LinTerm> lin;
  double rhs = 0;

  bool is_linear() const { return quad_rows.empty(); }
  // f(x) = quad + lin - rhs; feasible iff f(x) <= 0.
  double eval(const Eigen::VectorXd& x) const {
    double v = -rhs;
    for (const auto& r : quad_rows) {
      double t = r.eval(x);
      v += t * t;
    }
    for (const auto& t : lin) v += t.coef * x(t.var);
    return v;
  }
};

// Canonical convex program:
//   minimize    obj_lin^T x + obj_const
//   subject to  constraints[i].eval(x) <= 0,  lower <= x <= upper.
struct ConvexQCQP {
  int num_vars = 0;
  std::vector<double> obj_lin;
  double obj_const = 0;
  std::vector<Constraint> constraints;
  std::vector<double> lower, upper;
  std::vector<std::string> var_names;

  int add_var(const std::string& name, double lo = -kInf, double hi = kInf) {
    var_names.push_back(name);
    lower.push_back(lo);
    upper.push_back(hi);
    obj_lin.push_back(0.0);
    return num_vars++;
  }

  double objective(const Eigen::VectorXd& x) const {
    double v = obj_const;
    for (int j = 0; j < num_vars; ++j) v += obj_lin[j] * x(j);
    return v;
  }

  // Structural invariants: index ranges, finite coefficients, lower<=upper.
  void validate() const;

  // Text dump. Grammar (one item per line):
  //   problem <num_vars> <num_constraints>
  //   min <c0> [+ <c>*x<j>]...
  //   var x<j> <name> in [<lo>, <hi>]
  //   con <name>: [(<c>*x<j> [+ ...] [+ <g>])^2 [+ ...]] [<c>*x<j> [+ ...]] <= <rhs>
  std::string dump() const;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kMaxIter,
  kNumericalBreakdown,
};

std::string to_string(SolveStatus s);

struct SolveOptions {
  double feas_tol = 1e-7;
  double kkt_tol = 1e-6;
  double gap_tol = 1e-8;   // relative complementarity gap
  int max_iters = 200;
};

struct PrimalSolution {
  SolveStatus status = SolveStatus::kNumericalBreakdown;
  Eigen::VectorXd x;
  double objective = 0;
  // Multipliers: one per constraint, then one per finite lower bound row,
  // then one per finite upper bound row (assembly order of the solver).
  Eigen::VectorXd mult;
  double kkt_residual = 0;
  double primal_violation = 0;
  int iterations = 0;
};

struct CertifyReport {
  double primal_violation = 0;    // max_i f_i(x), bounds included
  double stationarity = 0;        // inf-norm of the Lagrangian gradient
  double complementarity = 0;     // max_i |mult_i * f_i(x)|
  double min_mult = 0;            // most negative multiplier
  bool feasible_ok = false;
  bool stationarity_ok = false;
  bool complementarity_ok = false;
  bool ok() const { return feasible_ok && stationarity_ok && complementarity_ok; }
};

// Recomputes feasibility and KKT residuals of a claimed solution from the
// problem data alone (no solver state).
CertifyReport certify(const ConvexQCQP& p, const PrimalSolution& s,
                      const SolveOptions& opts = {});

PrimalSolution solve(const ConvexQCQP& p, const Eigen::VectorXd* warm_x = nullptr,
                     const Eigen::VectorXd* warm_mult = nullptr,
                     const SolveOptions& opts = {});

}  // namespace nafd
