#include "nafd/qcqp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nafd {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kNumericalBreakdown: return "numerical_breakdown";
  }
  return "?";
}

namespace {

void check_term(const LinTerm& t, int n, const std::string& where) {
  if (t.var < 0 || t.var >= n)
    throw std::invalid_argument("ConvexQCQP: variable index out of range in " +
                                where);
  if (!std::isfinite(t.coef))
    throw std::invalid_argument("ConvexQCQP: non-finite coefficient in " +
                                where);
}

}  // namespace

void ConvexQCQP::validate() const {
  if (num_vars < 0) throw std::invalid_argument("ConvexQCQP: negative size");
  if (static_cast<int>(obj_lin.size()) != num_vars ||
      static_cast<int>(lower.size()) != num_vars ||
      static_cast<int>(upper.size()) != num_vars ||
      static_cast<int>(var_names.size()) != num_vars)
    throw std::invalid_argument("ConvexQCQP: inconsistent array sizes");
  for (int j = 0; j < num_vars; ++j) {
    if (!std::isfinite(obj_lin[j]))
      throw std::invalid_argument("ConvexQCQP: non-finite objective");
    if (lower[j] > upper[j])
      throw std::invalid_argument("ConvexQCQP: empty bound interval for " +
                                  var_names[j]);
    if (std::isnan(lower[j]) || std::isnan(upper[j]))
      throw std::invalid_argument("ConvexQCQP: NaN bound");
  }
  for (const auto& c : constraints) {
    if (!std::isfinite(c.rhs))
      throw std::invalid_argument("ConvexQCQP: non-finite rhs in " + c.name);
    for (const auto& t : c.lin) check_term(t, num_vars, c.name);
    for (const auto& r : c.quad_rows) {
      if (!std::isfinite(r.constant))
        throw std::invalid_argument("ConvexQCQP: non-finite row constant in " +
                                    c.name);
      for (const auto& t : r.terms) check_term(t, num_vars, c.name);
    }
  }
}

namespace {

void print_lin(std::ostringstream& os, const std::vector<LinTerm>& terms,
               bool* first) {
  for (const auto& t : terms) {
    if (!*first) os << " + ";
    os << t.coef << "*x" << t.var;
    *first = false;
  }
}

}  // namespace

std::string ConvexQCQP::dump() const {
  std::ostringstream os;
  os.precision(12);
  os << "problem " << num_vars << " " << constraints.size() << "\n";
  os << "min " << obj_const;
  for (int j = 0; j < num_vars; ++j)
    if (obj_lin[j] != 0.0) os << " + " << obj_lin[j] << "*x" << j;
  os << "\n";
  for (int j = 0; j < num_vars; ++j)
    os << "var x" << j << " " << var_names[j] << " in [" << lower[j] << ", "
       << upper[j] << "]\n";
  for (const auto& c : constraints) {
    os << "con " << c.name << ":";
    bool first = true;
    for (const auto& r : c.quad_rows) {
      os << (first ? " " : " + ") << "(";
      bool rf = true;
      print_lin(os, r.terms, &rf);
      if (r.constant != 0.0 || rf) {
        if (!rf) os << " + ";
        os << r.constant;
      }
      os << ")^2";
      first = false;
    }
    print_lin(os, c.lin, &first);
    if (first) os << " 0";
    os << " <= " << c.rhs << "\n";
  }
  return os.str();
}

CertifyReport certify(const ConvexQCQP& p, const PrimalSolution& s,
                      const SolveOptions& opts) {
  CertifyReport rep;
  const int n = p.num_vars;
  const int mc = static_cast<int>(p.constraints.size());
  const Eigen::VectorXd& x = s.x;

  // Gradient of the Lagrangian, accumulated from problem data only.
  Eigen::VectorXd grad(n);
  for (int j = 0; j < n; ++j) grad(j) = p.obj_lin[j];

  double obj_scale = 1.0;
  for (int j = 0; j < n; ++j) obj_scale = std::max(obj_scale, std::fabs(p.obj_lin[j]));

  int mult_idx = 0;
  auto take_mult = [&]() -> double {
    if (mult_idx < s.mult.size()) return s.mult(mult_idx++);
    ++mult_idx;
    return 0.0;
  };

  for (int i = 0; i < mc; ++i) {
    const auto& c = p.constraints[i];
    double f = c.eval(x);
    double scale = 1.0 + std::fabs(c.rhs);
    rep.primal_violation = std::max(rep.primal_violation, f / scale);
    double z = take_mult();
    rep.min_mult = std::min(rep.min_mult, z);
    rep.complementarity =
        std::max(rep.complementarity, std::fabs(z * f) / (scale * obj_scale));
    for (const auto& r : c.quad_rows) {
      double t = 2.0 * z * r.eval(x);
      for (const auto& term : r.terms) grad(term.var) += t * term.coef;
    }
    for (const auto& t : c.lin) grad(t.var) += z * t.coef;
  }
  for (int j = 0; j < n; ++j) {
    if (p.lower[j] > -kInf) {
      double f = p.lower[j] - x(j);
      rep.primal_violation = std::max(rep.primal_violation, f);
      double z = take_mult();
      rep.min_mult = std::min(rep.min_mult, z);
      rep.complementarity =
          std::max(rep.complementarity, std::fabs(z * f) / obj_scale);
      grad(j) -= z;
    }
  }
  for (int j = 0; j < n; ++j) {
    if (p.upper[j] < kInf) {
      double f = x(j) - p.upper[j];
      rep.primal_violation = std::max(rep.primal_violation, f);
      double z = take_mult();
      rep.min_mult = std::min(rep.min_mult, z);
      rep.complementarity =
          std::max(rep.complementarity, std::fabs(z * f) / obj_scale);
      grad(j) += z;
    }
  }

  rep.stationarity = grad.cwiseAbs().maxCoeff() / obj_scale;
  rep.feasible_ok = rep.primal_violation <= opts.feas_tol &&
                    rep.min_mult >= -opts.kkt_tol;
  rep.stationarity_ok = rep.stationarity <= opts.kkt_tol;
  rep.complementarity_ok = rep.complementarity <= opts.kkt_tol;
  return rep;
}

}  // namespace nafd
