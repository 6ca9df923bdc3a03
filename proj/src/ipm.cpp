#include <Eigen/Cholesky>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <string>
#include <vector>

#include "nafd/qcqp.hpp"

// Primal-dual interior-point method for the canonical convex QCQP:
// slacked inequalities f_i(x) + s_i = 0, s, z > 0, with Mehrotra
// predictor-corrector steps and normal-equations elimination. Starts from
// infeasible points (slacks floored, primal residual driven to zero);
// classification of hard cases goes through a phase-1 min-max-violation
// solve appended in solve() below.

namespace nafd {
namespace {

struct SparseVec {
  std::vector<int> idx;
  std::vector<double> val;
  void clear() {
    idx.clear();
    val.clear();
  }
};

// One inequality row: either a user constraint or a variable bound.
struct Row {
  const Constraint* con = nullptr;
  int bvar = -1;
  double bval = 0;
  int bsign = 0;  // +1: x - u <= 0, -1: l - x <= 0
  double scale = 1.0;
};

struct Engine {
  const ConvexQCQP& p;
  std::vector<Row> rows;
  int n = 0, m = 0;

  Eigen::VectorXd x, s, z;
  Eigen::VectorXd c;                  // objective gradient, normalized
  Eigen::VectorXd f;                  // f_i(x)
  std::vector<SparseVec> grads;       // nabla f_i(x)
  Eigen::MatrixXd kkt;                // n x n normal matrix
  Eigen::VectorXd scratch;            // dense gradient accumulator

  explicit Engine(const ConvexQCQP& prob) : p(prob) {
    n = p.num_vars;
    for (const auto& c : p.constraints) {
      Row r;
      r.con = &c;
      r.scale = 1.0 + std::fabs(c.rhs);
      rows.push_back(r);
    }
    for (int j = 0; j < n; ++j)
      if (p.lower[j] > -kInf)
        rows.push_back({nullptr, j, p.lower[j], -1, 1.0 + std::fabs(p.lower[j])});
    for (int j = 0; j < n; ++j)
      if (p.upper[j] < kInf)
        rows.push_back({nullptr, j, p.upper[j], +1, 1.0 + std::fabs(p.upper[j])});
    m = static_cast<int>(rows.size());
    grads.resize(m);
    kkt.resize(n, n);
    scratch = Eigen::VectorXd::Zero(n);
  }

  void eval_all() {
    f.resize(m);
    for (int i = 0; i < m; ++i) {
      const Row& r = rows[i];
      SparseVec& g = grads[i];
      g.clear();
      if (!r.con) {
        f(i) = r.bsign > 0 ? x(r.bvar) - r.bval : r.bval - x(r.bvar);
        g.idx.push_back(r.bvar);
        g.val.push_back(r.bsign > 0 ? 1.0 : -1.0);
        continue;
      }
      const Constraint& c = *r.con;
      double fv = -c.rhs;
      // Accumulate the gradient densely, then compress.
      for (const auto& qr : c.quad_rows) {
        double t = qr.eval(x);
        fv += t * t;
        for (const auto& term : qr.terms) scratch(term.var) += 2.0 * t * term.coef;
      }
      for (const auto& t : c.lin) {
        fv += t.coef * x(t.var);
        scratch(t.var) += t.coef;
      }
      f(i) = fv;
      for (const auto& qr : c.quad_rows)
        for (const auto& term : qr.terms)
          if (scratch(term.var) != 0.0) {
            g.idx.push_back(term.var);
            g.val.push_back(scratch(term.var));
            scratch(term.var) = 0.0;
          }
      for (const auto& t : c.lin)
        if (scratch(t.var) != 0.0) {
          g.idx.push_back(t.var);
          g.val.push_back(scratch(t.var));
          scratch(t.var) = 0.0;
        }
    }
  }

  // kkt = sum_i z_i * Hess(f_i) + sum_i (z_i/s_i) g_i g_i^T + reg*I.
  void assemble(double reg) {
    kkt.setZero();
    for (int i = 0; i < m; ++i) {
      const Row& r = rows[i];
      double w = z(i) / s(i);
      if (!r.con) {
        kkt(r.bvar, r.bvar) += w;
        continue;
      }
      for (const auto& qr : r.con->quad_rows) {
        const auto& terms = qr.terms;
        for (std::size_t a = 0; a < terms.size(); ++a)
          for (std::size_t b = 0; b < terms.size(); ++b)
            kkt(terms[a].var, terms[b].var) +=
                2.0 * z(i) * terms[a].coef * terms[b].coef;
      }
      const SparseVec& g = grads[i];
      for (std::size_t a = 0; a < g.idx.size(); ++a)
        for (std::size_t b = 0; b < g.idx.size(); ++b)
          kkt(g.idx[a], g.idx[b]) += w * g.val[a] * g.val[b];
    }
    kkt.diagonal().array() += reg;
  }

  Eigen::VectorXd dual_residual() const {
    Eigen::VectorXd rd = c;
    for (int i = 0; i < m; ++i) {
      const SparseVec& g = grads[i];
      for (std::size_t a = 0; a < g.idx.size(); ++a)
        rd(g.idx[a]) += z(i) * g.val[a];
    }
    return rd;
  }
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double a = 1.0;
  for (int i = 0; i < v.size(); ++i)
    if (dv(i) < 0) a = std::min(a, -v(i) / dv(i));
  return a;
}

struct IpmResult {
  SolveStatus status = SolveStatus::kMaxIter;
  Eigen::VectorXd x, z;
  double objective = 0;
  double kkt_residual = 0;
  double primal_violation = 0;
  int iterations = 0;
};

IpmResult run_ipm(const ConvexQCQP& p, const Eigen::VectorXd& x0,
                  const Eigen::VectorXd* warm_mult, const SolveOptions& opts) {
  Engine e(p);
  const int n = e.n, m = e.m;
  IpmResult out;
  if (m == 0) {
    // Unconstrained linear objective: optimum exists only if c == 0.
    out.x = x0;
    out.z.resize(0);
    bool zero = true;
    for (int j = 0; j < n; ++j)
      if (p.obj_lin[j] != 0.0) zero = false;
    out.status = zero ? SolveStatus::kOptimal : SolveStatus::kUnbounded;
    out.objective = p.objective(x0);
    return out;
  }

  // Normalize the objective so the duals live at O(1) regardless of the
  // caller's penalty weights; multipliers are scaled back on exit.
  double obj_scale = 1.0;
  for (int j = 0; j < n; ++j)
    obj_scale = std::max(obj_scale, std::fabs(p.obj_lin[j]));
  e.c.resize(n);
  for (int j = 0; j < n; ++j) e.c(j) = p.obj_lin[j] / obj_scale;

  e.x = x0;
  e.eval_all();
  e.s.resize(m);
  e.z.resize(m);
  for (int i = 0; i < m; ++i) {
    e.s(i) = std::max(-e.f(i), 1e-2 * e.rows[i].scale);
    double zi = 1.0;
    if (warm_mult && i < warm_mult->size())
      zi = std::min(1e6, std::max(1e-8, (*warm_mult)(i) / obj_scale));
    e.z(i) = zi;
  }
  // Warm duals can sit far off-center for rows whose activity changed
  // between expansions; flooring each pairwise product at a fraction of the
  // mean gap keeps the early KKT systems well conditioned.
  double mu0 = e.s.dot(e.z) / m;
  for (int i = 0; i < m; ++i)
    e.z(i) = std::max(e.z(i), 1e-2 * mu0 / e.s(i));

  double reg_base = 1e-11;
  int stall_count = 0;
  double best_metric = kInf;
  double sigma_floor = 1e-8;  // raised after damped steps to recenter

  // Exact residual summary at a trial iterate; the line search uses this
  // instead of the linear model because the quadratic rows make the true
  // residual overshoot for large steps.
  auto merit_of = [&](double mu_val, double rp_val, double dinf_val) {
    return rp_val + dinf_val + mu_val;
  };

  Eigen::VectorXd dx(n), ds(m), dz(m), rp(m), coef(m);
  Eigen::VectorXd x_old(n), s_old(m), z_old(m);
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    out.iterations = iter;
    // Convergence metrics on the true iterate.
    double pinf = 0, rp_inf = 0, cmax = 0;
    for (int i = 0; i < m; ++i) {
      rp(i) = e.f(i) + e.s(i);
      pinf = std::max(pinf, e.f(i) / e.rows[i].scale);
      rp_inf = std::max(rp_inf, std::fabs(rp(i)) / e.rows[i].scale);
      cmax = std::max(cmax, e.s(i) * e.z(i) / e.rows[i].scale);
    }
    Eigen::VectorXd rd = e.dual_residual();
    double dinf = rd.cwiseAbs().maxCoeff();
    double obj = p.objective(e.x);
    double obj_s = obj / obj_scale;
    double mu = e.s.dot(e.z) / m;
    double gap_rel = e.s.dot(e.z) / (1.0 + std::fabs(obj_s));

    if (pinf <= 0.5 * opts.feas_tol && rp_inf <= 0.5 * opts.feas_tol &&
        dinf <= 0.3 * opts.kkt_tol && cmax <= 0.3 * opts.kkt_tol &&
        gap_rel <= opts.gap_tol) {
      out.status = SolveStatus::kOptimal;
      break;
    }
    if (obj_s < -1e16 && pinf <= opts.feas_tol) {
      out.status = SolveStatus::kUnbounded;
      break;
    }

    double metric = pinf + rp_inf + dinf + mu;
    if (std::getenv("NAFD_IPM_DEBUG"))
      std::fprintf(stderr,
                   "it %3d obj=%+.6e pinf=%+.2e rp=%.2e dinf=%.2e mu=%.2e\n",
                   iter, obj, pinf, rp_inf, dinf, mu);
    if (metric < best_metric * (1.0 - 1e-10)) {
      best_metric = metric;
      stall_count = 0;
    } else if (++stall_count > 12) {
      out.status = SolveStatus::kMaxIter;  // classify via phase-1 upstream
      break;
    }

    // Factor normal matrix, retrying with heavier regularization on NaN.
    e.assemble(0.0);
    double diag_max = e.kkt.diagonal().cwiseAbs().maxCoeff();
    if (!std::isfinite(diag_max)) {
      out.status = SolveStatus::kNumericalBreakdown;
      break;
    }
    Eigen::VectorXd diag0 = e.kkt.diagonal();
    double reg = reg_base;
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    bool factored = false;
    for (int attempt = 0; attempt < 6 && !factored; ++attempt) {
      // Relative per-column shift: keeps the perturbation proportional even
      // when barrier weights spread the diagonal over many decades.
      e.kkt.diagonal() =
          diag0.array() + reg * (1.0 + diag0.array().abs());
      ldlt.compute(e.kkt);
      if (ldlt.info() == Eigen::Success &&
          ldlt.vectorD().minCoeff() > 0.0) factored = true;
      else reg = std::max(reg * 100.0, 1e-10);
    }
    if (!factored) {
      out.status = SolveStatus::kNumericalBreakdown;
      break;
    }

    auto solve_step = [&](const Eigen::VectorXd& rc) -> bool {
      for (int i = 0; i < m; ++i)
        coef(i) = (rc(i) + e.z(i) * rp(i)) / e.s(i);
      Eigen::VectorXd rhs = -rd;
      for (int i = 0; i < m; ++i) {
        const SparseVec& g = e.grads[i];
        for (std::size_t a = 0; a < g.idx.size(); ++a)
          rhs(g.idx[a]) -= coef(i) * g.val[a];
      }
      dx = ldlt.solve(rhs);
      if (!dx.allFinite()) return false;
      for (int i = 0; i < m; ++i) {
        const SparseVec& g = e.grads[i];
        double gdx = 0;
        for (std::size_t a = 0; a < g.idx.size(); ++a)
          gdx += g.val[a] * dx(g.idx[a]);
        ds(i) = -rp(i) - gdx;
        dz(i) = (rc(i) - e.z(i) * ds(i)) / e.s(i);
      }
      return ds.allFinite() && dz.allFinite();
    };

    // Predictor.
    Eigen::VectorXd rc = -(e.s.array() * e.z.array()).matrix();
    if (!solve_step(rc)) {
      out.status = SolveStatus::kNumericalBreakdown;
      break;
    }
    double ap = max_step(e.s, ds), ad = max_step(e.z, dz);
    double mu_aff = 0;
    for (int i = 0; i < m; ++i)
      mu_aff += (e.s(i) + ap * ds(i)) * (e.z(i) + ad * dz(i));
    mu_aff /= m;
    double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
    sigma = std::min(0.99, std::max(sigma_floor, sigma));

    // Corrector.
    for (int i = 0; i < m; ++i)
      rc(i) = sigma * mu - e.s(i) * e.z(i) - ds(i) * dz(i);
    if (!solve_step(rc)) {
      out.status = SolveStatus::kNumericalBreakdown;
      break;
    }

    // Second-order correction. At a (near-)unit step the linearized slack
    // update misses exactly sum_qr (g_qr . dx)^2 per quadratic row, which
    // otherwise forces the line search into tiny steps; folding the
    // predicted curvature into the primal residual and re-solving removes
    // it. The correction assumes a full step, so it is only ever tried at
    // the boundary step length; damped fallbacks use the plain direction,
    // whose curvature error shrinks quadratically on its own.
    Eigen::VectorXd dx0 = dx, ds0 = ds, dz0 = dz;
    bool has_soc = false;
    for (int soc = 0; soc < 2; ++soc) {
      double curv = 0;
      for (int i = 0; i < m; ++i) {
        const Row& r = e.rows[i];
        if (!r.con || r.con->quad_rows.empty()) {
          continue;
        }
        double cv = 0;
        for (const auto& qr : r.con->quad_rows) {
          double d = 0;
          for (const auto& term : qr.terms) d += term.coef * dx(term.var);
          cv += d * d;
        }
        rp(i) += cv;
        curv = std::max(curv, cv / r.scale);
      }
      if (curv < 1e-14) break;
      Eigen::VectorXd dx_keep = dx, ds_keep = ds, dz_keep = dz;
      if (!solve_step(rc)) {
        dx = dx_keep; ds = ds_keep; dz = dz_keep;
        break;
      }
      has_soc = true;
    }

    double merit_now = merit_of(mu, rp_inf, dinf);
    x_old = e.x; s_old = e.s; z_old = e.z;
    auto try_step = [&](const Eigen::VectorXd& tdx, const Eigen::VectorXd& tds,
                        const Eigen::VectorXd& tdz, double a) {
      e.x = x_old + a * tdx;
      e.s = s_old + a * tds;
      e.z = z_old + a * tdz;
      e.eval_all();
      if (!e.f.allFinite()) return false;
      // Resync slacks of strictly satisfied rows to the exact constraint
      // value. The linear slack update drifts from -f by the constraint
      // curvature, and charging that drift to the merit residual throttles
      // the step length; after the resync rp measures real violations only.
      for (int i = 0; i < m; ++i) {
        double nf = -e.f(i);
        if (nf > 1e-10 * e.rows[i].scale) e.s(i) = nf;
      }
      double rp_t = 0, mu_t = e.s.dot(e.z) / m;
      for (int i = 0; i < m; ++i)
        rp_t = std::max(rp_t, std::fabs(e.f(i) + e.s(i)) / e.rows[i].scale);
      double dinf_t = e.dual_residual().cwiseAbs().maxCoeff();
      return merit_of(mu_t, rp_t, dinf_t) <= merit_now * (1.0 - 1e-4 * a);
    };

    double alpha = std::min(1.0, 0.995 * std::min(max_step(s_old, ds),
                                                  max_step(z_old, dz)));
    bool accepted = has_soc && try_step(dx, ds, dz, alpha);
    if (!accepted) {
      if (has_soc) {
        dx = dx0; ds = ds0; dz = dz0;
        alpha = std::min(1.0, 0.995 * std::min(max_step(s_old, ds),
                                               max_step(z_old, dz)));
      }
      for (int bt = 0; bt < 20; ++bt) {
        if (try_step(dx, ds, dz, alpha)) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    }
    // On a failed search keep the tiny trial step already loaded; the stall
    // counter handles the no-progress case.
    sigma_floor = accepted && alpha > 0.1
                      ? std::max(1e-8, sigma_floor * 0.1)
                      : 0.5;
    if (std::getenv("NAFD_IPM_DEBUG")) {
      int bs = -1, bz = -1;
      double as = 1.0, az = 1.0;
      for (int i = 0; i < m; ++i) {
        if (ds(i) < 0 && -s_old(i) / ds(i) < as) { as = -s_old(i) / ds(i); bs = i; }
        if (dz(i) < 0 && -z_old(i) / dz(i) < az) { az = -z_old(i) / dz(i); bz = i; }
      }
      std::fprintf(stderr,
                   "      soc=%d acc=%d alpha=%.3e sigma=%.2e as=%.2e(r%d "
                   "s=%.1e) az=%.2e(r%d z=%.1e) |dx|=%.1e reg=%.0e\n",
                   has_soc, accepted, alpha, sigma, as, bs,
                   bs >= 0 ? s_old(bs) : 0, az, bz, bz >= 0 ? z_old(bz) : 0,
                   dx.cwiseAbs().maxCoeff(), reg);
    }

    if (iter == opts.max_iters) out.status = SolveStatus::kMaxIter;
  }

  out.x = e.x;
  out.z = obj_scale * e.z;
  out.objective = p.objective(e.x);
  double pinf = 0;
  for (int i = 0; i < m; ++i)
    pinf = std::max(pinf, e.f(i) / e.rows[i].scale);
  out.primal_violation = pinf;
  out.kkt_residual = e.dual_residual().cwiseAbs().maxCoeff();
  return out;
}

// Default interior-ish starting point: midpoints of finite bound boxes.
Eigen::VectorXd default_start(const ConvexQCQP& p) {
  Eigen::VectorXd x0(p.num_vars);
  for (int j = 0; j < p.num_vars; ++j) {
    double lo = p.lower[j], hi = p.upper[j];
    if (lo > -kInf && hi < kInf) x0(j) = 0.5 * (lo + hi);
    else if (lo > -kInf) x0(j) = lo + 1.0;
    else if (hi < kInf) x0(j) = hi - 1.0;
    else x0(j) = 0.0;
  }
  return x0;
}

Eigen::VectorXd clamp_into_bounds(const ConvexQCQP& p, Eigen::VectorXd x) {
  for (int j = 0; j < p.num_vars; ++j) {
    double lo = p.lower[j], hi = p.upper[j];
    double margin = (hi < kInf && lo > -kInf) ? 1e-9 * (hi - lo) : 1e-9;
    if (lo > -kInf) x(j) = std::max(x(j), lo + margin);
    if (hi < kInf) x(j) = std::min(x(j), hi - margin);
  }
  return x;
}

// min t s.t. f_i(x) <= t: decides feasibility and produces a near-feasible
// point for a restart.
struct Phase1Result {
  bool solved = false;
  double t_star = kInf;
  Eigen::VectorXd x;
};

Phase1Result phase1(const ConvexQCQP& p, const SolveOptions& opts) {
  ConvexQCQP q;
  q.num_vars = p.num_vars;
  q.obj_lin = std::vector<double>(p.num_vars, 0.0);
  q.lower = p.lower;
  q.upper = p.upper;
  q.var_names = p.var_names;
  int t = q.add_var("phase1_t", -1.0, kInf);
  q.obj_lin[t] = 1.0;
  q.constraints = p.constraints;
  for (auto& c : q.constraints) c.lin.push_back({t, -1.0});

  Eigen::VectorXd x0 = clamp_into_bounds(p, default_start(p));
  Eigen::VectorXd x0t(q.num_vars);
  x0t.head(p.num_vars) = x0;
  double fmax = 0;
  for (const auto& c : p.constraints) fmax = std::max(fmax, c.eval(x0));
  x0t(t) = fmax + 1.0;

  SolveOptions po = opts;
  po.max_iters = std::max(100, opts.max_iters);
  IpmResult r = run_ipm(q, x0t, nullptr, po);
  Phase1Result res;
  res.solved = r.status == SolveStatus::kOptimal ||
               (r.status == SolveStatus::kMaxIter &&
                r.primal_violation <= opts.feas_tol);
  res.t_star = r.x.size() ? r.x(t) : kInf;
  if (r.x.size()) res.x = r.x.head(p.num_vars);
  return res;
}

PrimalSolution pack(const IpmResult& r, const ConvexQCQP& p) {
  PrimalSolution s;
  s.status = r.status;
  s.x = r.x;
  s.objective = r.objective;
  s.mult = r.z;
  s.kkt_residual = r.kkt_residual;
  s.primal_violation = r.primal_violation;
  s.iterations = r.iterations;
  return s;
}

}  // namespace

PrimalSolution solve(const ConvexQCQP& p, const Eigen::VectorXd* warm_x,
                     const Eigen::VectorXd* warm_mult,
                     const SolveOptions& opts) {
  p.validate();
  Eigen::VectorXd x0 = warm_x && warm_x->size() == p.num_vars
                           ? clamp_into_bounds(p, *warm_x)
                           : clamp_into_bounds(p, default_start(p));
  IpmResult r = run_ipm(p, x0, warm_mult, opts);
  if (r.status == SolveStatus::kOptimal || r.status == SolveStatus::kUnbounded)
    return pack(r, p);

  // Stalled or hit the cap: decide between infeasibility and a hard but
  // feasible instance, then retry once from the phase-1 point.
  Phase1Result ph = phase1(p, opts);
  if (ph.solved && ph.t_star > opts.feas_tol) {
    if (std::getenv("NAFD_IPM_DUMP_INFEAS")) {
      static int dump_count = 0;
      std::string path = "/tmp/infeas_" + std::to_string(dump_count++) +
                         ".qcqp";
      if (std::FILE* f = std::fopen(path.c_str(), "w")) {
        std::fputs(p.dump().c_str(), f);
        std::fclose(f);
      }
      if (std::FILE* f = std::fopen((path + ".x0").c_str(), "w")) {
        for (int j = 0; j < p.num_vars; ++j)
          std::fprintf(f, "%.17e\n", x0(j));
        std::fclose(f);
      }
      std::fprintf(stderr, "infeasible-classified problem (t*=%.6e) -> %s\n",
                   ph.t_star, path.c_str());
      for (int i = 0; i < static_cast<int>(p.constraints.size()); ++i) {
        double v = p.constraints[i].eval(ph.x);
        if (v > 0.5 * ph.t_star)
          std::fprintf(stderr, "  viol %.3e  %s\n", v,
                       p.constraints[i].name.c_str());
      }
      double w0 = 0;
      int w0_row = -1;
      for (int i = 0; i < static_cast<int>(p.constraints.size()); ++i) {
        double v = p.constraints[i].eval(x0);
        if (v > w0) {
          w0 = v;
          w0_row = i;
        }
      }
      std::fprintf(stderr, "  warm-start max viol %.3e  %s\n", w0,
                   w0_row >= 0 ? p.constraints[w0_row].name.c_str() : "-");
    }
    PrimalSolution s = pack(r, p);
    s.status = SolveStatus::kInfeasible;
    return s;
  }
  if (ph.solved) {
    IpmResult r2 = run_ipm(p, clamp_into_bounds(p, ph.x), nullptr, opts);
    if (r2.status == SolveStatus::kOptimal ||
        r2.primal_violation + r2.kkt_residual <
            r.primal_violation + r.kkt_residual)
      return pack(r2, p);
  }
  return pack(r, p);
}

}  // namespace nafd
