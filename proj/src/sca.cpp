#include "nafd/sca.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <utility>
#include <vector>

#include "nafd/baselines.hpp"
#include "nafd/perfmodel.hpp"

namespace nafd {

namespace {

constexpr double kOmegaBarFloor = 1e-6;

// Active sets: whether an AP can transmit (resp. receive) at all under the
// scheme model. Inactive coordinates are compiled out of the subproblem so
// the interior-point solver never sees variables pinned to a zero-width box.
bool active_dl(const SchemeModel& model, int m) {
  return model.modes_free || model.fixed_a(m) > 0;
}
bool active_ul(const SchemeModel& model, int m) {
  return model.modes_free || model.fixed_b(m) > 0;
}

double mean_ue_count(int kd, int ku) {
  return std::max(1.0, 0.5 * (kd + ku));
}

// Merges repeated linear terms while a constraint is being assembled.
class LinAccum {
 public:
  explicit LinAccum(int n) : dense_(n, 0.0) {}
  void add(int var, double coef) {
    if (coef == 0.0) return;
    if (dense_[var] == 0.0) touched_.push_back(var);
    dense_[var] += coef;
  }
  std::vector<LinTerm> take() {
    std::vector<LinTerm> out;
    out.reserve(touched_.size());
    for (int j : touched_) {
      if (dense_[j] != 0.0) out.push_back({j, dense_[j]});
      dense_[j] = 0.0;
    }
    touched_.clear();
    return out;
  }

 private:
  std::vector<double> dense_;
  std::vector<int> touched_;
};

AffineExpr scaled(const AffineExpr& e, double s) {
  AffineExpr out;
  out.constant = e.constant * s;
  out.terms.reserve(e.terms.size());
  for (const auto& t : e.terms) out.terms.push_back({t.var, t.coef * s});
  return out;
}

AffineExpr plus(const AffineExpr& x, const AffineExpr& y, double sy) {
  AffineExpr out = x;
  out.constant += sy * y.constant;
  for (const auto& t : y.terms) out.terms.push_back({t.var, sy * t.coef});
  return out;
}

void add_affine(LinAccum* lin, double* cst, const AffineExpr& e, double s) {
  *cst += s * e.constant;
  for (const auto& t : e.terms) lin->add(t.var, s * t.coef);
}

// Quarter-square upper bound on w*x*y around (x0, y0):
//   xy <= 0.25[(x+y)^2 - 2(x0-y0)(x-y) + (x0-y0)^2], equality at (x0, y0).
void add_qs_upper(Constraint* con, LinAccum* lin, double* cst, double w,
                  const AffineExpr& x, const AffineExpr& y, double x0,
                  double y0) {
  double rw = std::sqrt(w);
  con->quad_rows.push_back(scaled(plus(x, y, 1.0), 0.5 * rw));
  double d = x0 - y0;
  add_affine(lin, cst, x, -0.5 * w * d);
  add_affine(lin, cst, y, 0.5 * w * d);
  *cst += 0.25 * w * d * d;
}

// Quarter-square upper bound on -w*x*y around (x0, y0):
//   -xy <= 0.25[(x-y)^2 - 2(x0+y0)(x+y) + (x0+y0)^2], equality at (x0, y0).
void add_qs_neg(Constraint* con, LinAccum* lin, double* cst, double w,
                const AffineExpr& x, const AffineExpr& y, double x0,
                double y0) {
  double rw = std::sqrt(w);
  con->quad_rows.push_back(scaled(plus(x, y, -1.0), 0.5 * rw));
  double s = x0 + y0;
  add_affine(lin, cst, x, -0.5 * w * s);
  add_affine(lin, cst, y, -0.5 * w * s);
  *cst += 0.25 * w * s * s;
}

AffineExpr var_expr(int j) { return AffineExpr{{{j, 1.0}}, 0.0}; }
AffineExpr const_expr(double c) { return AffineExpr{{}, c}; }

struct Builder {
  const SystemConfig& cfg;
  const LargeScaleChannels& ch;
  const PowerParams& pp;
  const SchemeModel& model;
  Objective obj;
  double lambda, phi;
  bool with_slacks;
  const LiftedPoint& at;

  ConvexQCQP prob;
  VarMap map;
  double power_ref = 1.0;

  void make_vars();
  AffineExpr b_expr(int m) const;
  double b_at(int m) const {
    return model.modes_free ? 1.0 - at.v.a(m) : model.fixed_b(m);
  }
  void finish(Constraint* con, LinAccum* lin, double cst,
              const std::string& name) {
    con->lin = lin->take();
    con->rhs = -cst;
    con->name = name;
    prob.constraints.push_back(std::move(*con));
    *con = Constraint{};
  }
  void dl_surrogate(LinAccum* lin);
  void ul_surrogate(LinAccum* lin);
  void power_rows(LinAccum* lin);
  void lifting_rows(LinAccum* lin);
  void qos_rows(LinAccum* lin);
  void ee_rows(LinAccum* lin);
  void objective_terms();
};

AffineExpr Builder::b_expr(int m) const {
  if (model.modes_free) return AffineExpr{{{map.a[m], -1.0}}, 1.0};
  return const_expr(model.fixed_b(m));
}

void Builder::make_vars() {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  map.M = m_aps;
  map.Kd = kd;
  map.Ku = ku;
  map.a.assign(m_aps, -1);
  map.q_dl.assign(kd, -1);
  map.q_ul.assign(ku, -1);
  map.theta.assign(m_aps * kd, -1);
  map.varsigma.assign(ku, -1);
  map.alpha.assign(m_aps * ku, -1);
  map.omega.assign(m_aps * ku, -1);
  map.omega_bar.assign(m_aps * ku, -1);
  map.omega_tilde.assign(m_aps * ku, -1);
  map.alpha_tilde.assign(m_aps * ku, -1);
  map.alpha_hat.assign(m_aps * ku, -1);
  map.eta_bar.assign(m_aps * kd, -1);
  map.omega_hat.assign(static_cast<size_t>(m_aps) * ku * ku, -1);
  map.slack_dl.assign(kd, -1);
  map.slack_ul.assign(ku, -1);

  auto name = [](const char* base, int i, int j = -1, int k = -1) {
    std::string s = base;
    s += "[" + std::to_string(i);
    if (j >= 0) s += "," + std::to_string(j);
    if (k >= 0) s += "," + std::to_string(k);
    return s + "]";
  };

  if (model.modes_free)
    for (int m = 0; m < m_aps; ++m)
      map.a[m] = prob.add_var(name("a", m), 0.0, 1.0);
  double qdl_lo = (!with_slacks && cfg.qos_dl > 0) ? cfg.qos_dl : 0.0;
  double qul_lo = (!with_slacks && cfg.qos_ul > 0) ? cfg.qos_ul : 0.0;
  for (int k = 0; k < kd; ++k)
    map.q_dl[k] = prob.add_var(name("q_dl", k), qdl_lo, kInf);
  for (int l = 0; l < ku; ++l)
    map.q_ul[l] = prob.add_var(name("q_ul", l), qul_lo, kInf);
  for (int m = 0; m < m_aps; ++m)
    if (active_dl(model, m))
      for (int k = 0; k < kd; ++k)
        map.theta[m * kd + k] = prob.add_var(name("theta", m, k), 0.0, 1.0);
  for (int l = 0; l < ku; ++l)
    map.varsigma[l] = prob.add_var(name("varsigma", l), 0.0, 1.0);
  for (int m = 0; m < m_aps; ++m)
    if (active_ul(model, m))
      for (int l = 0; l < ku; ++l) {
        map.alpha[m * ku + l] = prob.add_var(name("alpha", m, l), 0.0, 1.0);
      }
  for (int m = 0; m < m_aps; ++m)
    if (active_ul(model, m))
      for (int l = 0; l < ku; ++l) {
        map.omega[m * ku + l] = prob.add_var(name("omega", m, l), 0.0, 1.0);
        map.omega_bar[m * ku + l] =
            prob.add_var(name("omega_bar", m, l), 0.0, kInf);
        map.omega_tilde[m * ku + l] =
            prob.add_var(name("omega_tilde", m, l), 0.0, 1.0);
        map.alpha_tilde[m * ku + l] =
            prob.add_var(name("alpha_tilde", m, l), 0.0, 1.0);
        map.alpha_hat[m * ku + l] =
            prob.add_var(name("alpha_hat", m, l), 0.0, 1.0);
      }
  if (model.ap_cross())
    for (int m = 0; m < m_aps; ++m)
      if (active_dl(model, m))
        for (int k = 0; k < kd; ++k)
          map.eta_bar[m * kd + k] =
              prob.add_var(name("eta_bar", m, k), 0.0, 1.0);
  for (int m = 0; m < m_aps; ++m)
    if (active_ul(model, m))
      for (int l = 0; l < ku; ++l)
        for (int q = 0; q < ku; ++q)
          map.omega_hat[(m * ku + l) * ku + q] =
              prob.add_var(name("omega_hat", m, l, q), 0.0, kInf);
  if (with_slacks) {
    if (cfg.qos_dl > 0)
      for (int k = 0; k < kd; ++k)
        map.slack_dl[k] = prob.add_var(name("z_dl", k), 0.0, kInf);
    if (cfg.qos_ul > 0)
      for (int l = 0; l < ku; ++l)
        map.slack_ul[l] = prob.add_var(name("z_ul", l), 0.0, kInf);
  }
  if (obj == Objective::kEnergyEff) {
    map.t = prob.add_var("t", 0.0, kInf);
    map.p_hat = prob.add_var("p_hat", 0.0, kInf);
  }

  // Nondimensionalization: theta carries sqrt(N_dl*gamma), eta_bar carries
  // N_dl*gamma (so the per-AP power row reads sum theta'^2 <= 1), t is per
  // hertz, and p_hat is relative to a scheme-level power scale.
  map.scale.assign(prob.num_vars, 1.0);
  for (int m = 0; m < m_aps; ++m)
    for (int k = 0; k < kd; ++k) {
      int j = map.theta[m * kd + k];
      double g = model.dl_antennas * ch.gamma_dl(m, k);
      if (j >= 0 && g > 0) map.scale[j] = 1.0 / std::sqrt(g);
      int e = map.eta_bar[m * kd + k];
      if (e >= 0 && g > 0) map.scale[e] = 1.0 / g;
    }
  if (map.t >= 0) map.scale[map.t] = cfg.bandwidth_hz;
  if (map.p_hat >= 0) {
    power_ref = kd * pp.ue_fixed_dl_w + ku * pp.ue_fixed_ul_w +
                m_aps * (std::max(model.dl_antennas * pp.circuit_dl_w +
                                      pp.fixed_dl_w,
                                  model.ul_antennas * pp.circuit_ul_w +
                                      pp.fixed_ul_w) +
                         cfg.ap_power_w / pp.pa_eff_dl) +
                ku * cfg.ue_power_w / pp.pa_eff_ul + pp.si_cancel_w + 1e-9;
    map.scale[map.p_hat] = power_ref;
  }
}

void Builder::dl_surrogate(LinAccum* lin) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  const double rho_d = cfg.rho_dl();
  const double rho_u = cfg.rho_ul();
  const double pre = model.prelog;
  const double ln2 = std::log(2.0);
  for (int k = 0; k < kd; ++k) {
    // Expansion state in model units.
    double xi0 = 0, omega0 = 1.0;
    for (int m = 0; m < m_aps; ++m) {
      xi0 += at.v.theta(m, k) * ch.gamma_dl(m, k);
      for (int kp = 0; kp < kd; ++kp)
        omega0 += rho_d * model.dl_antennas * at.v.theta(m, kp) *
                  at.v.theta(m, kp) * ch.gamma_dl(m, kp) * ch.beta_dl(m, k);
    }
    xi0 *= model.dl_antennas * std::sqrt(rho_d);
    if (model.dl_ue_cross)
      for (int l = 0; l < ku; ++l)
        omega0 += rho_u * at.v.varsigma(l) * ch.beta_du(k, l);
    if (!std::isfinite(xi0) || !std::isfinite(omega0) || omega0 <= 0)
      throw ExpansionSingular("downlink SINR denominator at expansion");

    double x0 = xi0 / std::sqrt(omega0);  // normalized so y0 = 1
    Constraint con;
    double cst = 0;
    lin->add(map.q_dl[k], 1.0);
    cst -= (pre / ln2) * (std::log1p(x0 * x0) - x0 * x0);
    double kappa = (pre / ln2) * x0 * x0 / (x0 * x0 + 1.0);

    // x-part: single row for kappa * x^2 plus the -2*x0*x linear term.
    AffineExpr xrow;
    for (int m = 0; m < m_aps; ++m) {
      int j = map.theta[m * kd + k];
      if (j < 0) continue;
      double c = std::sqrt(model.dl_antennas * rho_d * ch.gamma_dl(m, k) /
                           omega0);
      xrow.terms.push_back({j, c});
      lin->add(j, -(pre / ln2) * 2.0 * x0 * c);
    }
    if (kappa > 0) {
      con.quad_rows.push_back(scaled(xrow, std::sqrt(kappa)));
      // y-part, scaled by 1/omega0.
      for (int m = 0; m < m_aps; ++m)
        for (int kp = 0; kp < kd; ++kp) {
          int j = map.theta[m * kd + kp];
          if (j < 0) continue;
          double w = kappa * rho_d * ch.beta_dl(m, k) / omega0;
          if (w > 0) con.quad_rows.push_back({{{j, std::sqrt(w)}}, 0.0});
        }
      if (model.dl_ue_cross)
        for (int l = 0; l < ku; ++l)
          lin->add(map.varsigma[l],
                   kappa * rho_u * ch.beta_du(k, l) / omega0);
      cst += kappa / omega0;  // unit noise term of the denominator
    }
    finish(&con, lin, cst, "se_dl[" + std::to_string(k) + "]");
  }
}

void Builder::ul_surrogate(LinAccum* lin) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  const double rho_d = cfg.rho_dl();
  const double rho_u = cfg.rho_ul();
  const double pre = model.prelog;
  const double ln2 = std::log(2.0);
  // AP-to-AP leakage weight after the theta/eta_bar rescaling.
  const double cross_w = model.ap_cross()
                             ? rho_d * model.ap_cross_antennas /
                                   model.dl_antennas
                             : 0.0;
  for (int l = 0; l < ku; ++l) {
    double psi0 = 0, phi0 = 0;
    for (int m = 0; m < m_aps; ++m) {
      if (!active_ul(model, m)) continue;
      double g = ch.gamma_ul(m, l);
      psi0 += at.omega_tilde(m, l) * g;
      for (int q = 0; q < ku; ++q) {
        double w = at.omega_hat[(m * ku + l) * ku + q];
        phi0 += rho_u * w * w * ch.beta_ul(m, q) * g;
      }
      if (cross_w > 0)
        for (int i = 0; i < m_aps; ++i) {
          double b_ap = (i == m) ? model.si_diag : ch.beta_ap(m, i);
          if (b_ap == 0.0 || !active_dl(model, i)) continue;
          double h0 = 0;
          for (int k = 0; k < kd; ++k)
            h0 += model.dl_antennas * ch.gamma_dl(i, k) * at.eta_bar(i, k);
          phi0 += cross_w * b_ap * g * at.alpha_hat(m, l) * h0;
        }
      phi0 += at.alpha_hat(m, l) * g;
    }
    psi0 *= std::sqrt(model.ul_antennas * rho_u);
    if (!std::isfinite(psi0) || !std::isfinite(phi0) || phi0 < 0)
      throw ExpansionSingular("uplink SINR denominator at expansion");

    Constraint con;
    double cst = 0;
    lin->add(map.q_ul[l], 1.0);
    if (phi0 == 0.0) {
      if (psi0 > 1e-300)
        throw ExpansionSingular("uplink signal without receive power");
      // No receiving AP contributes: the surrogate collapses to q <= 0.
      finish(&con, lin, cst, "se_ul[" + std::to_string(l) + "]");
      continue;
    }

    double x0 = psi0 / std::sqrt(phi0);
    cst -= (pre / ln2) * (std::log1p(x0 * x0) - x0 * x0);
    double kappa = (pre / ln2) * x0 * x0 / (x0 * x0 + 1.0);

    AffineExpr xrow;
    for (int m = 0; m < m_aps; ++m) {
      int j = map.ml(map.omega_tilde, m, l);
      if (j < 0) continue;
      double c = std::sqrt(model.ul_antennas * rho_u / phi0) *
                 ch.gamma_ul(m, l);
      xrow.terms.push_back({j, c});
      lin->add(j, -(pre / ln2) * 2.0 * x0 * c);
    }
    if (kappa > 0) {
      con.quad_rows.push_back(scaled(xrow, std::sqrt(kappa)));
      for (int m = 0; m < m_aps; ++m) {
        if (!active_ul(model, m)) continue;
        double g = ch.gamma_ul(m, l);
        for (int q = 0; q < ku; ++q) {
          double w = kappa * rho_u * ch.beta_ul(m, q) * g / phi0;
          int j = map.oh(m, l, q);
          if (w > 0) con.quad_rows.push_back({{{j, std::sqrt(w)}}, 0.0});
        }
        if (cross_w > 0) {
          int ja = map.ml(map.alpha_hat, m, l);
          for (int i = 0; i < m_aps; ++i) {
            double b_ap = (i == m) ? model.si_diag : ch.beta_ap(m, i);
            if (b_ap == 0.0 || !active_dl(model, i)) continue;
            double w = kappa * cross_w * b_ap * g / phi0;
            if (w <= 0) continue;
            // sum_k alpha_hat * eta_bar' enters through one aggregated
            // quarter-square bound per (m, i) pair.
            AffineExpr h;
            double h0 = 0;
            for (int k = 0; k < kd; ++k) {
              int je = map.eta_bar[i * kd + k];
              if (je >= 0) h.terms.push_back({je, 1.0});
              h0 += model.dl_antennas * ch.gamma_dl(i, k) * at.eta_bar(i, k);
            }
            add_qs_upper(&con, lin, &cst, w, var_expr(ja), h,
                         at.alpha_hat(m, l), h0);
          }
        }
        lin->add(map.ml(map.alpha_hat, m, l), kappa * g / phi0);
      }
    }
    finish(&con, lin, cst, "se_ul[" + std::to_string(l) + "]");
  }
}

void Builder::power_rows(LinAccum* lin) {
  const int kd = cfg.num_dl_ues;
  for (int m = 0; m < cfg.num_aps; ++m) {
    if (!active_dl(model, m) || kd == 0) continue;
    Constraint con;
    for (int k = 0; k < kd; ++k) {
      int j = map.theta[m * kd + k];
      if (j >= 0) con.quad_rows.push_back({{{j, 1.0}}, 0.0});
    }
    double cst = -1.0;  // sum theta'^2 <= 1
    finish(&con, lin, cst, "power[" + std::to_string(m) + "]");
  }
  if (model.modes_free)
    for (int m = 0; m < cfg.num_aps; ++m)
      for (int k = 0; k < kd; ++k) {
        Constraint con;
        con.quad_rows.push_back({{{map.theta[m * kd + k], 1.0}}, 0.0});
        lin->add(map.a[m], -1.0);
        finish(&con, lin, 0.0,
               "couple[" + std::to_string(m) + "," + std::to_string(k) + "]");
      }
}

void Builder::lifting_rows(LinAccum* lin) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  auto nm = [](const char* base, int m, int l, int q = -1) {
    std::string s = base;
    s += "[" + std::to_string(m) + "," + std::to_string(l);
    if (q >= 0) s += "," + std::to_string(q);
    return s + "]";
  };
  if (model.ap_cross())
    for (int i = 0; i < m_aps; ++i)
      for (int k = 0; k < kd; ++k) {
        int je = map.eta_bar[i * kd + k];
        if (je < 0) continue;
        Constraint con;
        con.quad_rows.push_back({{{map.theta[i * kd + k], 1.0}}, 0.0});
        lin->add(je, -1.0);
        finish(&con, lin, 0.0, nm("eta_bar", i, k));
      }
  for (int m = 0; m < m_aps; ++m) {
    if (!active_ul(model, m)) continue;
    AffineExpr b = b_expr(m);
    double b0 = b_at(m);
    for (int l = 0; l < ku; ++l) {
      int jw = map.ml(map.omega, m, l);
      int jwb = map.ml(map.omega_bar, m, l);
      int jwt = map.ml(map.omega_tilde, m, l);
      int jat = map.ml(map.alpha_tilde, m, l);
      int jah = map.ml(map.alpha_hat, m, l);
      int jal = map.ml(map.alpha, m, l);
      int js = map.varsigma[l];

      {  // omega^2 <= b * varsigma
        Constraint con;
        double cst = 0;
        con.quad_rows.push_back({{{jw, 1.0}}, 0.0});
        if (model.modes_free)
          add_qs_neg(&con, lin, &cst, 1.0, b, var_expr(js), b0,
                     at.v.varsigma(l));
        else
          lin->add(js, -b.constant);
        finish(&con, lin, cst, nm("omega", m, l));
      }
      {  // b * varsigma <= omega_bar^2, linearized on the omega_bar side
        Constraint con;
        double cst = 0;
        double wb0 = std::max(at.omega_bar(m, l), kOmegaBarFloor);
        if (model.modes_free)
          add_qs_upper(&con, lin, &cst, 1.0, b, var_expr(js), b0,
                       at.v.varsigma(l));
        else
          lin->add(js, b.constant);
        lin->add(jwb, -2.0 * wb0);
        cst += wb0 * wb0;
        finish(&con, lin, cst, nm("omega_bar", m, l));
      }
      {  // omega_tilde <= omega * alpha
        Constraint con;
        double cst = 0;
        lin->add(jwt, 1.0);
        add_qs_neg(&con, lin, &cst, 1.0, var_expr(jw), var_expr(jal),
                   at.omega(m, l), at.v.alpha(m, l));
        finish(&con, lin, cst, nm("omega_tilde", m, l));
      }
      {  // alpha^2 <= alpha_tilde (exact convex)
        Constraint con;
        con.quad_rows.push_back({{{jal, 1.0}}, 0.0});
        lin->add(jat, -1.0);
        finish(&con, lin, 0.0, nm("alpha_tilde", m, l));
      }
      {  // b * alpha_tilde <= alpha_hat
        Constraint con;
        double cst = 0;
        if (model.modes_free)
          add_qs_upper(&con, lin, &cst, 1.0, b, var_expr(jat), b0,
                       at.alpha_tilde(m, l));
        else
          lin->add(jat, b.constant);
        lin->add(jah, -1.0);
        finish(&con, lin, cst, nm("alpha_hat", m, l));
      }
      for (int q = 0; q < ku; ++q) {  // omega_bar(m,q) * alpha <= omega_hat
        Constraint con;
        double cst = 0;
        int jbq = map.ml(map.omega_bar, m, q);
        add_qs_upper(&con, lin, &cst, 1.0, var_expr(jbq), var_expr(jal),
                     std::max(at.omega_bar(m, q), kOmegaBarFloor),
                     at.v.alpha(m, l));
        lin->add(map.oh(m, l, q), -1.0);
        finish(&con, lin, cst, nm("omega_hat", m, l, q));
      }
    }
  }
}

void Builder::qos_rows(LinAccum* lin) {
  if (!with_slacks) return;
  if (cfg.qos_dl > 0)
    for (int k = 0; k < cfg.num_dl_ues; ++k) {
      Constraint con;
      lin->add(map.q_dl[k], -1.0);
      lin->add(map.slack_dl[k], -1.0);
      finish(&con, lin, cfg.qos_dl, "qos_dl[" + std::to_string(k) + "]");
    }
  if (cfg.qos_ul > 0)
    for (int l = 0; l < cfg.num_ul_ues; ++l) {
      Constraint con;
      lin->add(map.q_ul[l], -1.0);
      lin->add(map.slack_ul[l], -1.0);
      finish(&con, lin, cfg.qos_ul, "qos_ul[" + std::to_string(l) + "]");
    }
}

void Builder::ee_rows(LinAccum* lin) {
  if (obj != Objective::kEnergyEff) return;
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  {  // t' * p_hat' <= sum q, quarter-square convexified
    Constraint con;
    double cst = 0;
    double t0 = at.t / cfg.bandwidth_hz;
    double p0 = at.p_hat / power_ref;
    add_qs_upper(&con, lin, &cst, 1.0, var_expr(map.t), var_expr(map.p_hat),
                 t0, p0);
    for (int k = 0; k < kd; ++k) lin->add(map.q_dl[k], -1.0);
    for (int l = 0; l < ku; ++l) lin->add(map.q_ul[l], -1.0);
    finish(&con, lin, cst, "rate_power");
  }
  {  // p_hat' >= rate-independent power (normalized by power_ref)
    Constraint con;
    double cst = 0;
    const double half = model.half_power ? 0.5 : 1.0;
    double wtx = half * cfg.ap_power_w / pp.pa_eff_dl / power_ref;
    for (int m = 0; m < m_aps; ++m)
      for (int k = 0; k < kd; ++k) {
        int j = map.theta[m * kd + k];
        if (j >= 0) con.quad_rows.push_back({{{j, std::sqrt(wtx)}}, 0.0});
      }
    double wue = half * cfg.ue_power_w / pp.pa_eff_ul / power_ref;
    for (int l = 0; l < ku; ++l) lin->add(map.varsigma[l], wue);
    cst += half * (kd * pp.ue_fixed_dl_w + ku * pp.ue_fixed_ul_w) / power_ref;
    for (int m = 0; m < m_aps; ++m) {
      double dl_w = model.dl_antennas * pp.circuit_dl_w + pp.fixed_dl_w;
      double ul_w = model.ul_antennas * pp.circuit_ul_w + pp.fixed_ul_w;
      if (model.modes_free) {
        cst += half * ul_w / power_ref;
        lin->add(map.a[m], half * (dl_w - ul_w) / power_ref);
      } else {
        cst += half *
               (model.fixed_a(m) * dl_w + model.fixed_b(m) * ul_w) /
               power_ref;
      }
    }
    if (model.scheme == Scheme::kFd)
      cst += m_aps * model.ul_antennas * pp.si_cancel_w / power_ref;
    lin->add(map.p_hat, -1.0);
    finish(&con, lin, cst, "power_bound");
  }
}

void Builder::objective_terms() {
  if (obj == Objective::kSumSe) {
    for (int j : map.q_dl) prob.obj_lin[j] = -1.0;
    for (int j : map.q_ul) prob.obj_lin[j] = -1.0;
  } else {
    prob.obj_lin[map.t] = -1.0;
  }
  if (model.modes_free) {
    // Linear majorant of the concave penalty 2*sum a(1-a) at the expansion.
    for (int m = 0; m < cfg.num_aps; ++m) {
      double a0 = at.v.a(m);
      prob.obj_lin[map.a[m]] += lambda * 2.0 * (1.0 - 2.0 * a0);
      prob.obj_const += lambda * 2.0 * a0 * a0;
    }
  }
  for (int j : map.slack_dl)
    if (j >= 0) prob.obj_lin[j] = phi;
  for (int j : map.slack_ul)
    if (j >= 0) prob.obj_lin[j] = phi;
}

}  // namespace

std::pair<ConvexQCQP, VarMap> convexify_at(
    const SystemConfig& cfg, const LargeScaleChannels& ch,
    const PowerParams& pp, const SchemeModel& model, Objective obj,
    double lambda, double phi, bool with_slacks, const LiftedPoint& at) {
  Builder b{cfg, ch, pp, model, obj, lambda, phi, with_slacks, at, {}, {}};
  b.make_vars();
  LinAccum lin(b.prob.num_vars);
  b.dl_surrogate(&lin);
  b.ul_surrogate(&lin);
  b.power_rows(&lin);
  b.lifting_rows(&lin);
  b.qos_rows(&lin);
  b.ee_rows(&lin);
  b.objective_terms();
  return {std::move(b.prob), std::move(b.map)};
}

Eigen::VectorXd flatten(const LiftedPoint& p, const VarMap& map) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(map.scale.size());
  auto put = [&](int j, double v) {
    if (j >= 0) x(j) = v / map.scale[j];
  };
  for (int m = 0; m < map.M; ++m) {
    if (!map.a.empty()) put(map.a[m], p.v.a(m));
    for (int k = 0; k < map.Kd; ++k) {
      put(map.theta[m * map.Kd + k], p.v.theta(m, k));
      put(map.eta_bar[m * map.Kd + k], p.eta_bar(m, k));
    }
    for (int l = 0; l < map.Ku; ++l) {
      put(map.ml(map.alpha, m, l), p.v.alpha(m, l));
      put(map.ml(map.omega, m, l), p.omega(m, l));
      put(map.ml(map.omega_bar, m, l),
          std::max(p.omega_bar(m, l), kOmegaBarFloor));
      put(map.ml(map.omega_tilde, m, l), p.omega_tilde(m, l));
      put(map.ml(map.alpha_tilde, m, l), p.alpha_tilde(m, l));
      put(map.ml(map.alpha_hat, m, l), p.alpha_hat(m, l));
      for (int q = 0; q < map.Ku; ++q)
        put(map.oh(m, l, q), p.omega_hat[(m * map.Ku + l) * map.Ku + q]);
    }
  }
  for (int k = 0; k < map.Kd; ++k) {
    put(map.q_dl[k], p.q_dl(k));
    put(map.slack_dl[k], p.slack_dl(k));
  }
  for (int l = 0; l < map.Ku; ++l) {
    put(map.q_ul[l], p.q_ul(l));
    put(map.varsigma[l], p.v.varsigma(l));
    put(map.slack_ul[l], p.slack_ul(l));
  }
  put(map.t, p.t);
  put(map.p_hat, p.p_hat);
  return x;
}

LiftedPoint unflatten(const Eigen::VectorXd& x, const VarMap& map,
                      const SystemConfig& cfg, const LargeScaleChannels& ch,
                      const SchemeModel& model, const LiftedPoint& ref) {
  LiftedPoint p = ref;
  auto get = [&](int j, double fallback) {
    return j >= 0 ? x(j) * map.scale[j] : fallback;
  };
  for (int m = 0; m < map.M; ++m) {
    if (model.modes_free) {
      p.v.a(m) = get(map.a[m], ref.v.a(m));
      p.v.b(m) = 1.0 - p.v.a(m);
    } else {
      p.v.a(m) = model.fixed_a(m);
      p.v.b(m) = model.fixed_b(m);
    }
    for (int k = 0; k < map.Kd; ++k) {
      p.v.theta(m, k) = get(map.theta[m * map.Kd + k], 0.0);
      p.eta_bar(m, k) = get(map.eta_bar[m * map.Kd + k],
                            p.v.theta(m, k) * p.v.theta(m, k));
    }
    for (int l = 0; l < map.Ku; ++l) {
      p.v.alpha(m, l) = get(map.ml(map.alpha, m, l), 0.0);
      p.omega(m, l) = get(map.ml(map.omega, m, l), 0.0);
      p.omega_bar(m, l) =
          std::max(get(map.ml(map.omega_bar, m, l), 0.0),
                   map.ml(map.omega_bar, m, l) >= 0 ? kOmegaBarFloor : 0.0);
      p.omega_tilde(m, l) = get(map.ml(map.omega_tilde, m, l), 0.0);
      p.alpha_tilde(m, l) = get(map.ml(map.alpha_tilde, m, l), 0.0);
      p.alpha_hat(m, l) = get(map.ml(map.alpha_hat, m, l), 0.0);
    }
  }
  for (int m = 0; m < map.M; ++m)
    for (int l = 0; l < map.Ku; ++l)
      for (int q = 0; q < map.Ku; ++q) {
        double lo = p.omega_bar(m, q) * p.v.alpha(m, l);
        double v = get(map.oh(m, l, q), lo);
        p.omega_hat[(m * map.Ku + l) * map.Ku + q] = std::max(v, lo);
      }
  for (size_t idx = 0, m = 0; m < static_cast<size_t>(map.M); ++m)
    for (size_t i = 0; i < static_cast<size_t>(map.M); ++i)
      for (int l = 0; l < map.Ku; ++l)
        for (int k = 0; k < map.Kd; ++k, ++idx)
          p.eta_hat[idx] = p.alpha_hat(static_cast<int>(m), l) *
                           p.eta_bar(static_cast<int>(i), k);
  for (int k = 0; k < map.Kd; ++k) {
    p.q_dl(k) = get(map.q_dl[k], 0.0);
    p.slack_dl(k) = get(map.slack_dl[k], 0.0);
  }
  for (int l = 0; l < map.Ku; ++l) {
    p.q_ul(l) = get(map.q_ul[l], 0.0);
    p.v.varsigma(l) = get(map.varsigma[l], ref.v.varsigma(l));
    p.slack_ul(l) = get(map.slack_ul[l], 0.0);
  }
  p.t = get(map.t, ref.t);
  p.p_hat = get(map.p_hat, ref.p_hat);
  return p;
}

double merit_value(const SystemConfig& cfg, Objective obj, double lambda,
                   double phi, const LiftedPoint& p) {
  double v = obj == Objective::kSumSe ? -(p.q_dl.sum() + p.q_ul.sum())
                                      : -p.t / cfg.bandwidth_hz;
  v += lambda * penalty_value(p.v);
  v += phi * (p.slack_dl.sum() + p.slack_ul.sum());
  return v;
}

Eigen::VectorXd round_modes(const LargeScaleChannels& ch,
                            const Eigen::VectorXd& a_relaxed) {
  Eigen::VectorXd a(a_relaxed.size());
  for (int m = 0; m < a_relaxed.size(); ++m) {
    if (a_relaxed(m) > 0.5) {
      a(m) = 1.0;
    } else if (a_relaxed(m) < 0.5) {
      a(m) = 0.0;
    } else {
      double best_dl = ch.gamma_dl.cols() > 0 ? ch.gamma_dl.row(m).maxCoeff()
                                              : -1.0;
      double best_ul = ch.gamma_ul.cols() > 0 ? ch.gamma_ul.row(m).maxCoeff()
                                              : -1.0;
      a(m) = best_dl > best_ul ? 1.0 : 0.0;
    }
  }
  return a;
}

namespace {

double slack_total(const LiftedPoint& p) {
  return p.slack_dl.sum() + p.slack_ul.sum();
}

// Recomputes auxiliaries, epigraph values, and slacks from the design
// variables, with every lifting tight (up to the omega_bar floor).
void complete_point(const SystemConfig& cfg, const LargeScaleChannels& ch,
                    const SchemeModel& model, const PowerParams& pp,
                    LiftedPoint* p) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  for (int m = 0; m < m_aps; ++m) {
    for (int l = 0; l < ku; ++l) {
      double root = std::sqrt(std::max(0.0, p->v.b(m) * p->v.varsigma(l)));
      p->omega(m, l) = root;
      p->omega_bar(m, l) =
          active_ul(model, m) ? std::max(root, kOmegaBarFloor) : root;
      p->omega_tilde(m, l) = p->omega(m, l) * p->v.alpha(m, l);
      p->alpha_tilde(m, l) = p->v.alpha(m, l) * p->v.alpha(m, l);
      p->alpha_hat(m, l) = p->v.b(m) * p->alpha_tilde(m, l);
    }
    for (int k = 0; k < kd; ++k)
      p->eta_bar(m, k) = p->v.theta(m, k) * p->v.theta(m, k);
  }
  for (int m = 0; m < m_aps; ++m)
    for (int l = 0; l < ku; ++l)
      for (int q = 0; q < ku; ++q)
        p->omega_hat[(m * ku + l) * ku + q] =
            p->omega_bar(m, q) * p->v.alpha(m, l);
  size_t idx = 0;
  for (int m = 0; m < m_aps; ++m)
    for (int i = 0; i < m_aps; ++i)
      for (int l = 0; l < ku; ++l)
        for (int k = 0; k < kd; ++k, ++idx)
          p->eta_hat[idx] = p->alpha_hat(m, l) * p->eta_bar(i, k);
  p->q_dl = model_se_dl(cfg, ch, model, p->v);
  p->q_ul = model_se_ul(cfg, ch, model, p->v);
  for (int k = 0; k < kd; ++k)
    p->slack_dl(k) = std::max(0.0, cfg.qos_dl - p->q_dl(k));
  for (int l = 0; l < ku; ++l)
    p->slack_ul(l) = std::max(0.0, cfg.qos_ul - p->q_ul(l));
  p->p_hat = rate_independent_power(cfg, ch, model, pp, *p);
  p->t = p->p_hat > 0 ? cfg.bandwidth_hz * (p->q_dl.sum() + p->q_ul.sum()) /
                            p->p_hat
                      : 0.0;
}

// Expansion point pushed past the accepted iterate along the last accepted
// step. The plain successive-approximation map contracts slowly near its
// fixed point, so surrogates are rebuilt ahead of the iterate; merit
// checks always run on true candidate values, and a failed step falls back
// to the plain expansion.
LiftedPoint extrapolated_point(const SystemConfig& cfg,
                               const LargeScaleChannels& ch,
                               const SchemeModel& model, const PowerParams& pp,
                               const LiftedPoint& cur, const LiftedPoint& old,
                               double beta) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  LiftedPoint p = cur;
  auto push = [beta](double c, double o, double lo, double hi) {
    return std::clamp(c + beta * (c - o), lo, hi);
  };
  for (int m = 0; m < cfg.num_aps; ++m) {
    if (model.modes_free) {
      p.v.a(m) = push(cur.v.a(m), old.v.a(m), 0.0, 1.0);
      p.v.b(m) = 1.0 - p.v.a(m);
    }
    for (int k = 0; k < cfg.num_dl_ues; ++k)
      p.v.theta(m, k) = push(cur.v.theta(m, k), old.v.theta(m, k), 0.0, kInf);
    for (int l = 0; l < cfg.num_ul_ues; ++l)
      p.v.alpha(m, l) = push(cur.v.alpha(m, l), old.v.alpha(m, l), 0.0, kInf);
  }
  for (int l = 0; l < cfg.num_ul_ues; ++l)
    p.v.varsigma(l) = push(cur.v.varsigma(l), old.v.varsigma(l), 0.0, 1.0);
  complete_point(cfg, ch, model, pp, &p);
  return p;
}

// The uplink rate is exactly invariant to a per-user rescaling of the
// combining weights, so each accepted iterate is reduced to a canonical
// scale; otherwise the subproblems spend part of every step re-normalizing
// the weights instead of improving the objective.
void normalize_combining_gauge(const SystemConfig& cfg, LiftedPoint* p) {
  for (int l = 0; l < cfg.num_ul_ues; ++l) {
    double c = 0;
    for (int m = 0; m < cfg.num_aps; ++m) c = std::max(c, p->v.alpha(m, l));
    if (c > 0)
      for (int m = 0; m < cfg.num_aps; ++m) p->v.alpha(m, l) /= c;
  }
}

struct LoopStat {
  bool converged = false;
  bool stalled = false;
  int iters = 0;
  std::string last_status = "none";
};

void push_marker(std::vector<IterationRecord>* trace, const SystemConfig& cfg,
                 const LiftedPoint& pt, double merit,
                 const std::string& label) {
  IterationRecord rec;
  rec.iter = static_cast<int>(trace->size()) + 1;
  rec.objective = merit;
  rec.binary_violation =
      penalty_value(pt.v) /
      (cfg.num_aps * mean_ue_count(cfg.num_dl_ues, cfg.num_ul_ues));
  rec.slack_total = slack_total(pt);
  rec.status = label;
  trace->push_back(rec);
}

LoopStat sca_loop(const SystemConfig& cfg, const LargeScaleChannels& ch,
                  const PowerParams& pp, const SchemeModel& model,
                  Objective obj, double* lambda, double phi, bool with_slacks,
                  const ScaConfig& sca, LiftedPoint* pt,
                  std::vector<IterationRecord>* trace, int* escalations) {
  LoopStat st;
  double prev = merit_value(cfg, obj, *lambda, phi, *pt);
  Eigen::VectorXd warm_mult;
  SolveOptions opts;
  int nonopt = 0;
  int since_escalation = 0;
  const double kbar = mean_ue_count(cfg.num_dl_ues, cfg.num_ul_ues);
  LiftedPoint expand_at = *pt;
  bool extrapolated = false;
  int accepted_streak = 0;
  LiftedPoint anchor = *pt;
  int anchor_age = 0;
  double last_bv = penalty_value(pt->v) / (cfg.num_aps * kbar);
  // Extension trials must keep a strict service margin when slacks are off;
  // a trial sitting exactly on the boundary leaves the next subproblem with
  // an empty numerical interior.
  auto deployable = [&](const LiftedPoint& p) {
    if (with_slacks) return true;
    double margin = std::numeric_limits<double>::infinity();
    if (p.q_dl.size())
      margin = std::min(margin, (p.q_dl.array() - cfg.qos_dl).minCoeff());
    if (p.q_ul.size())
      margin = std::min(margin, (p.q_ul.array() - cfg.qos_ul).minCoeff());
    return margin >= 1e-7;
  };
  for (int it = 1; it <= sca.max_outer_iters; ++it) {
    st.iters = it;
    int nonopt_before = nonopt;
    auto [prob, map] = convexify_at(cfg, ch, pp, model, obj, *lambda, phi,
                                    with_slacks, expand_at);
    Eigen::VectorXd wx = flatten(expand_at, map);
    if (std::getenv("NAFD_SCA_CONSIST")) {
      double worst = 0;
      for (int m = 0; m < cfg.num_aps; ++m)
        for (int l = 0; l < cfg.num_ul_ues; ++l)
          for (int q = 0; q < cfg.num_ul_ues; ++q)
            worst = std::max(
                worst,
                std::abs(expand_at.omega_hat[(m * cfg.num_ul_ues + l) *
                                                 cfg.num_ul_ues +
                                             q] -
                         expand_at.omega_bar(m, q) * expand_at.v.alpha(m, l)));
      if (worst > 1e-9)
        std::fprintf(stderr,
                     "sca consist it=%d fixed=%d slacks=%d worst=%.3e\n", it,
                     model.modes_free ? 0 : 1, with_slacks ? 1 : 0, worst);
    }
    PrimalSolution sol =
        solve(prob, &wx, warm_mult.size() ? &warm_mult : nullptr, opts);
    st.last_status = to_string(sol.status);
    bool usable = sol.x.size() == prob.num_vars && sol.x.allFinite() &&
                  (sol.status == SolveStatus::kOptimal ||
                   sol.primal_violation <= 1e-5);
    nonopt = sol.status == SolveStatus::kOptimal ? 0 : nonopt + 1;
    if (sca.certify_subproblems && sol.status == SolveStatus::kOptimal) {
      CertifyReport rep = certify(prob, sol, opts);
      if (!rep.ok()) {
        st.last_status += "+certify_failed";
        nonopt += 1;
      }
    }
    bool improved = false;
    bool below_resolution = false;
    double cm = prev;
    LiftedPoint cand;
    if (usable) {
      cand = unflatten(sol.x, map, cfg, ch, model, expand_at);
      normalize_combining_gauge(cfg, &cand);
      // Re-tighten the liftings and epigraph values so the recorded merit is
      // the exact penalized objective of the iterate, never the surrogate's
      // conservative estimate of it.
      complete_point(cfg, ch, model, pp, &cand);
      cm = merit_value(cfg, obj, *lambda, phi, cand);
      double tol_abs = 1e-12 * std::max(1.0, std::abs(prev));
      if (cm <= prev + tol_abs) {
        improved = true;
      } else if (cm - prev <= 100.0 * opts.kkt_tol) {
        // Solver noise, not a descent direction: keep the old point and
        // treat the step as converged-at-resolution.
        below_resolution = true;
      } else {
        usable = false;
        nonopt = std::max(nonopt, 1);
      }
    }
    if (usable && improved) {
      // Greedily extend the accepted step along its own direction at exact
      // objective cost; the surrogate's conservative curvature otherwise
      // caps every step at a small fixed radius through shallow valleys.
      LiftedPoint base = cand;
      for (double beta : {1.0, 3.0, 7.0, 15.0, 31.0, 63.0}) {
        LiftedPoint trial =
            extrapolated_point(cfg, ch, model, pp, base, *pt, beta);
        if (!deployable(trial)) break;
        double tm = merit_value(cfg, obj, *lambda, phi, trial);
        if (tm >= cm) break;
        cm = tm;
        cand = trial;
      }
      if (std::getenv("NAFD_SCA_DEBUG") && model.modes_free) {
        std::string s;
        for (int mm = 0; mm < cfg.num_aps; ++mm)
          s += " " + std::to_string(cand.v.a(mm)).substr(0, 6);
        std::fprintf(stderr, "sca it %d a=[%s ]\n", it, s.c_str());
      }
      if (std::getenv("NAFD_SCA_DEBUG2")) {
        std::fprintf(stderr,
                     "sca it %3d cm=%+.8f |da|=%.2e |dth|=%.2e |dvs|=%.2e "
                     "|dal|=%.2e vs=%.4f althi=%.3e allo=%.3e\n",
                     it, cm, (cand.v.a - pt->v.a).norm(),
                     (cand.v.theta - pt->v.theta).norm() /
                         std::max(1.0, pt->v.theta.norm()),
                     (cand.v.varsigma - pt->v.varsigma).norm(),
                     (cand.v.alpha - pt->v.alpha).norm() /
                         std::max(1.0, pt->v.alpha.norm()),
                     cand.v.varsigma.size() ? cand.v.varsigma.minCoeff() : 0.0,
                     cand.v.alpha.size() ? cand.v.alpha.maxCoeff() : 0.0,
                     cand.v.alpha.size() ? cand.v.alpha.minCoeff() : 0.0);
      }
      IterationRecord rec;
      rec.iter = static_cast<int>(trace->size()) + 1;
      rec.objective = cm;
      rec.binary_violation = penalty_value(cand.v) / (cfg.num_aps * kbar);
      rec.slack_total = slack_total(cand);
      rec.status = st.last_status;
      trace->push_back(rec);
      LiftedPoint old = *pt;
      *pt = cand;
      warm_mult = sol.mult;
      ++accepted_streak;
      if (sca.momentum > 0) {
        // Ramp the extrapolation with the accepted streak; a failed step
        // resets the ramp, so aggressive expansion only persists while it
        // keeps producing accepted descent.
        double beta = std::min(sca.momentum,
                               accepted_streak / (accepted_streak + 3.0));
        expand_at = extrapolated_point(cfg, ch, model, pp, cand, old, beta);
        extrapolated = true;
      } else {
        expand_at = *pt;
        extrapolated = false;
      }
      ++anchor_age;
      if (anchor_age >= 5) {
        // Slow stretches move the iterate by a near-constant step each
        // round; probing multiples of the accumulated direction against the
        // exact objective collapses such valleys at closed-form cost.
        double best = cm;
        LiftedPoint bestp;
        bool took = false;
        for (double tmul : {1.0, 3.0, 7.0, 15.0, 31.0}) {
          LiftedPoint trial =
              extrapolated_point(cfg, ch, model, pp, *pt, anchor, tmul);
          if (!deployable(trial)) continue;
          double tm = merit_value(cfg, obj, *lambda, phi, trial);
          if (tm < best) {
            best = tm;
            bestp = trial;
            took = true;
          }
        }
        if (took) {
          *pt = bestp;
          cm = best;
          expand_at = *pt;
          extrapolated = false;
          push_marker(trace, cfg, *pt, cm, "secant_step");
        }
        anchor = *pt;
        anchor_age = 0;
      }
    } else if (extrapolated) {
      // Overshot expansion; retry from the accepted point before drawing
      // any convergence or stall conclusion from this step.
      expand_at = *pt;
      extrapolated = false;
      accepted_streak = 0;
      anchor = *pt;
      anchor_age = 0;
      nonopt = nonopt_before;
      push_marker(trace, cfg, *pt, prev, "momentum_reset");
      continue;
    } else {
      accepted_streak = 0;
      anchor = *pt;
      anchor_age = 0;
      push_marker(trace, cfg, *pt, prev,
                  st.last_status + (below_resolution ? "+resolution"
                                                     : "+rejected"));
    }
    bool conv = below_resolution ||
                (improved && std::abs(cm - prev) <
                                 sca.rel_obj_tol * std::max(1.0, std::abs(prev)));
    // Crawling toward a fractional point wastes the iteration budget (the
    // relaxed optimum need not be attained at a binary point), so while the
    // mean binary violation exceeds its tolerance the penalty escalates
    // whenever the objective or the violation itself stops making clear
    // progress, not only at full convergence.
    bool slow = improved && std::abs(cm - prev) <
                                10.0 * sca.rel_obj_tol *
                                    std::max(1.0, std::abs(prev));
    if (improved) prev = cm;
    ++since_escalation;
    double bv = penalty_value(pt->v) / (cfg.num_aps * kbar);
    bool gap_stalled = improved && bv > 0.5 * last_bv;
    last_bv = bv;
    bool want_escalation = model.modes_free && bv > sca.eps_binary &&
                           *escalations < sca.max_lambda_escalations;
    if ((conv || slow || gap_stalled || since_escalation >= 4) &&
        nonopt == 0 && want_escalation) {
      *lambda *= 2.0;
      ++*escalations;
      since_escalation = 0;
      prev = merit_value(cfg, obj, *lambda, phi, *pt);
      expand_at = *pt;
      extrapolated = false;
      accepted_streak = 0;
      anchor = *pt;
      anchor_age = 0;
      push_marker(trace, cfg, *pt, prev, "lambda_escalated");
      continue;
    }
    if (conv && nonopt == 0) {
      st.converged = true;
      break;
    }
    if (nonopt >= 2) {
      st.stalled = true;
      break;
    }
  }
  return st;
}

// Rounds the relaxed modes, rebuilds a consistent lifted point, and polishes
// the continuous variables with the modes pinned.
SchemeModel repair_modes(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const PowerParams& pp, const SchemeModel& model,
                         Objective obj, double* lambda, double phi,
                         bool use_slacks, const ScaConfig& sca,
                         LiftedPoint* pt, std::vector<IterationRecord>* trace,
                         int* escalations, std::string* note) {
  Eigen::VectorXd a_bin = round_modes(ch, pt->v.a);
  SchemeModel fixed = make_fixed_mode_model(cfg, ch, a_bin);
  fixed.scheme = model.scheme;
  pt->v.a = a_bin;
  pt->v.b = Eigen::VectorXd::Ones(a_bin.size()) - a_bin;
  for (int m = 0; m < cfg.num_aps; ++m) {
    if (a_bin(m) == 0.0)
      pt->v.theta.row(m).setZero();
    else
      for (int l = 0; l < cfg.num_ul_ues; ++l) pt->v.alpha(m, l) = 0.0;
  }
  complete_point(cfg, ch, fixed, pp, pt);
  push_marker(trace, cfg, *pt, merit_value(cfg, obj, *lambda, phi, *pt),
              "rounded");
  LoopStat st = sca_loop(cfg, ch, pp, fixed, obj, lambda, phi, use_slacks,
                         sca, pt, trace, escalations);
  if (st.stalled) *note += "stalled(repair);";

  // Feasibility restoration over modes. The relaxation can cover a QoS side
  // with vanishing mode shares that rounding then zeroes out, so the rounded
  // partition gets a deterministic single-flip hill climb: candidate flips
  // are ranked by the closed-form SEs at full-power heuristic controls (QoS
  // shortfall first, objective second), a short list is re-polished with the
  // modes pinned, and a move is kept only if the polished point wins.
  if (sca.restoration) {
    auto scored = [&](const SchemeModel& fm, const DesignVariables& hv) {
      Eigen::VectorXd sd = model_se_dl(cfg, ch, fm, hv);
      Eigen::VectorXd su = model_se_ul(cfg, ch, fm, hv);
      double shortfall = 0;
      for (int k = 0; k < cfg.num_dl_ues; ++k)
        shortfall += std::max(0.0, cfg.qos_dl - sd(k));
      for (int l = 0; l < cfg.num_ul_ues; ++l)
        shortfall += std::max(0.0, cfg.qos_ul - su(l));
      double sum = sd.sum() + su.sum();
      double value = sum;
      if (obj == Objective::kEnergyEff) {
        PowerBreakdown pb = power_nafd(cfg, ch, hv, pp, sd, su);
        value = energy_efficiency(cfg, sum, pb.total());
      }
      return std::pair<double, double>(shortfall, value);
    };
    auto score_of = [&](const Eigen::VectorXd& a_try) {
      SchemeModel fm = make_fixed_mode_model(cfg, ch, a_try);
      fm.scheme = model.scheme;
      Eigen::VectorXd b_try = Eigen::VectorXd::Ones(a_try.size()) - a_try;
      DesignVariables hv = fixed_controls(cfg, ch, a_try, b_try);
      // Combining weights alpha_ml = 1/psi_ml maximize the closed-form UL
      // SINR for these fixed powers, so the score ranks partitions by what
      // weighted combining can actually extract rather than by unit weights.
      Eigen::VectorXd tx = Eigen::VectorXd::Zero(cfg.num_aps);
      for (int i = 0; i < cfg.num_aps; ++i)
        for (int k = 0; k < cfg.num_dl_ues; ++k)
          tx(i) += hv.theta(i, k) * hv.theta(i, k) * ch.gamma_dl(i, k);
      for (int m = 0; m < cfg.num_aps; ++m) {
        double ue_int = 0;
        for (int q = 0; q < cfg.num_ul_ues; ++q)
          ue_int += hv.varsigma(q) * ch.beta_ul(m, q);
        double ap_int = 0;
        for (int i = 0; i < cfg.num_aps; ++i)
          if (i != m) ap_int += ch.beta_ap(m, i) * tx(i);
        double psi = cfg.rho_ul() * ue_int +
                     cfg.rho_dl() * cfg.antennas_per_ap * ap_int + 1.0;
        for (int l = 0; l < cfg.num_ul_ues; ++l)
          hv.alpha(m, l) = b_try(m) > 0 ? 1.0 / psi : 0.0;
      }
      return scored(fm, hv);
    };
    auto score_better = [](const std::pair<double, double>& s,
                           const std::pair<double, double>& t) {
      if (s.first < t.first - 1e-12) return true;
      if (s.first > t.first + 1e-12) return false;
      return s.second > t.second + 1e-9 * std::max(1.0, std::fabs(t.second));
    };

    struct Polished {
      SchemeModel model;
      LiftedPoint pt;
      std::vector<IterationRecord> records;
      std::pair<double, double> score{0, 0};
      bool stalled = false;
    };
    auto polish = [&](const Eigen::VectorXd& a_try) {
      Polished r;
      r.model = make_fixed_mode_model(cfg, ch, a_try);
      r.model.scheme = model.scheme;
      r.pt = initial_point(cfg, ch, r.model, pp, sca.seed);
      push_marker(&r.records, cfg, r.pt,
                  merit_value(cfg, obj, *lambda, phi, r.pt), "mode_flip");
      LoopStat stp = sca_loop(cfg, ch, pp, r.model, obj, lambda, phi,
                              use_slacks, sca, &r.pt, &r.records,
                              escalations);
      r.stalled = stp.stalled;
      // Score the deployable point: once the slacked pass reaches the QoS
      // region the slack-free pass decides the final value, and rankings at
      // the slacked stage can invert relative to it.
      if (use_slacks && slack_total(r.pt) <= sca.slack_threshold) {
        LoopStat stf = sca_loop(cfg, ch, pp, r.model, obj, lambda, phi,
                                /*with_slacks=*/false, sca, &r.pt, &r.records,
                                escalations);
        r.stalled = r.stalled || stf.stalled;
      }
      r.score = scored(r.model, r.pt.v);
      return r;
    };

    using Flip = std::pair<int, int>;  // second = -1 for a single flip
    auto apply_flip = [](Eigen::VectorXd a, const Flip& f) {
      a(f.first) = 1.0 - a(f.first);
      if (f.second >= 0) a(f.second) = 1.0 - a(f.second);
      return a;
    };
    const int kShortlist = 6;
    int budget =
        sca.max_repair_flips >= 0 ? sca.max_repair_flips : cfg.num_aps;
    Eigen::VectorXd a_cur = a_bin;
    auto cur = scored(fixed, pt->v);
    for (int round = 0; round < budget; ++round) {
      std::vector<std::pair<std::pair<double, double>, Flip>> ranked;
      for (int m = 0; m < cfg.num_aps; ++m)
        ranked.push_back(
            {score_of(apply_flip(a_cur, {m, -1})), Flip{m, -1}});
      for (int i = 0; i < cfg.num_aps; ++i)
        for (int j = i + 1; j < cfg.num_aps; ++j)
          ranked.push_back(
              {score_of(apply_flip(a_cur, {i, j})), Flip{i, j}});
      std::stable_sort(ranked.begin(), ranked.end(),
                       [&](const auto& s, const auto& t) {
                         return score_better(s.first, t.first);
                       });
      bool found = false;
      Flip best_f{-1, -1};
      Polished best;
      for (int c = 0; c < std::min<int>(kShortlist, ranked.size()); ++c) {
        Polished cand = polish(apply_flip(a_cur, ranked[c].second));
        if (score_better(cand.score, found ? best.score : cur)) {
          best = std::move(cand);
          best_f = ranked[c].second;
          found = true;
        }
      }
      if (!found) break;
      a_cur = apply_flip(a_cur, best_f);
      fixed = best.model;
      *pt = best.pt;
      cur = best.score;
      if (best.stalled) *note += "stalled(flip);";
      for (IterationRecord& rec : best.records) {
        rec.iter = static_cast<int>(trace->size()) + 1;
        trace->push_back(rec);
      }
    }
  }
  return fixed;
}

SchemeResult finalize(const SystemConfig& cfg, const LargeScaleChannels& ch,
                      const PowerParams& pp, const SchemeModel& model,
                      const ScaConfig& sca, LiftedPoint* pt,
                      bool accepted_by_slacks,
                      std::vector<IterationRecord> trace,
                      const std::string& note) {
  SchemeResult res = evaluate_scheme(model.scheme, cfg, ch, pt->v, pp);
  res.trace = std::move(trace);
  res.note = note;

  double shortfall = 0;
  for (int k = 0; k < cfg.num_dl_ues; ++k)
    shortfall += std::max(0.0, cfg.qos_dl - res.se_dl(k));
  for (int l = 0; l < cfg.num_ul_ues; ++l)
    shortfall += std::max(0.0, cfg.qos_ul - res.se_ul(l));
  res.feasible = accepted_by_slacks && shortfall <= sca.slack_threshold;

  PowerBreakdown full;
  switch (model.scheme) {
    case Scheme::kHd:
      full = power_hd(cfg, ch, pt->v, pp, res.se_dl, res.se_ul);
      break;
    case Scheme::kFd:
      full = power_fd(cfg, ch, pt->v, pp, res.se_dl, res.se_ul);
      break;
    default:
      full = power_nafd_full_backhaul(cfg, ch, pt->v, pp, res.se_dl,
                                      res.se_ul);
      break;
  }
  res.energy_eff_fullbh = energy_efficiency(cfg, res.sum_se, full.total());
  if (!res.feasible) {
    res.se_dl.setZero();
    res.se_ul.setZero();
    res.sum_se = 0;
    res.energy_eff = 0;
    res.energy_eff_fullbh = 0;
  }
  return res;
}

SchemeResult run_sca_from(const SystemConfig& cfg,
                          const LargeScaleChannels& ch, const PowerParams& pp,
                          const SchemeModel& model, Objective obj,
                          const ScaConfig& sca, LiftedPoint pt,
                          bool* stalled_out) {
  auto t_start = std::chrono::steady_clock::now();
  std::vector<IterationRecord> trace;
  bool use_slacks = sca.restoration && (cfg.qos_dl > 0 || cfg.qos_ul > 0);
  double lambda = sca.lambda;
  double phi = sca.phi > 0
                   ? sca.phi
                   : 100.0 * std::max(1, cfg.num_dl_ues + cfg.num_ul_ues);
  int escalations = 0;
  std::string note;

  LoopStat st = sca_loop(cfg, ch, pp, model, obj, &lambda, phi, use_slacks,
                         sca, &pt, &trace, &escalations);
  if (st.stalled) note = "stalled(relax);";
  if (stalled_out) *stalled_out = st.stalled;

  double gap = model.modes_free ? binary_gap(pt.v) : 0.0;
  SchemeModel final_model = model;
  if (model.modes_free)
    final_model = repair_modes(cfg, ch, pp, model, obj, &lambda, phi,
                               use_slacks, sca, &pt, &trace, &escalations,
                               &note);

  bool accepted = !use_slacks || slack_total(pt) <= sca.slack_threshold;
  if (use_slacks && accepted) {
    push_marker(&trace, cfg, pt, merit_value(cfg, obj, lambda, 0.0, pt),
                "slack_free");
    LoopStat st3 = sca_loop(cfg, ch, pp, final_model, obj, &lambda, phi,
                            /*with_slacks=*/false, sca, &pt, &trace,
                            &escalations);
    if (st3.stalled) note += "stalled(polish);";
  }
  if (!accepted) note += "qos_infeasible;";

  SchemeResult res =
      finalize(cfg, ch, pp, final_model, sca, &pt, accepted, std::move(trace),
               note);
  res.scheme = model.scheme;
  res.relax_iters = st.iters;
  res.relax_converged = st.converged;
  res.binary_gap = gap;
  res.rounding_flagged = model.modes_free && gap > sca.binary_gap_tol;
  res.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return res;
}

}  // namespace

SchemeResult run_sca(const SystemConfig& cfg, const LargeScaleChannels& ch,
                     const PowerParams& pp, const SchemeModel& model,
                     Objective obj, const ScaConfig& sca) {
  sca.validate();
  LiftedPoint pt = initial_point(cfg, ch, model, pp, sca.seed);
  return run_sca_from(cfg, ch, pp, model, obj, sca, std::move(pt), nullptr);
}

SchemeResult run_algorithm1(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const PowerParams& pp, const ScaConfig& sca,
                            const LiftedPoint& init) {
  sca.validate();
  SchemeModel model = make_scheme_model(Scheme::kNafd, cfg, ch);
  bool stalled = false;
  SchemeResult res = run_sca_from(cfg, ch, pp, model, Objective::kSumSe, sca,
                                  init, &stalled);
  if (stalled) throw Stalled("relaxation solver returned non-optimal twice");
  return res;
}

SchemeResult run_algorithm2(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const PowerParams& pp, const ScaConfig& sca,
                            const LiftedPoint& init) {
  sca.validate();
  SchemeModel model = make_scheme_model(Scheme::kNafd, cfg, ch);
  bool stalled = false;
  SchemeResult res = run_sca_from(cfg, ch, pp, model, Objective::kEnergyEff,
                                  sca, init, &stalled);
  if (stalled) throw Stalled("relaxation solver returned non-optimal twice");
  return res;
}

DesignVariables round_and_repair(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const PowerParams& pp, Objective obj,
                                 const ScaConfig& sca,
                                 const LiftedPoint& relaxed) {
  SchemeModel model = make_scheme_model(Scheme::kNafd, cfg, ch);
  LiftedPoint pt = relaxed;
  std::vector<IterationRecord> trace;
  double lambda = sca.lambda;
  double phi = sca.phi > 0
                   ? sca.phi
                   : 100.0 * std::max(1, cfg.num_dl_ues + cfg.num_ul_ues);
  int escalations = 0;
  std::string note;
  bool use_slacks = sca.restoration && (cfg.qos_dl > 0 || cfg.qos_ul > 0);
  repair_modes(cfg, ch, pp, model, obj, &lambda, phi, use_slacks, sca, &pt,
               &trace, &escalations, &note);
  return pt.v;
}

}  // namespace nafd
