#include "nafd/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "nafd/rng.hpp"

namespace nafd {

namespace {

using Cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

constexpr int kBatches = 20;

void fill_cnormal(Rng& rng, double var, CVec* out) {
  for (Eigen::Index i = 0; i < out->size(); ++i) (*out)(i) = rng.cnormal(var);
}

void fill_cnormal(Rng& rng, double var, CMat* out) {
  for (Eigen::Index j = 0; j < out->cols(); ++j)
    for (Eigen::Index i = 0; i < out->rows(); ++i)
      (*out)(i, j) = rng.cnormal(var);
}

// Accumulates the moments the bound needs: the desired coefficient's mean
// and second moment plus the total interference power, per batch.
struct MomentAccum {
  Cplx ds_sum{0, 0};
  double ds_sq = 0;
  double intf = 0;  // everything except noise and desired
  long n = 0;

  void add(Cplx ds, double interference) {
    ds_sum += ds;
    ds_sq += std::norm(ds);
    intf += interference;
    ++n;
  }
  void merge(const MomentAccum& o) {
    ds_sum += o.ds_sum;
    ds_sq += o.ds_sq;
    intf += o.intf;
    n += o.n;
  }
  // noise_power: the constant effective-noise term of the bound.
  double se(double prelog, double noise_power) const {
    if (n < 2) return 0;
    Cplx mean = ds_sum / static_cast<double>(n);
    double var = std::max(
        0.0, (ds_sq - static_cast<double>(n) * std::norm(mean)) / (n - 1.0));
    double num = std::norm(mean) - var / static_cast<double>(n);
    double den = var + intf / static_cast<double>(n) + noise_power;
    if (num <= 0 || den <= 0) return 0;
    return prelog * std::log2(1.0 + num / den);
  }
};

McEstimate finish(const MomentAccum batches[kBatches], double prelog,
                  double noise_power) {
  MomentAccum pooled;
  double batch_se[kBatches];
  for (int b = 0; b < kBatches; ++b) {
    batch_se[b] = batches[b].se(prelog, noise_power);
    pooled.merge(batches[b]);
  }
  McEstimate est;
  est.se = pooled.se(prelog, noise_power);
  double mean = 0;
  for (double s : batch_se) mean += s;
  mean /= kBatches;
  double var = 0;
  for (double s : batch_se) var += (s - mean) * (s - mean);
  var /= (kBatches - 1);
  est.half_width = 3.0 * std::sqrt(var / kBatches);
  return est;
}

}  // namespace

std::vector<McEstimate> mc_dl_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v,
                                 const SchemeModel& model, long n_samples,
                                 std::uint64_t seed) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  const int nt = static_cast<int>(model.dl_antennas);
  const double sqrt_rho_d = std::sqrt(cfg.rho_dl());
  const double rho_u = cfg.rho_ul();
  Rng rng(derive_seed(seed, 0x646c6d63));

  std::vector<int> tx_aps;  // APs whose precoder carries any power
  for (int m = 0; m < m_aps; ++m)
    if (v.theta.row(m).cwiseAbs().maxCoeff() > 0) tx_aps.push_back(m);

  std::vector<std::vector<MomentAccum>> acc(
      kd, std::vector<MomentAccum>(kBatches));
  const long per_batch = std::max<long>(1, n_samples / kBatches);

  std::vector<CVec> ghat(tx_aps.size() * kd, CVec(nt));
  std::vector<CVec> g(tx_aps.size() * kd, CVec(nt));
  CVec err(nt);

  for (long s = 0; s < n_samples; ++s) {
    int batch = std::min<long>(kBatches - 1, s / per_batch);
    for (std::size_t t = 0; t < tx_aps.size(); ++t) {
      int m = tx_aps[t];
      for (int k = 0; k < kd; ++k) {
        double gm = ch.gamma_dl(m, k);
        double be = ch.beta_dl(m, k);
        fill_cnormal(rng, gm, &ghat[t * kd + k]);
        fill_cnormal(rng, std::max(0.0, be - gm), &err);
        g[t * kd + k] = ghat[t * kd + k] + err;
      }
    }
    for (int k = 0; k < kd; ++k) {
      Cplx ds{0, 0};
      double intf = 0;
      for (int kp = 0; kp < kd; ++kp) {
        Cplx sum{0, 0};
        for (std::size_t t = 0; t < tx_aps.size(); ++t) {
          int m = tx_aps[t];
          // (g_mk)^T (ghat_mkp)^* : the precoder for UE kp seen by UE k.
          sum += v.theta(m, kp) * ghat[t * kd + kp].dot(g[t * kd + k]);
        }
        if (kp == k)
          ds = sqrt_rho_d * sum;
        else
          intf += cfg.rho_dl() * std::norm(sum);
      }
      if (model.dl_ue_cross) {
        for (int l = 0; l < ku; ++l) {
          Cplx h = rng.cnormal(1.0);
          intf += rho_u * v.varsigma(l) * ch.beta_du(k, l) * std::norm(h);
        }
      }
      acc[k][batch].add(ds, intf);
    }
  }

  std::vector<McEstimate> out(kd);
  for (int k = 0; k < kd; ++k)
    out[k] = finish(acc[k].data(), model.prelog, 1.0);
  return out;
}

std::vector<McEstimate> mc_ul_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v,
                                 const SchemeModel& model, long n_samples,
                                 std::uint64_t seed) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  const int nr = static_cast<int>(model.ul_antennas);
  const int nt = static_cast<int>(model.dl_antennas);
  const double rho_d = cfg.rho_dl();
  const double rho_u = cfg.rho_ul();
  Rng rng(derive_seed(seed, 0x756c6d63));

  const Eigen::VectorXd& mode = model.modes_free ? v.b : model.fixed_b;

  std::vector<int> rx_aps;
  for (int m = 0; m < m_aps; ++m)
    if (mode(m) > 0 && v.alpha.row(m).cwiseAbs().maxCoeff() > 0)
      rx_aps.push_back(m);
  std::vector<int> tx_aps;
  for (int m = 0; m < m_aps; ++m)
    if (v.theta.row(m).cwiseAbs().maxCoeff() > 0) tx_aps.push_back(m);

  const bool cross = model.ap_cross();

  std::vector<std::vector<MomentAccum>> acc(
      ku, std::vector<MomentAccum>(kBatches));
  const long per_batch = std::max<long>(1, n_samples / kBatches);

  std::vector<CVec> ghat(rx_aps.size() * ku, CVec(nr));
  std::vector<CVec> g(rx_aps.size() * ku, CVec(nr));
  std::vector<CVec> noise(rx_aps.size(), CVec(nr));
  std::vector<CVec> ghat_dl(cross ? tx_aps.size() * kd : 0, CVec(nt));
  std::vector<CMat> zr(cross ? rx_aps.size() * tx_aps.size() : 0,
                       CMat(nr, nt));
  CVec err(nr);

  for (long s = 0; s < n_samples; ++s) {
    int batch = std::min<long>(kBatches - 1, s / per_batch);
    for (std::size_t r = 0; r < rx_aps.size(); ++r) {
      int m = rx_aps[r];
      for (int q = 0; q < ku; ++q) {
        double gm = ch.gamma_ul(m, q);
        double be = ch.beta_ul(m, q);
        fill_cnormal(rng, gm, &ghat[r * ku + q]);
        fill_cnormal(rng, std::max(0.0, be - gm), &err);
        g[r * ku + q] = ghat[r * ku + q] + err;
      }
      fill_cnormal(rng, 1.0, &noise[r]);
    }
    if (cross) {
      for (std::size_t t = 0; t < tx_aps.size(); ++t) {
        int i = tx_aps[t];
        for (int k = 0; k < kd; ++k)
          fill_cnormal(rng, ch.gamma_dl(i, k), &ghat_dl[t * kd + k]);
      }
      for (std::size_t r = 0; r < rx_aps.size(); ++r) {
        int m = rx_aps[r];
        for (std::size_t t = 0; t < tx_aps.size(); ++t) {
          int i = tx_aps[t];
          double var = (i == m) ? model.si_diag : ch.beta_ap(m, i);
          if (var > 0)
            fill_cnormal(rng, var, &zr[r * tx_aps.size() + t]);
          else
            zr[r * tx_aps.size() + t].setZero();
        }
      }
    }
    for (int l = 0; l < ku; ++l) {
      Cplx ds{0, 0};
      double intf = 0;
      Cplx w_noise{0, 0};
      std::vector<CVec> comb;  // weighted combiner per receive AP
      comb.reserve(rx_aps.size());
      for (std::size_t r = 0; r < rx_aps.size(); ++r) {
        int m = rx_aps[r];
        double w = std::sqrt(mode(m)) * v.alpha(m, l);
        comb.push_back(w * ghat[r * ku + l]);
        w_noise += comb[r].dot(noise[r]);
      }
      for (int q = 0; q < ku; ++q) {
        Cplx sum{0, 0};
        for (std::size_t r = 0; r < rx_aps.size(); ++r)
          sum += comb[r].dot(g[r * ku + q]);
        if (q == l)
          ds = std::sqrt(rho_u * v.varsigma(l)) * sum;
        else
          intf += rho_u * v.varsigma(q) * std::norm(sum);
      }
      if (cross) {
        // The DL symbol stream is common to every transmit AP, so per
        // stream the leakage adds coherently across (m, i) pairs.
        for (int k = 0; k < kd; ++k) {
          Cplx sum{0, 0};
          for (std::size_t r = 0; r < rx_aps.size(); ++r)
            for (std::size_t t = 0; t < tx_aps.size(); ++t) {
              int i = tx_aps[t];
              const CMat& z = zr[r * tx_aps.size() + t];
              if (z.size() == 0) continue;
              sum += v.theta(i, k) *
                     comb[r].dot(z * ghat_dl[t * kd + k].conjugate());
            }
          intf += rho_d * std::norm(sum);
        }
      }
      intf += std::norm(w_noise);
      acc[l][batch].add(ds, intf);
    }
  }

  std::vector<McEstimate> out(ku);
  for (int l = 0; l < ku; ++l)
    out[l] = finish(acc[l].data(), model.prelog, 0.0);
  return out;
}

std::vector<McEstimate> mc_dl_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v, long n_samples,
                                 std::uint64_t seed) {
  return mc_dl_se(cfg, ch, v, make_scheme_model(Scheme::kNafd, cfg, ch),
                  n_samples, seed);
}

std::vector<McEstimate> mc_ul_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v, long n_samples,
                                 std::uint64_t seed) {
  return mc_ul_se(cfg, ch, v, make_scheme_model(Scheme::kNafd, cfg, ch),
                  n_samples, seed);
}

double mc_fourth_moment(int n_antennas, double gamma, long n_samples,
                        std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6d346d63));
  CVec ghat(n_antennas);
  double sum = 0;
  for (long s = 0; s < n_samples; ++s) {
    fill_cnormal(rng, gamma, &ghat);
    double nsq = ghat.squaredNorm();
    sum += nsq * nsq;
  }
  return sum / static_cast<double>(n_samples);
}

}  // namespace nafd
