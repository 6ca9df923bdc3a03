#include "nafd/geometry.hpp"

#include <cmath>

#include "nafd/rng.hpp"

namespace nafd {

double torus_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                      double side) {
  double dx = std::fabs(p.x() - q.x());
  double dy = std::fabs(p.y() - q.y());
  dx = std::min(dx, side - dx);
  dy = std::min(dy, side - dy);
  return std::hypot(dx, dy);
}

namespace {

Eigen::Vector2d draw_point(Rng& rng, double side) {
  double x = rng.uniform(0.0, side);
  double y = rng.uniform(0.0, side);
  return {x, y};
}

}  // namespace

NetworkGeometry place_network(const SystemConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkGeometry geo;
  geo.area_side_m = cfg.area_side_m;
  Rng rng(derive_seed(seed, /*tag=*/0x6e657467));  // placement stream

  constexpr int kMaxDraws = 100000;
  int draws = 0;
  geo.ap_pos.reserve(cfg.num_aps);
  while (static_cast<int>(geo.ap_pos.size()) < cfg.num_aps) {
    if (++draws > kMaxDraws)
      throw PlacementFailure(
          "AP spacing rule not satisfiable within the sampling budget");
    Eigen::Vector2d cand = draw_point(rng, geo.area_side_m);
    bool ok = true;
    for (const auto& p : geo.ap_pos) {
      if (torus_distance(cand, p, geo.area_side_m) < cfg.min_ap_spacing_m) {
        ok = false;
        break;
      }
    }
    if (ok) geo.ap_pos.push_back(cand);
  }

  geo.dl_ue_pos.reserve(cfg.num_dl_ues);
  for (int k = 0; k < cfg.num_dl_ues; ++k)
    geo.dl_ue_pos.push_back(draw_point(rng, geo.area_side_m));
  geo.ul_ue_pos.reserve(cfg.num_ul_ues);
  for (int l = 0; l < cfg.num_ul_ues; ++l)
    geo.ul_ue_pos.push_back(draw_point(rng, geo.area_side_m));

  // Exact UE duplicates (possible with hand-crafted seeds or degenerate
  // areas) would make the shadowing covariance singular.
  std::vector<Eigen::Vector2d*> all;
  for (auto& p : geo.dl_ue_pos) all.push_back(&p);
  for (auto& p : geo.ul_ue_pos) all.push_back(&p);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      if (*all[i] == *all[j]) {
        all[j]->x() = std::fmod(all[j]->x() + 0.1, geo.area_side_m);
      }
  return geo;
}

}  // namespace nafd
