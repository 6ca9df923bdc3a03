#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nafd/system_config.hpp"

namespace nafd {

// AP placement gave up: the spacing rule could not be met within the
// rejection-sampling budget.
struct PlacementFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NetworkGeometry {
  double area_side_m = 0.0;
  std::vector<Eigen::Vector2d> ap_pos;
  std::vector<Eigen::Vector2d> dl_ue_pos;
  std::vector<Eigen::Vector2d> ul_ue_pos;
};

// Shortest distance on the wrap-around square (torus) of the given side.
double torus_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                      double side);

// Uniform placement on the torus. APs are rejection-sampled until every
// pair is at least min_ap_spacing_m apart (total draw budget 1e5, then
// PlacementFailure). UEs have no spacing rule; exact duplicates are
// perturbed by 0.1 m so shadowing covariances stay nonsingular.
NetworkGeometry place_network(const SystemConfig& cfg, std::uint64_t seed);

}  // namespace nafd
