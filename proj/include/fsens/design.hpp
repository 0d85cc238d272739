#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "fsens/grid.hpp"

namespace fsens::design {

struct Design {
    Eigen::MatrixXd unit;    // n x d in [0,1]^d
    Eigen::MatrixXd scaled;  // mapped to the bounds
    std::vector<Bounds1d> bounds;
    double criterion = 0.0;  // min pairwise distance in the unit cube
    std::uint64_t seed = 0;
};

struct SaConfig {
    double cooling = 0.95;
    int cool_every_per_n = 10;    // cool every 10*n proposals
    int stall_per_nd = 100;       // stop after 100*n*d proposals without improvement
    long max_proposals = 2000000;
    bool midpoint_cells = true;   // cell midpoints by default, uniform-within-cell otherwise
};

// Random Latin hypercube improved by simulated annealing over within-column
// swaps, maximizing the minimum pairwise distance; swaps preserve the LHS
// property. Returns the best design seen.
Design lhs_maximin(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                   const std::vector<Bounds1d>& bounds, const SaConfig& sa = {});

// Unoptimized random LHS (used as the annealing start and for MC sampling).
Design lhs_random(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                  const std::vector<Bounds1d>& bounds, bool midpoint_cells = false);

// I.i.d. uniform sample over the bounds.
Design uniform_sample(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                      const std::vector<Bounds1d>& bounds);

double min_pairwise_distance(const Eigen::MatrixXd& points);

Eigen::MatrixXd scale_to_bounds(const Eigen::MatrixXd& unit, const std::vector<Bounds1d>& bounds);

std::vector<Bounds1d> unit_bounds(Eigen::Index d);

}  // namespace fsens::design
