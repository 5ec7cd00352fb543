#pragma once

#include <optional>
#include <vector>

#include "microharvest/geom.hpp"
#include "microharvest/rng.hpp"
#include "microharvest/scene.hpp"

namespace mh {

struct TargetCluster {
    std::vector<Vec2> targets;
    std::vector<int> target_ids;   // caller-side identities (e.g. region ids)
    BBox bbox;

    int size() const { return static_cast<int>(targets.size()); }
    Vec2 centroid() const;
};

// Working-area-constrained clustering: k-means with increasing k until every
// cluster's padded bounding box fits the window, then recursive bisection of
// clusters larger than the fleet capacity.
std::vector<TargetCluster> cluster_targets(const std::vector<Vec2>& targets,
                                           double wa_width_um, double wa_height_um,
                                           int capacity_qs, uint64_t seed,
                                           double pad_um = 200.0,
                                           const std::vector<int>& target_ids = {});

struct RouteStop {
    bool is_depot = false;
    int index = 0;                 // depot index or cluster index
};

struct Route {
    std::vector<RouteStop> stops;  // starts and ends at a depot
    double total_length = 0.0;
};

// Super-vehicle CVRP over cluster centroids: Clarke-Wright savings
// construction, then 2-opt and relocate local search to a local optimum.
Route solve_cvrp(const std::vector<TargetCluster>& clusters,
                 const std::vector<Vec2>& depots, int capacity_qs);

struct Fleet {
    std::vector<Robot> robots;
    int capacity_qs() const;
};

struct Assignment {
    int robot_index = -1;
    Vec2 goal;
    int target_index = -1;         // index into the cluster, -1 for an idle goal
    bool idle_goal_failed = false; // no parking spot found for this robot
};

// Greedy globally-closest robot-target matching; leftover robots get
// Poisson-disk parking goals inside the window on free cells.
std::vector<Assignment> assign_robots(const TargetCluster& cluster, const Fleet& fleet,
                                      const FreeSpaceMask& free_mask,
                                      const Environment& env, const WorkingArea& window,
                                      Rng& rng, double min_separation_um = -1.0,
                                      int max_attempts = 1000,
                                      bool throw_on_parking_failure = true);

}  // namespace mh
