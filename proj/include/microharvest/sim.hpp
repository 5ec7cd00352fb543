#pragma once

#include <string>
#include <vector>

#include "microharvest/allocate.hpp"
#include "microharvest/envgen.hpp"
#include "microharvest/pathplan.hpp"
#include "microharvest/scene.hpp"
#include "microharvest/shapemodel.hpp"

namespace mh {

struct ScenarioConfig {
    double device_width_um = 10000.0;
    double device_height_um = 10000.0;
    double resolution_um = 5.0;
    double depot_extent_um = 1000.0;     // central square start zone
    double wa_extent_um = 3300.0;
    int fleet_size = 1;
    double robot_radius_um = 100.0;
    double robot_speed_um_s = 65.0;
    int robot_capacity = 8;
    GenerationParams gen;                // extents/seed overwritten from this config
    uint64_t seed = 1;
    PlannerOptions planner;
    bool verify_paths = true;            // run the brute-force verifier on every leg
    int max_trips_per_stop = 64;
};

enum class FailureCause { InvalidStartGoal, PlanFailure };

struct JourneyRecord {
    int stop_index = 0;
    int trip_index = 0;
    int robot = 0;
    int target_region = -1;
    bool success = false;
    FailureCause cause = FailureCause::PlanFailure;
    double path_length_um = 0.0;
    double duration_s = 0.0;
};

struct ScenarioResult {
    bool runnable = true;
    std::string error;
    double free_space_fraction = 0.0;
    int journeys_attempted = 0;
    int journeys_succeeded = 0;
    int failures_invalid = 0;
    int failures_plan = 0;
    bool all_legs_verified = true;       // false if any Success leg failed the verifier
    std::vector<JourneyRecord> journeys;
    int targets_total = 0;
    int targets_collected = 0;
    int targets_assigned_failed = 0;
    int targets_never_assigned = 0;

    double success_rate() const {
        return journeys_attempted ? static_cast<double>(journeys_succeeded) / journeys_attempted
                                  : 1.0;
    }
};

// Optional capture of the per-scenario artifacts (for the CLI output tree).
struct ScenarioTrace {
    Environment initial_env;
    Route route;
    std::vector<TargetCluster> clusters;
    struct Leg {
        std::string name;                // e.g. "stop0_trip0_out"
        std::vector<TimedPath> paths;
        std::vector<Robot> robots;
        WorkingArea window;
    };
    std::vector<Leg> legs;
};

ScenarioResult run_scenario(const ScenarioConfig& config, const GenerativeModel& model,
                            ScenarioTrace* trace = nullptr);

struct SweepRun {
    int fleet_size = 0;
    double density_scale = 1.0;
    uint64_t seed = 0;
    ScenarioResult result;
};

struct SweepBinRow {
    int fleet_size = 0;
    double free_lo = 0.0, free_hi = 0.0;  // free-space bin, fractions
    int scenarios = 0;
    int journeys = 0;
    double mean_success = 0.0;
    double invalid_share = 0.0;           // of failures
    double plan_share = 0.0;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    int unrunnable = 0;
    // Aggregation into free-space bins of the given width (default 2 points).
    std::vector<SweepBinRow> binned(double bin_width = 0.02) const;
};

SweepResult sweep(const ScenarioConfig& base, const std::vector<int>& fleet_sizes,
                  const std::vector<double>& density_scales, int seeds_per_point,
                  const GenerativeModel& model, int jobs = 1);

// Depot slot layout used by run_scenario; exposed for tests and the CLI.
std::vector<Vec2> depot_slots(const ScenarioConfig& config);

}  // namespace mh
