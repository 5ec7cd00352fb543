#pragma once

#include <optional>
#include <string>
#include <vector>

#include "microharvest/geom.hpp"
#include "microharvest/scene.hpp"

namespace mh {

struct TimedWaypoint {
    Vec2 pos;
    double t = 0.0;
};

struct TimedPath {
    int agent = 0;
    std::vector<TimedWaypoint> waypoints;   // strictly increasing times

    double length() const;
    double end_time() const { return waypoints.empty() ? 0.0 : waypoints.back().t; }
    // Position at time t; clamps before the first and after the last waypoint.
    Vec2 position_at(double t) const;
};

enum class AgentOutcome { Success, InvalidStartGoal, PlanFailure };

struct AgentTask {
    Robot robot;
    Vec2 start;
    Vec2 goal;
    int ignore_region = -1;   // region treated as free for this agent (its cargo)
};

struct PlanReport {
    std::vector<AgentOutcome> outcomes;    // one per agent, input order
    std::vector<TimedPath> paths;          // empty waypoint list for failed agents
    double makespan = 0.0;
    double total_length = 0.0;

    int count(AgentOutcome o) const;
};

struct PlannerOptions {
    double safety_margin_um = -1.0;   // -1: resolution/2
    int lattice_stride_cells = 0;     // 0: auto, ~radius/(2*resolution)
    double horizon_s = 0.0;           // 0: auto, 2 * diagonal / min speed
    int max_expansions = 200000;
    double wait_epsilon_s = 1e-6;
};

// Per-cell safe intervals with respect to committed higher-priority motion.
struct SafeIntervalTable {
    struct Interval {
        double t_start = 0.0;
        double t_end = 0.0;
    };
    double horizon = 0.0;
    // Computes the safe intervals of a point for one agent radius against the
    // committed paths (inflated by each mover's radius).
    std::vector<Interval> at(const Vec2& pos, double agent_radius) const;

    struct Mover {
        TimedPath path;
        double radius = 0.0;
    };
    std::vector<Mover> movers;
    std::vector<Circle> static_disks;      // parked robots
};

// True iff the disk of `radius` swept along [a, b] stays on free cells and,
// when a window is given, inside it. Exact in the cell-center overlap model.
bool line_of_sight(const Environment& env, const Vec2& a, const Vec2& b, double radius,
                   const WorkingArea* window = nullptr, int ignore_region = -1,
                   const GridI32* regions = nullptr);

PlanReport plan_paths(const Environment& env, const std::vector<AgentTask>& agents,
                      const WorkingArea& window, const PlannerOptions& opts = {},
                      const GridI32* regions = nullptr,
                      const std::vector<Circle>& parked = {});

// --- independent verifier ------------------------------------------------------

struct Conflict {
    enum class Kind { AgentAgent, StaticOverlap, WindowViolation, SpeedViolation };
    Kind kind = Kind::AgentAgent;
    int agent_a = -1;
    int agent_b = -1;   // -1 unless AgentAgent
    double time = 0.0;
    Vec2 pos;
};

struct ConflictReport {
    bool clean = true;
    std::vector<Conflict> conflicts;
};

// Brute-force time-stepped check at dt = resolution / (4 * max speed):
// pairwise separation, full-disk static overlap, window containment.
ConflictReport verify_plan(const Environment& env, const std::vector<TimedPath>& paths,
                           const std::vector<Robot>& robots, const WorkingArea& window,
                           const GridI32* regions = nullptr,
                           const std::vector<int>& ignore_regions = {});

}  // namespace mh
