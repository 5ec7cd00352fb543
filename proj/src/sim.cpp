#include "microharvest/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mh {

std::vector<Vec2> depot_slots(const ScenarioConfig& config) {
    const int m = config.fleet_size;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
    const int rows = (m + cols - 1) / cols;
    const Vec2 center{config.device_width_um / 2.0, config.device_height_um / 2.0};
    const double zone = config.depot_extent_um;
    const Vec2 origin{center.x - zone / 2.0, center.y - zone / 2.0};
    const double sx = zone / (cols + 1);
    const double sy = zone / (rows + 1);
    std::vector<Vec2> slots;
    for (int i = 0; i < m; ++i) {
        const int c = i % cols, r = i / cols;
        slots.push_back({origin.x + (c + 1) * sx, origin.y + (r + 1) * sy});
    }
    return slots;
}

namespace {

enum class TargetState { Unassigned, Pending, Collected, AssignedFailed };

void remove_region(Environment& env, const GridI32& region_ids, int region) {
    for (int y = 0; y < env.ny(); ++y)
        for (int x = 0; x < env.nx(); ++x)
            if (region_ids.at(x, y) == region) env.labels.at(x, y) = label::kFree;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, const GenerativeModel& model,
                            ScenarioTrace* trace) {
    ScenarioResult res;

    GenerationParams gen = config.gen;
    gen.width_um = config.device_width_um;
    gen.height_um = config.device_height_um;
    gen.resolution_um = config.resolution_um;
    gen.seed = config.seed;
    gen.start_zone_um = config.depot_extent_um;

    Environment env;
    try {
        env = generate_environment(model, gen);
    } catch (const std::exception& e) {
        res.runnable = false;
        res.error = e.what();
        return res;
    }

    const RegionMap regions = find_regions(env);
    const GridF base_dist = obstacle_distance_sq(env);
    const FreeSpaceMask fs = compute_free_space(env, config.robot_radius_um, base_dist);
    res.free_space_fraction = fs.fraction;

    // targets: connected Cell regions
    std::vector<Vec2> target_pts;
    std::vector<int> target_regions;
    for (size_t i = 0; i < regions.regions.size(); ++i)
        if (regions.regions[i].label_class == label::kCell) {
            target_pts.push_back(regions.regions[i].centroid_um);
            target_regions.push_back(static_cast<int>(i));
        }
    res.targets_total = static_cast<int>(target_pts.size());
    std::vector<TargetState> target_state(regions.regions.size(), TargetState::Unassigned);

    // fleet at the depot slots
    const std::vector<Vec2> slots = depot_slots(config);
    Fleet fleet;
    for (int i = 0; i < config.fleet_size; ++i) {
        Robot r;
        r.center = slots[i];
        r.radius_um = config.robot_radius_um;
        r.speed_um_s = config.robot_speed_um_s;
        r.capacity = config.robot_capacity;
        r.priority = i;
        fleet.robots.push_back(r);
    }
    for (int i = 0; i < config.fleet_size; ++i)
        for (int j = i + 1; j < config.fleet_size; ++j)
            if (dist(slots[i], slots[j]) <= 2.0 * config.robot_radius_um) {
                res.runnable = false;
                res.error = "depot zone too small for the fleet";
                return res;
            }

    const int qs = fleet.capacity_qs();
    std::vector<TargetCluster> clusters =
        cluster_targets(target_pts, config.wa_extent_um, config.wa_extent_um, qs, config.seed,
                        2.0 * config.robot_radius_um, target_regions);
    const Vec2 depot_center{config.device_width_um / 2.0, config.device_height_um / 2.0};
    const Route route = solve_cvrp(clusters, {depot_center}, qs);

    if (trace) {
        trace->initial_env = env;
        trace->route = route;
        trace->clusters = clusters;
    }

    Rng rng_alloc = Rng::stream(config.seed, "allocation");
    std::vector<Vec2> robot_pos = slots;
    // robots stranded away from the depot stay out of later journeys
    std::vector<uint8_t> robot_stranded(config.fleet_size, 0);

    auto record_trace_leg = [&](const std::string& name, const PlanReport& report,
                                const std::vector<AgentTask>& tasks, const WorkingArea& wa) {
        if (!trace) return;
        ScenarioTrace::Leg leg;
        leg.name = name;
        leg.window = wa;
        for (size_t i = 0; i < tasks.size(); ++i) {
            leg.robots.push_back(tasks[i].robot);
            leg.paths.push_back(report.paths[i]);
        }
        trace->legs.push_back(std::move(leg));
    };

    int stop_counter = -1;
    for (const auto& stop : route.stops) {
        if (stop.is_depot) continue;
        ++stop_counter;
        const TargetCluster& cluster = clusters[stop.index];
        const WorkingArea window =
            fit_working_area(cluster.targets, config.wa_extent_um, config.wa_extent_um,
                             config.device_width_um, config.device_height_um);

        std::vector<int> remaining_idx(cluster.targets.size());
        for (size_t i = 0; i < remaining_idx.size(); ++i) remaining_idx[i] = static_cast<int>(i);

        for (int trip = 0; trip < config.max_trips_per_stop && !remaining_idx.empty(); ++trip) {
            TargetCluster sub;
            for (int i : remaining_idx) {
                sub.targets.push_back(cluster.targets[i]);
                sub.target_ids.push_back(cluster.target_ids[i]);
            }
            sub.bbox = bbox_of(sub.targets.begin(), sub.targets.end());

            Fleet active;
            std::vector<int> active_robot_index;
            for (int i = 0; i < config.fleet_size; ++i) {
                if (robot_stranded[i]) continue;
                Robot r = fleet.robots[i];
                r.center = robot_pos[i];
                active.robots.push_back(r);
                active_robot_index.push_back(i);
            }
            if (active.robots.empty()) break;

            const auto assignments =
                assign_robots(sub, active, fs, env, window, rng_alloc, -1.0, 1000, false);

            // build the outbound tasks; robots without a plannable goal park
            std::vector<AgentTask> tasks;
            std::vector<int> task_robot;       // fleet index per task
            std::vector<int> task_target;      // sub-cluster target index, -1 idle
            std::vector<Circle> parked;
            for (int i = 0; i < config.fleet_size; ++i)
                if (robot_stranded[i])
                    parked.push_back({robot_pos[i], config.robot_radius_um});
            for (const auto& a : assignments) {
                const int robot = active_robot_index[a.robot_index];
                if (a.idle_goal_failed) {
                    parked.push_back({robot_pos[robot], config.robot_radius_um});
                    continue;
                }
                AgentTask t;
                t.robot = active.robots[a.robot_index];
                t.start = robot_pos[robot];
                t.goal = a.goal;
                if (a.target_index >= 0)
                    t.ignore_region = cluster.target_ids[remaining_idx[a.target_index]];
                tasks.push_back(t);
                task_robot.push_back(robot);
                task_target.push_back(a.target_index);
            }

            const PlanReport out = plan_paths(env, tasks, window, config.planner, &regions.ids,
                                              parked);
            record_trace_leg("stop" + std::to_string(stop_counter) + "_trip" +
                                 std::to_string(trip) + "_out",
                             out, tasks, window);
            if (config.verify_paths) {
                std::vector<TimedPath> ok_paths;
                std::vector<Robot> ok_robots;
                std::vector<int> ok_ignore;
                for (size_t i = 0; i < tasks.size(); ++i)
                    if (out.outcomes[i] == AgentOutcome::Success) {
                        ok_paths.push_back(out.paths[i]);
                        ok_robots.push_back(tasks[i].robot);
                        ok_ignore.push_back(tasks[i].ignore_region);
                    }
                if (!verify_plan(env, ok_paths, ok_robots, window, &regions.ids, ok_ignore).clean)
                    res.all_legs_verified = false;
            }

            // apply outbound results
            struct Carry {
                int robot;
                int region;
            };
            std::vector<Carry> carrying;
            std::vector<int> moved_tasks;
            std::vector<JourneyRecord> trip_journeys(tasks.size());
            std::vector<uint8_t> journey_alive(tasks.size(), 0);
            for (size_t i = 0; i < tasks.size(); ++i) {
                const int robot = task_robot[i];
                const bool is_target = task_target[i] >= 0;
                const int region = is_target ? tasks[i].ignore_region : -1;
                if (is_target) {
                    JourneyRecord& j = trip_journeys[i];
                    j.stop_index = stop_counter;
                    j.trip_index = trip;
                    j.robot = robot;
                    j.target_region = region;
                    journey_alive[i] = 1;
                    target_state[region] = TargetState::Pending;
                }
                if (out.outcomes[i] == AgentOutcome::Success) {
                    robot_pos[robot] = tasks[i].goal;
                    moved_tasks.push_back(static_cast<int>(i));
                    if (is_target) {
                        remove_region(env, regions.ids, region);
                        carrying.push_back({robot, region});
                        trip_journeys[i].path_length_um += out.paths[i].length();
                        trip_journeys[i].duration_s += out.paths[i].end_time();
                    }
                } else if (is_target) {
                    trip_journeys[i].success = false;
                    trip_journeys[i].cause = out.outcomes[i] == AgentOutcome::InvalidStartGoal
                                                 ? FailureCause::InvalidStartGoal
                                                 : FailureCause::PlanFailure;
                    journey_alive[i] = 2;  // finished, failed
                    target_state[region] = TargetState::AssignedFailed;
                }
            }

            // return leg for everything that moved
            std::vector<AgentTask> back_tasks;
            std::vector<int> back_task_of_task;
            std::vector<Circle> back_parked;
            for (int i = 0; i < config.fleet_size; ++i) {
                bool moving = false;
                for (int t : moved_tasks)
                    if (task_robot[t] == i) moving = true;
                if (!moving) back_parked.push_back({robot_pos[i], config.robot_radius_um});
            }
            for (int t : moved_tasks) {
                const int robot = task_robot[t];
                AgentTask bt;
                bt.robot = tasks[t].robot;
                bt.robot.center = robot_pos[robot];
                bt.start = robot_pos[robot];
                bt.goal = slots[robot];
                back_tasks.push_back(bt);
                back_task_of_task.push_back(t);
            }
            const PlanReport back = plan_paths(env, back_tasks, window, config.planner,
                                               &regions.ids, back_parked);
            record_trace_leg("stop" + std::to_string(stop_counter) + "_trip" +
                                 std::to_string(trip) + "_back",
                             back, back_tasks, window);
            if (config.verify_paths) {
                std::vector<TimedPath> ok_paths;
                std::vector<Robot> ok_robots;
                for (size_t i = 0; i < back_tasks.size(); ++i)
                    if (back.outcomes[i] == AgentOutcome::Success) {
                        ok_paths.push_back(back.paths[i]);
                        ok_robots.push_back(back_tasks[i].robot);
                    }
                if (!verify_plan(env, ok_paths, ok_robots, window).clean)
                    res.all_legs_verified = false;
            }

            for (size_t b = 0; b < back_tasks.size(); ++b) {
                const int t = back_task_of_task[b];
                const int robot = task_robot[t];
                int carried = -1;
                for (const auto& c : carrying)
                    if (c.robot == robot) carried = c.region;
                if (back.outcomes[b] == AgentOutcome::Success) {
                    robot_pos[robot] = slots[robot];
                    if (journey_alive[t] == 1) {
                        trip_journeys[t].success = true;
                        trip_journeys[t].path_length_um += back.paths[b].length();
                        trip_journeys[t].duration_s += back.paths[b].end_time();
                        journey_alive[t] = 2;
                        if (carried >= 0) target_state[carried] = TargetState::Collected;
                    }
                } else {
                    robot_stranded[robot] = 1;  // stuck away from the depot
                    if (journey_alive[t] == 1) {
                        trip_journeys[t].success = false;
                        trip_journeys[t].cause =
                            back.outcomes[b] == AgentOutcome::InvalidStartGoal
                                ? FailureCause::InvalidStartGoal
                                : FailureCause::PlanFailure;
                        journey_alive[t] = 2;
                        if (carried >= 0) target_state[carried] = TargetState::AssignedFailed;
                    }
                }
            }

            for (size_t i = 0; i < tasks.size(); ++i) {
                if (task_target[i] < 0) continue;
                ++res.journeys_attempted;
                if (trip_journeys[i].success) {
                    ++res.journeys_succeeded;
                } else if (trip_journeys[i].cause == FailureCause::InvalidStartGoal) {
                    ++res.failures_invalid;
                } else {
                    ++res.failures_plan;
                }
                res.journeys.push_back(trip_journeys[i]);
            }

            // assigned targets leave the pool regardless of outcome
            std::vector<int> next_remaining;
            std::vector<uint8_t> taken(remaining_idx.size(), 0);
            for (size_t i = 0; i < tasks.size(); ++i)
                if (task_target[i] >= 0) taken[task_target[i]] = 1;
            for (size_t i = 0; i < remaining_idx.size(); ++i)
                if (!taken[i]) next_remaining.push_back(remaining_idx[i]);
            remaining_idx = std::move(next_remaining);
        }
    }

    for (size_t i = 0; i < regions.regions.size(); ++i) {
        if (regions.regions[i].label_class != label::kCell) continue;
        switch (target_state[i]) {
            case TargetState::Collected: ++res.targets_collected; break;
            case TargetState::AssignedFailed: ++res.targets_assigned_failed; break;
            default: ++res.targets_never_assigned; break;
        }
    }
    return res;
}

SweepResult sweep(const ScenarioConfig& base, const std::vector<int>& fleet_sizes,
                  const std::vector<double>& density_scales, int seeds_per_point,
                  const GenerativeModel& model, int jobs) {
    SweepResult out;
    std::vector<SweepRun> runs;
    for (int m : fleet_sizes)
        for (double d : density_scales)
            for (int s = 0; s < seeds_per_point; ++s) {
                SweepRun r;
                r.fleet_size = m;
                r.density_scale = d;
                r.seed = base.seed + static_cast<uint64_t>(s) * 9973 +
                         static_cast<uint64_t>(m) * 7919 +
                         static_cast<uint64_t>(std::llround(d * 1000.0)) * 104729;
                runs.push_back(r);
            }

    std::mutex mu;
    size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            size_t i;
            {
                std::lock_guard<std::mutex> lk(mu);
                if (next >= runs.size()) return;
                i = next++;
            }
            ScenarioConfig cfg = base;
            cfg.fleet_size = runs[i].fleet_size;
            cfg.gen.density_scale = runs[i].density_scale;
            cfg.seed = runs[i].seed;
            runs[i].result = run_scenario(cfg, model);
        }
    };
    const int n_threads = std::max(1, jobs);
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads - 1; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (auto& r : runs) {
        if (!r.result.runnable) ++out.unrunnable;
        out.runs.push_back(std::move(r));
    }
    return out;
}

std::vector<SweepBinRow> SweepResult::binned(double bin_width) const {
    struct Acc {
        int scenarios = 0, journeys = 0, succeeded = 0, invalid = 0, plan = 0;
        double rate_sum = 0.0;
    };
    std::map<std::pair<int, int>, Acc> bins;
    for (const auto& r : runs) {
        if (!r.result.runnable || r.result.journeys_attempted == 0) continue;
        const int b = static_cast<int>(std::floor(r.result.free_space_fraction / bin_width));
        Acc& a = bins[{r.fleet_size, b}];
        ++a.scenarios;
        a.journeys += r.result.journeys_attempted;
        a.succeeded += r.result.journeys_succeeded;
        a.invalid += r.result.failures_invalid;
        a.plan += r.result.failures_plan;
        a.rate_sum += r.result.success_rate();
    }
    std::vector<SweepBinRow> rows;
    for (const auto& [key, a] : bins) {
        SweepBinRow row;
        row.fleet_size = key.first;
        row.free_lo = key.second * bin_width;
        row.free_hi = (key.second + 1) * bin_width;
        row.scenarios = a.scenarios;
        row.journeys = a.journeys;
        row.mean_success = a.rate_sum / a.scenarios;
        const int failures = a.invalid + a.plan;
        row.invalid_share = failures ? static_cast<double>(a.invalid) / failures : 0.0;
        row.plan_share = failures ? static_cast<double>(a.plan) / failures : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mh
