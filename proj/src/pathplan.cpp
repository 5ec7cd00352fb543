#include "microharvest/pathplan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>

namespace mh {

// --- TimedPath -------------------------------------------------------------------

double TimedPath::length() const {
    double len = 0.0;
    for (size_t i = 1; i < waypoints.size(); ++i)
        len += dist(waypoints[i - 1].pos, waypoints[i].pos);
    return len;
}

Vec2 TimedPath::position_at(double t) const {
    if (waypoints.empty()) return {};
    if (t <= waypoints.front().t) return waypoints.front().pos;
    if (t >= waypoints.back().t) return waypoints.back().pos;
    size_t hi = 1;
    while (waypoints[hi].t < t) ++hi;
    const auto& a = waypoints[hi - 1];
    const auto& b = waypoints[hi];
    const double span = b.t - a.t;
    if (span <= 0.0) return b.pos;
    const double u = (t - a.t) / span;
    return a.pos + (b.pos - a.pos) * u;
}

int PlanReport::count(AgentOutcome o) const {
    int n = 0;
    for (auto v : outcomes)
        if (v == o) ++n;
    return n;
}

// --- static clearance --------------------------------------------------------------

namespace {

constexpr double kCellSlack = 0.7072;  // half diagonal, cell units

struct StaticField {
    const Environment* env = nullptr;
    const GridF* dist_sq = nullptr;    // to nearest obstacle cell center, cell units
    int ignore_region = -1;
    const GridI32* regions = nullptr;

    bool cell_is_obstacle(int x, int y) const {
        if (!label::is_obstacle(env->labels.at(x, y))) return false;
        if (ignore_region >= 0 && regions && regions->at(x, y) == ignore_region) return false;
        return true;
    }

    // Distance bounds (um) from an arbitrary point to the nearest obstacle center.
    void bounds(const Vec2& p, double& lo, double& hi) const {
        const double res = env->resolution_um;
        int cx = std::clamp(env->cell_x(p.x), 0, env->nx() - 1);
        int cy = std::clamp(env->cell_y(p.y), 0, env->ny() - 1);
        const float dsq = dist_sq->at(cx, cy);
        if (!std::isfinite(dsq)) {
            lo = hi = std::numeric_limits<double>::infinity();
            return;
        }
        const double d = std::sqrt(static_cast<double>(dsq)) * res;
        lo = d - kCellSlack * res;
        hi = d + kCellSlack * res;
    }

    bool inside_device(const Vec2& p, double r) const {
        return p.x - r >= 0.0 && p.y - r >= 0.0 && p.x + r <= env->width_um &&
               p.y + r <= env->height_um;
    }

    // Exact: no obstacle cell center within r of p.
    bool clear_disk(const Vec2& p, double r) const {
        double lo, hi;
        bounds(p, lo, hi);
        if (lo > r) return true;
        if (hi <= r) return false;
        const double res = env->resolution_um;
        const int x0 = std::max(0, env->cell_x(p.x - r - res));
        const int x1 = std::min(env->nx() - 1, env->cell_x(p.x + r + res));
        const int y0 = std::max(0, env->cell_y(p.y - r - res));
        const int y1 = std::min(env->ny() - 1, env->cell_y(p.y + r + res));
        const double r2 = r * r;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (!cell_is_obstacle(x, y)) continue;
                const Vec2 c = env->cell_center(x, y);
                if (dist_sq_point(c, p) <= r2) return false;
            }
        return true;
    }

    // Exact: no obstacle cell center within r of segment [a, b].
    bool clear_capsule(const Vec2& a, const Vec2& b, double r) const {
        const double res = env->resolution_um;
        const double len = dist(a, b);
        const int n_samples = std::max(1, static_cast<int>(std::ceil(len / (0.5 * res))));
        bool ambiguous = false;
        for (int i = 0; i <= n_samples; ++i) {
            const Vec2 q = a + (b - a) * (static_cast<double>(i) / n_samples);
            double lo, hi;
            bounds(q, lo, hi);
            if (hi <= r) return false;           // an obstacle is within r of q
            if (lo <= r + 0.26 * res) ambiguous = true;
        }
        if (!ambiguous) return true;             // every sample clear with margin
        // exact sweep over the capsule bounding box
        const double m = r + res;
        const int x0 = std::max(0, env->cell_x(std::min(a.x, b.x) - m));
        const int x1 = std::min(env->nx() - 1, env->cell_x(std::max(a.x, b.x) + m));
        const int y0 = std::max(0, env->cell_y(std::min(a.y, b.y) - m));
        const int y1 = std::min(env->ny() - 1, env->cell_y(std::max(a.y, b.y) + m));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                if (!cell_is_obstacle(x, y)) continue;
                if (dist_point_segment(env->cell_center(x, y), a, b) <= r) return false;
            }
        return true;
    }

    static double dist_sq_point(const Vec2& a, const Vec2& b) {
        return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
    }
};

}  // namespace

bool line_of_sight(const Environment& env, const Vec2& a, const Vec2& b, double radius,
                   const WorkingArea* window, int ignore_region, const GridI32* regions) {
    const GridF dsq = obstacle_distance_sq(env, ignore_region, regions);
    StaticField f{&env, &dsq, ignore_region, regions};
    if (!f.inside_device(a, radius) || !f.inside_device(b, radius)) return false;
    if (window && (!window->contains_disk(a, radius) || !window->contains_disk(b, radius)))
        return false;
    return f.clear_capsule(a, b, radius);
}

// --- safe intervals -----------------------------------------------------------------

namespace {

struct Span {
    double a, b;
};

void add_unsafe(std::vector<Span>& spans, double a, double b) {
    if (b <= a) return;
    spans.push_back({a, b});
}

// Times within [t0, t1] when |p0 + v*(t - t0) - q| <= R.
void point_vs_segment_unsafe(const Vec2& q, const Vec2& p0, const Vec2& v, double t0, double t1,
                             double R, std::vector<Span>& out) {
    const Vec2 d0 = p0 - q;
    const double a = v.norm_sq();
    const double b = 2.0 * d0.dot(v);
    const double c = d0.norm_sq() - R * R;
    if (a <= 1e-18) {
        if (c <= 0.0) add_unsafe(out, t0, t1);
        return;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return;
    const double sq = std::sqrt(disc);
    const double r1 = (-b - sq) / (2.0 * a);
    const double r2 = (-b + sq) / (2.0 * a);
    add_unsafe(out, std::max(t0, t0 + r1), std::min(t1, t0 + r2));
}

}  // namespace

std::vector<SafeIntervalTable::Interval> SafeIntervalTable::at(const Vec2& pos,
                                                               double agent_radius) const {
    std::vector<Span> unsafe;
    for (const auto& disk : static_disks) {
        if (dist(pos, disk.center) <= agent_radius + disk.radius) {
            return {};  // permanently blocked
        }
    }
    for (const auto& mover : movers) {
        const double R = agent_radius + mover.radius;
        const auto& wp = mover.path.waypoints;
        if (wp.empty()) continue;
        if (wp.front().t > 0.0 && dist(pos, wp.front().pos) <= R)
            add_unsafe(unsafe, 0.0, wp.front().t);
        for (size_t i = 1; i < wp.size(); ++i) {
            const double dt = wp[i].t - wp[i - 1].t;
            if (dt <= 0.0) continue;
            const Vec2 v = (wp[i].pos - wp[i - 1].pos) / dt;
            point_vs_segment_unsafe(pos, wp[i - 1].pos, v, wp[i - 1].t, wp[i].t, R, unsafe);
        }
        if (dist(pos, wp.back().pos) <= R) add_unsafe(unsafe, wp.back().t, horizon);
    }
    std::sort(unsafe.begin(), unsafe.end(), [](const Span& a, const Span& b) { return a.a < b.a; });
    std::vector<Interval> safe;
    double t = 0.0;
    for (const auto& s : unsafe) {
        if (s.a > t + 1e-9) safe.push_back({t, std::min(s.a, horizon)});
        t = std::max(t, s.b);
        if (t >= horizon) break;
    }
    if (t < horizon - 1e-9) safe.push_back({t, horizon});
    return safe;
}

// --- planner ----------------------------------------------------------------------

namespace {

// Earliest conflict-free departure for the motion a->b in [dep_min, dep_max];
// returns <0 when none exists within the window.
double find_departure(const SafeIntervalTable& table, const Vec2& a, const Vec2& b,
                      double travel_time, double agent_radius, double dep_min, double dep_max,
                      double eps) {
    double dep = dep_min;
    for (int iter = 0; iter < 64; ++iter) {
        if (dep > dep_max + 1e-12) return -1.0;
        double push_to = -1.0;
        const Vec2 va = travel_time > 0.0 ? (b - a) / travel_time : Vec2{0, 0};
        for (const auto& mover : table.movers) {
            const double R = agent_radius + mover.radius;
            const auto& wp = mover.path.waypoints;
            if (wp.empty()) continue;
            // pieces: pre-start park, motion segments, post-end park
            auto check_piece = [&](double p0t, double p1t, const Vec2& pp0, const Vec2& vb) {
                const double lo = std::max(dep, p0t);
                const double hi = std::min(dep + travel_time, p1t);
                if (hi <= lo) return;
                // relative separation over [lo, hi]
                const Vec2 qa = a + va * (lo - dep);
                const Vec2 qb = pp0 + vb * (lo - p0t);
                const double md = min_dist_moving_points(qa, va, qb, vb, hi - lo);
                if (md > R) return;
                // conflicting: wait out this piece
                const double candidate = p1t + eps;
                if (push_to < candidate) push_to = candidate;
            };
            if (wp.front().t > 0.0) check_piece(0.0, wp.front().t, wp.front().pos, {0, 0});
            for (size_t i = 1; i < wp.size(); ++i) {
                const double dt = wp[i].t - wp[i - 1].t;
                if (dt <= 0.0) continue;
                check_piece(wp[i - 1].t, wp[i].t, wp[i - 1].pos,
                            (wp[i].pos - wp[i - 1].pos) / dt);
            }
            check_piece(wp.back().t, table.horizon, wp.back().pos, {0, 0});
        }
        // parked disks block the swept corridor outright
        for (const auto& disk : table.static_disks) {
            if (dist_point_segment(disk.center, a, b) <= agent_radius + disk.radius) return -1.0;
        }
        if (push_to < 0.0) return dep;
        dep = std::max(dep + eps, push_to);
    }
    return -1.0;
}

struct OpenEntry {
    double f;
    double g;
    int64_t state;
    bool operator<(const OpenEntry& o) const {
        if (f != o.f) return f > o.f;          // min-heap on f
        if (g != o.g) return g < o.g;          // prefer higher g
        return state > o.state;                // then lower state id
    }
};

struct StateRec {
    double g = std::numeric_limits<double>::infinity();
    int64_t parent = -1;
    double depart = 0.0;    // departure time from the parent
    bool closed = false;
};

class SippSearch {
public:
    SippSearch(const StaticField& field, const SafeIntervalTable& table,
               const WorkingArea& window, const AgentTask& task, double r_eff,
               const PlannerOptions& opts)
        : field_(field), table_(table), window_(window), task_(task), r_eff_(r_eff),
          opts_(opts) {
        const auto& env = *field.env;
        stride_ = opts.lattice_stride_cells;
        if (stride_ <= 0)
            stride_ = std::max(1, static_cast<int>(std::lround(
                                      task.robot.radius_um / (2.0 * env.resolution_um))));
        nx_ = (env.nx() + stride_ - 1) / stride_;
        ny_ = (env.ny() + stride_ - 1) / stride_;
        start_id_ = static_cast<int64_t>(nx_) * ny_;
        goal_id_ = start_id_ + 1;
    }

    std::optional<TimedPath> run() {
        const double speed = task_.robot.speed_um_s;
        auto h = [&](const Vec2& p) { return dist(p, task_.goal) / speed; };

        const auto start_ivals = intervals_of(start_id_);
        int start_iv = -1;
        for (size_t i = 0; i < start_ivals.size(); ++i)
            if (start_ivals[i].t_start <= 1e-9 && start_ivals[i].t_end > 1e-9) {
                start_iv = static_cast<int>(i);
                break;
            }
        if (start_iv < 0) return std::nullopt;

        const int64_t s0 = key(start_id_, start_iv);
        states_[s0].g = 0.0;
        open_.push({h(task_.start), 0.0, s0});
        int expansions = 0;

        while (!open_.empty() && expansions < opts_.max_expansions) {
            const OpenEntry top = open_.top();
            open_.pop();
            auto& rec = states_[top.state];
            if (rec.closed || top.g > rec.g + 1e-12) continue;
            rec.closed = true;
            ++expansions;

            const int64_t node = top.state >> 8;
            const int iv = static_cast<int>(top.state & 0xff);
            if (node == goal_id_) {
                const auto ivals = intervals_of(goal_id_);
                if (ivals[iv].t_end >= table_.horizon - 1e-6) return reconstruct(top.state);
                continue;  // cannot park at the goal in this interval
            }

            const Vec2 u_pos = position_of(node);
            const auto u_ivals = intervals_of(node);
            const double u_end = u_ivals[iv].t_end;

            for (const int64_t v : successors(node)) {
                if (!node_valid(v)) continue;
                const Vec2 v_pos = position_of(v);
                const double travel = dist(u_pos, v_pos) / speed;
                const auto v_ivals = intervals_of(v);
                for (size_t vi = 0; vi < v_ivals.size(); ++vi) {
                    const auto& I = v_ivals[vi];
                    double dep_min = std::max(rec.g, I.t_start - travel);
                    const double dep_max = std::min(u_end, I.t_end - travel);
                    if (dep_min > dep_max + 1e-12) continue;
                    const int64_t vkey = key(v, static_cast<int>(vi));
                    auto& vrec = states_[vkey];
                    if (vrec.closed) continue;

                    // candidate edge from u
                    double best_arr = std::numeric_limits<double>::infinity();
                    double best_dep = 0.0;
                    int64_t best_parent = top.state;
                    if (static_ok(node, v, u_pos, v_pos)) {
                        const double dep = find_departure(table_, u_pos, v_pos, travel, r_eff_,
                                                          dep_min, dep_max, opts_.wait_epsilon_s);
                        if (dep >= 0.0) {
                            best_arr = dep + travel;
                            best_dep = dep;
                        }
                    }
                    // any-angle shortcut from u's parent
                    if (rec.parent >= 0) {
                        const int64_t p_node = rec.parent >> 8;
                        const int p_iv = static_cast<int>(rec.parent & 0xff);
                        const Vec2 p_pos = position_of(p_node);
                        const auto p_ivals = intervals_of(p_node);
                        const double p_g = states_[rec.parent].g;
                        const double travel2 = dist(p_pos, v_pos) / speed;
                        double dmin = std::max(p_g, I.t_start - travel2);
                        const double dmax = std::min(p_ivals[p_iv].t_end, I.t_end - travel2);
                        if (dmin <= dmax + 1e-12 && static_ok(p_node, v, p_pos, v_pos)) {
                            const double dep2 =
                                find_departure(table_, p_pos, v_pos, travel2, r_eff_, dmin, dmax,
                                               opts_.wait_epsilon_s);
                            if (dep2 >= 0.0 && dep2 + travel2 <= best_arr) {
                                best_arr = dep2 + travel2;
                                best_dep = dep2;
                                best_parent = rec.parent;
                            }
                        }
                    }
                    if (!std::isfinite(best_arr)) continue;
                    if (best_arr + 1e-12 >= vrec.g) continue;
                    vrec.g = best_arr;
                    vrec.parent = best_parent;
                    vrec.depart = best_dep;
                    open_.push({best_arr + h(v_pos), best_arr, vkey});
                }
            }
        }
        return std::nullopt;
    }

private:
    static int64_t key(int64_t node, int interval) { return (node << 8) | interval; }

    Vec2 position_of(int64_t node) const {
        if (node == start_id_) return task_.start;
        if (node == goal_id_) return task_.goal;
        const int ix = static_cast<int>(node % nx_);
        const int iy = static_cast<int>(node / nx_);
        return field_.env->cell_center(ix * stride_, iy * stride_);
    }

    bool node_valid(int64_t node) {
        if (node == start_id_ || node == goal_id_) return true;  // validated upfront
        auto it = valid_cache_.find(node);
        if (it != valid_cache_.end()) return it->second;
        const Vec2 p = position_of(node);
        const bool ok = field_.inside_device(p, r_eff_) && window_.contains_disk(p, r_eff_) &&
                        field_.clear_disk(p, r_eff_);
        valid_cache_[node] = ok;
        return ok;
    }

    const std::vector<SafeIntervalTable::Interval>& intervals_of(int64_t node) {
        auto it = interval_cache_.find(node);
        if (it != interval_cache_.end()) return it->second;
        auto ivals = table_.at(position_of(node), r_eff_);
        if (ivals.size() > 250) ivals.resize(250);
        return interval_cache_.emplace(node, std::move(ivals)).first->second;
    }

    std::vector<int64_t> successors(int64_t node) {
        std::vector<int64_t> out;
        if (node == goal_id_) return out;
        const Vec2 p = position_of(node);
        if (node == start_id_) {
            const int ix = std::clamp(field_.env->cell_x(p.x) / stride_, 0, nx_ - 1);
            const int iy = std::clamp(field_.env->cell_y(p.y) / stride_, 0, ny_ - 1);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int qx = ix + dx, qy = iy + dy;
                    if (qx < 0 || qy < 0 || qx >= nx_ || qy >= ny_) continue;
                    out.push_back(static_cast<int64_t>(qy) * nx_ + qx);
                }
        } else {
            const int ix = static_cast<int>(node % nx_);
            const int iy = static_cast<int>(node / nx_);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int qx = ix + dx, qy = iy + dy;
                    if (qx < 0 || qy < 0 || qx >= nx_ || qy >= ny_) continue;
                    out.push_back(static_cast<int64_t>(qy) * nx_ + qx);
                }
        }
        out.push_back(goal_id_);
        return out;
    }

    bool static_ok(int64_t u, int64_t v, const Vec2& a, const Vec2& b) {
        const uint64_t k = (static_cast<uint64_t>(u) << 24) ^ static_cast<uint64_t>(v);
        auto it = los_cache_.find(k);
        if (it != los_cache_.end()) return it->second;
        const bool ok = window_.contains_disk(a, r_eff_) && window_.contains_disk(b, r_eff_) &&
                        field_.inside_device(a, r_eff_) && field_.inside_device(b, r_eff_) &&
                        field_.clear_capsule(a, b, r_eff_);
        los_cache_[k] = ok;
        return ok;
    }

    TimedPath reconstruct(int64_t goal_state) {
        std::vector<std::pair<int64_t, double>> chain;  // state, depart-from-parent
        int64_t cur = goal_state;
        while (cur >= 0) {
            chain.push_back({cur, states_[cur].depart});
            cur = states_[cur].parent;
        }
        std::reverse(chain.begin(), chain.end());
        TimedPath path;
        for (size_t i = 0; i < chain.size(); ++i) {
            const int64_t node = chain[i].first >> 8;
            const Vec2 pos = position_of(node);
            const double arr = states_[chain[i].first].g;
            if (i == 0) {
                path.waypoints.push_back({pos, 0.0});
            } else {
                const double dep = chain[i].second;
                if (!path.waypoints.empty() && dep > path.waypoints.back().t + 1e-9)
                    path.waypoints.push_back({path.waypoints.back().pos, dep});
                path.waypoints.push_back({pos, arr});
            }
        }
        return path;
    }

    const StaticField& field_;
    const SafeIntervalTable& table_;
    const WorkingArea& window_;
    const AgentTask& task_;
    double r_eff_;
    PlannerOptions opts_;
    int stride_ = 1, nx_ = 0, ny_ = 0;
    int64_t start_id_ = 0, goal_id_ = 0;

    std::priority_queue<OpenEntry> open_;
    std::unordered_map<int64_t, StateRec> states_;
    std::unordered_map<int64_t, bool> valid_cache_;
    std::unordered_map<uint64_t, bool> los_cache_;
    std::unordered_map<int64_t, std::vector<SafeIntervalTable::Interval>> interval_cache_;
};

}  // namespace

PlanReport plan_paths(const Environment& env, const std::vector<AgentTask>& agents,
                      const WorkingArea& window, const PlannerOptions& opts,
                      const GridI32* regions, const std::vector<Circle>& parked) {
    const int n = static_cast<int>(agents.size());
    PlanReport report;
    report.outcomes.assign(n, AgentOutcome::PlanFailure);
    report.paths.assign(n, {});
    for (int i = 0; i < n; ++i) report.paths[i].agent = i;

    // priority order (unique priorities expected)
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (agents[a].robot.priority != agents[b].robot.priority)
            return agents[a].robot.priority < agents[b].robot.priority;
        return a < b;
    });

    const double margin =
        opts.safety_margin_um >= 0.0 ? opts.safety_margin_um : env.resolution_um / 2.0;
    double min_speed = std::numeric_limits<double>::infinity();
    for (const auto& a : agents) min_speed = std::min(min_speed, a.robot.speed_um_s);
    const double diag = std::hypot(env.width_um, env.height_um);
    const double horizon =
        opts.horizon_s > 0.0 ? opts.horizon_s : 2.0 * diag / std::max(min_speed, 1e-9);

    // static fields, shared by exclusion id
    const GridF base_field = obstacle_distance_sq(env);
    std::unordered_map<int, GridF> region_fields;
    auto field_for = [&](int ignore_region) -> StaticField {
        if (ignore_region < 0 || !regions) return {&env, &base_field, -1, nullptr};
        auto it = region_fields.find(ignore_region);
        if (it == region_fields.end())
            it = region_fields.emplace(ignore_region,
                                       obstacle_distance_sq(env, ignore_region, regions)).first;
        return {&env, &it->second, ignore_region, regions};
    };

    SafeIntervalTable table;
    table.horizon = horizon;
    table.static_disks = parked;

    // Phase A: start/goal validation in priority order. Invalid agents park at
    // their start and block everyone after them.
    std::vector<Vec2> committed_goals;
    std::vector<double> committed_goal_radius;
    std::vector<int> planned;  // agents that passed validation, priority order
    for (int idx : order) {
        const AgentTask& task = agents[idx];
        const double r_eff = task.robot.radius_um + margin;
        const StaticField field = field_for(task.ignore_region);
        bool ok = field.inside_device(task.start, r_eff) &&
                  window.contains_disk(task.start, r_eff) && field.clear_disk(task.start, r_eff) &&
                  field.inside_device(task.goal, r_eff) &&
                  window.contains_disk(task.goal, r_eff) && field.clear_disk(task.goal, r_eff);
        if (ok) {
            for (const auto& disk : table.static_disks)
                if (dist(task.start, disk.center) <= task.robot.radius_um + disk.radius ||
                    dist(task.goal, disk.center) <= task.robot.radius_um + disk.radius) {
                    ok = false;
                    break;
                }
        }
        if (ok) {
            for (size_t j = 0; j < committed_goals.size(); ++j)
                if (dist(task.goal, committed_goals[j]) <=
                    task.robot.radius_um + committed_goal_radius[j]) {
                    ok = false;
                    break;
                }
        }
        if (!ok) {
            report.outcomes[idx] = AgentOutcome::InvalidStartGoal;
            table.static_disks.push_back({task.start, task.robot.radius_um});
            continue;
        }
        committed_goals.push_back(task.goal);
        committed_goal_radius.push_back(task.robot.radius_um);
        planned.push_back(idx);
    }

    // Phase B: plan in priority order.
    for (int idx : planned) {
        const AgentTask& task = agents[idx];
        const double r_eff = task.robot.radius_um + margin;
        const StaticField field = field_for(task.ignore_region);

        if (dist(task.start, task.goal) < 1e-9) {
            const auto ivals = table.at(task.start, r_eff);
            if (!ivals.empty() && ivals.back().t_start <= 1e-9 &&
                ivals.back().t_end >= horizon - 1e-6) {
                report.outcomes[idx] = AgentOutcome::Success;
                report.paths[idx].waypoints = {{task.start, 0.0}};
                table.movers.push_back({report.paths[idx], task.robot.radius_um});
            } else {
                report.outcomes[idx] = AgentOutcome::PlanFailure;
                table.static_disks.push_back({task.start, task.robot.radius_um});
            }
            continue;
        }

        SippSearch search(field, table, window, task, r_eff, opts);
        auto path = search.run();
        if (path) {
            path->agent = idx;
            report.outcomes[idx] = AgentOutcome::Success;
            report.paths[idx] = *path;
            table.movers.push_back({*path, task.robot.radius_um});
        } else {
            report.outcomes[idx] = AgentOutcome::PlanFailure;
            table.static_disks.push_back({task.start, task.robot.radius_um});
        }
    }

    for (int i = 0; i < n; ++i) {
        if (report.outcomes[i] != AgentOutcome::Success) continue;
        report.makespan = std::max(report.makespan, report.paths[i].end_time());
        report.total_length += report.paths[i].length();
    }
    return report;
}

// --- verifier ---------------------------------------------------------------------

ConflictReport verify_plan(const Environment& env, const std::vector<TimedPath>& paths,
                           const std::vector<Robot>& robots, const WorkingArea& window,
                           const GridI32* regions, const std::vector<int>& ignore_regions) {
    ConflictReport report;
    if (paths.size() != robots.size())
        throw std::runtime_error("verify_plan: paths/robots size mismatch");
    const int n = static_cast<int>(paths.size());

    double max_speed = 0.0, t_end = 0.0;
    for (int i = 0; i < n; ++i) {
        max_speed = std::max(max_speed, robots[i].speed_um_s);
        t_end = std::max(t_end, paths[i].end_time());
        // waypoint invariants: strictly increasing times, speed within limits
        const auto& wp = paths[i].waypoints;
        for (size_t k = 1; k < wp.size(); ++k) {
            const double dt = wp[k].t - wp[k - 1].t;
            if (dt <= 0.0) {
                report.conflicts.push_back(
                    {Conflict::Kind::SpeedViolation, i, -1, wp[k].t, wp[k].pos});
                continue;
            }
            const double v = dist(wp[k].pos, wp[k - 1].pos) / dt;
            if (v > robots[i].speed_um_s * (1.0 + 1e-6))
                report.conflicts.push_back(
                    {Conflict::Kind::SpeedViolation, i, -1, wp[k].t, wp[k].pos});
        }
    }
    const double dt = env.resolution_um / (4.0 * std::max(max_speed, 1e-9));

    const GridF base_field = obstacle_distance_sq(env);
    std::unordered_map<int, GridF> fields;
    auto field_for = [&](int agent) -> StaticField {
        const int reg =
            (agent < static_cast<int>(ignore_regions.size())) ? ignore_regions[agent] : -1;
        if (reg < 0 || !regions) return {&env, &base_field, -1, nullptr};
        auto it = fields.find(reg);
        if (it == fields.end())
            it = fields.emplace(reg, obstacle_distance_sq(env, reg, regions)).first;
        return {&env, &it->second, reg, regions};
    };

    std::vector<std::vector<uint8_t>> pair_reported(n, std::vector<uint8_t>(n, 0));
    std::vector<uint8_t> static_reported(n, 0), window_reported(n, 0);

    const int steps = static_cast<int>(std::ceil(t_end / dt)) + 1;
    for (int s = 0; s <= steps; ++s) {
        const double t = std::min(s * dt, t_end);
        for (int i = 0; i < n; ++i) {
            if (paths[i].waypoints.empty()) continue;
            const Vec2 pi = paths[i].position_at(t);
            const double ri = robots[i].radius_um;
            if (!window_reported[i] && !window.contains_disk(pi, ri)) {
                window_reported[i] = 1;
                report.conflicts.push_back({Conflict::Kind::WindowViolation, i, -1, t, pi});
            }
            if (!static_reported[i]) {
                const StaticField f = field_for(i);
                if (!f.inside_device(pi, ri) || !f.clear_disk(pi, ri)) {
                    static_reported[i] = 1;
                    report.conflicts.push_back({Conflict::Kind::StaticOverlap, i, -1, t, pi});
                }
            }
            for (int j = i + 1; j < n; ++j) {
                if (paths[j].waypoints.empty() || pair_reported[i][j]) continue;
                const Vec2 pj = paths[j].position_at(t);
                if (dist(pi, pj) < ri + robots[j].radius_um - 1e-9) {
                    pair_reported[i][j] = 1;
                    report.conflicts.push_back({Conflict::Kind::AgentAgent, i, j, t, pi});
                }
            }
        }
    }
    report.clean = report.conflicts.empty();
    return report;
}

}  // namespace mh
