#include "microharvest/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mh {

Vec2 TargetCluster::centroid() const {
    Vec2 c{0, 0};
    for (const auto& t : targets) c += t;
    return targets.empty() ? c : c / static_cast<double>(targets.size());
}

int Fleet::capacity_qs() const {
    int q = 0;
    for (const auto& r : robots) q += r.capacity;
    return q;
}

namespace {

// Lloyd iterations with k-means++ seeding; returns per-point assignment.
std::vector<int> kmeans(const std::vector<Vec2>& pts, int k, Rng& rng) {
    const int n = static_cast<int>(pts.size());
    std::vector<Vec2> centers;
    centers.push_back(pts[rng.uniform_int(n)]);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], dist_sq(pts[i], centers.back()));
            total += d2[i];
        }
        int pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (int i = 0; i < n; ++i) {
                u -= d2[i];
                if (u <= 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(n);
        }
        centers.push_back(pts[pick]);
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = assign[i];
            double bd = dist_sq(pts[i], centers[best]);
            for (int c = 0; c < k; ++c) {
                const double d = dist_sq(pts[i], centers[c]);
                if (d < bd - 1e-12) {
                    bd = d;
                    best = c;
                }
            }
            if (best != assign[i]) {
                assign[i] = best;
                changed = true;
            }
        }
        std::vector<Vec2> sums(k, {0, 0});
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums[assign[i]] += pts[i];
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed an empty cluster with the point farthest from its center
                int far = 0;
                double fd = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = dist_sq(pts[i], centers[assign[i]]);
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                centers[c] = pts[far];
                changed = true;
            } else {
                centers[c] = sums[c] / static_cast<double>(counts[c]);
            }
        }
        if (!changed) break;
    }
    return assign;
}

TargetCluster make_cluster(const std::vector<Vec2>& pts, const std::vector<int>& ids,
                           const std::vector<int>& members) {
    TargetCluster c;
    for (int i : members) {
        c.targets.push_back(pts[i]);
        c.target_ids.push_back(ids.empty() ? i : ids[i]);
    }
    c.bbox = bbox_of(c.targets.begin(), c.targets.end());
    return c;
}

}  // namespace

std::vector<TargetCluster> cluster_targets(const std::vector<Vec2>& targets,
                                           double wa_width_um, double wa_height_um,
                                           int capacity_qs, uint64_t seed, double pad_um,
                                           const std::vector<int>& target_ids) {
    if (capacity_qs < 1) throw std::runtime_error("fleet capacity must be >= 1");
    if (targets.empty()) return {};
    const int n = static_cast<int>(targets.size());
    const double fit_w = wa_width_um - 2.0 * pad_um;
    const double fit_h = wa_height_um - 2.0 * pad_um;
    if (fit_w <= 0.0 || fit_h <= 0.0) throw std::runtime_error("working area too small");

    // increase k until every cluster's bounding box fits the padded window
    std::vector<std::vector<int>> groups;
    for (int k = 1; k <= n; ++k) {
        Rng rng = Rng::stream(seed, "cluster-kmeans");
        const auto assign = (k == 1) ? std::vector<int>(n, 0) : kmeans(targets, k, rng);
        groups.assign(k, {});
        for (int i = 0; i < n; ++i) groups[assign[i]].push_back(i);
        bool all_fit = true;
        for (const auto& g : groups) {
            if (g.empty()) continue;
            std::vector<Vec2> pts;
            for (int i : g) pts.push_back(targets[i]);
            const BBox bb = bbox_of(pts.begin(), pts.end());
            if (bb.width() > fit_w || bb.height() > fit_h) {
                all_fit = false;
                break;
            }
        }
        if (all_fit) break;
    }

    // recursive bisection of oversized clusters
    std::vector<TargetCluster> out;
    std::vector<std::vector<int>> work;
    for (auto& g : groups)
        if (!g.empty()) work.push_back(std::move(g));
    uint64_t split_counter = 0;
    while (!work.empty()) {
        std::vector<int> g = std::move(work.back());
        work.pop_back();
        if (static_cast<int>(g.size()) <= capacity_qs) {
            out.push_back(make_cluster(targets, target_ids, g));
            continue;
        }
        std::vector<Vec2> pts;
        for (int i : g) pts.push_back(targets[i]);
        Rng rng = Rng::stream(seed, "cluster-split-" + std::to_string(split_counter++));
        const auto assign = kmeans(pts, 2, rng);
        std::vector<int> a, b;
        for (size_t i = 0; i < g.size(); ++i) (assign[i] == 0 ? a : b).push_back(g[i]);
        if (a.empty() || b.empty()) {
            // identical points: split by index
            a.assign(g.begin(), g.begin() + g.size() / 2);
            b.assign(g.begin() + g.size() / 2, g.end());
        }
        work.push_back(std::move(a));
        work.push_back(std::move(b));
    }

    // deterministic output order
    std::sort(out.begin(), out.end(), [](const TargetCluster& a, const TargetCluster& b) {
        const Vec2 ca = a.centroid(), cb = b.centroid();
        if (ca.x != cb.x) return ca.x < cb.x;
        return ca.y < cb.y;
    });
    return out;
}

// --- CVRP ------------------------------------------------------------------------

namespace {

struct Trip {
    std::vector<int> stops;        // cluster indices
    int load = 0;
};

double nearest_depot_dist(const std::vector<Vec2>& depots, const Vec2& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& d : depots) best = std::min(best, dist(d, p));
    return best;
}

double trip_cost(const Trip& t, const std::vector<Vec2>& pts, const std::vector<Vec2>& depots) {
    if (t.stops.empty()) return 0.0;
    double c = nearest_depot_dist(depots, pts[t.stops.front()]);
    for (size_t i = 1; i < t.stops.size(); ++i)
        c += dist(pts[t.stops[i - 1]], pts[t.stops[i]]);
    c += nearest_depot_dist(depots, pts[t.stops.back()]);
    return c;
}

double total_cost(const std::vector<Trip>& trips, const std::vector<Vec2>& pts,
                  const std::vector<Vec2>& depots) {
    double c = 0.0;
    for (const auto& t : trips) c += trip_cost(t, pts, depots);
    return c;
}

// Nearest-neighbor baseline: greedy from the depot, returning when full.
std::vector<Trip> nearest_neighbor_trips(const std::vector<Vec2>& pts,
                                         const std::vector<int>& demand,
                                         const std::vector<Vec2>& depots, int qs) {
    const int n = static_cast<int>(pts.size());
    std::vector<uint8_t> used(n, 0);
    std::vector<Trip> trips;
    int remaining = n;
    while (remaining > 0) {
        Trip t;
        Vec2 cur = depots[0];
        for (;;) {
            int best = -1;
            double bd = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                if (used[i] || t.load + demand[i] > qs) continue;
                const double d = dist(cur, pts[i]);
                if (d < bd) {
                    bd = d;
                    best = i;
                }
            }
            if (best < 0) break;
            used[best] = 1;
            t.stops.push_back(best);
            t.load += demand[best];
            cur = pts[best];
            --remaining;
        }
        if (t.stops.empty()) throw std::runtime_error("cluster demand exceeds fleet capacity");
        trips.push_back(std::move(t));
    }
    return trips;
}

// Clarke-Wright parallel savings.
std::vector<Trip> clarke_wright(const std::vector<Vec2>& pts, const std::vector<int>& demand,
                                const std::vector<Vec2>& depots, int qs) {
    const int n = static_cast<int>(pts.size());
    std::vector<Trip> trips(n);
    std::vector<int> route_of(n);
    for (int i = 0; i < n; ++i) {
        trips[i].stops = {i};
        trips[i].load = demand[i];
        route_of[i] = i;
    }
    struct Saving {
        double s;
        int i, j;
    };
    std::vector<Saving> savings;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double s = nearest_depot_dist(depots, pts[i]) +
                             nearest_depot_dist(depots, pts[j]) - dist(pts[i], pts[j]);
            savings.push_back({s, i, j});
        }
    std::sort(savings.begin(), savings.end(), [](const Saving& a, const Saving& b) {
        if (a.s != b.s) return a.s > b.s;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    for (const auto& sv : savings) {
        const int ri = route_of[sv.i], rj = route_of[sv.j];
        if (ri == rj) continue;
        Trip& a = trips[ri];
        Trip& b = trips[rj];
        if (a.stops.empty() || b.stops.empty()) continue;
        if (a.load + b.load > qs) continue;
        // merge only at route ends
        const bool i_front = a.stops.front() == sv.i, i_back = a.stops.back() == sv.i;
        const bool j_front = b.stops.front() == sv.j, j_back = b.stops.back() == sv.j;
        if (!(i_front || i_back) || !(j_front || j_back)) continue;
        std::vector<int> merged;
        if (i_back && j_front) {
            merged = a.stops;
            merged.insert(merged.end(), b.stops.begin(), b.stops.end());
        } else if (j_back && i_front) {
            merged = b.stops;
            merged.insert(merged.end(), a.stops.begin(), a.stops.end());
        } else if (i_back && j_back) {
            merged = a.stops;
            merged.insert(merged.end(), b.stops.rbegin(), b.stops.rend());
        } else {  // i_front && j_front
            merged.assign(a.stops.rbegin(), a.stops.rend());
            merged.insert(merged.end(), b.stops.begin(), b.stops.end());
        }
        a.stops = std::move(merged);
        a.load += b.load;
        b.stops.clear();
        b.load = 0;
        for (int s : a.stops) route_of[s] = ri;
    }
    std::vector<Trip> out;
    for (auto& t : trips)
        if (!t.stops.empty()) out.push_back(std::move(t));
    return out;
}

// Best-improvement 2-opt (within trips) and relocate (within and across trips)
// until a local optimum.
void local_search(std::vector<Trip>& trips, const std::vector<Vec2>& pts,
                  const std::vector<int>& demand, const std::vector<Vec2>& depots, int qs) {
    bool improved = true;
    while (improved) {
        improved = false;
        double best_delta = -1e-9;
        int best_kind = -1;  // 0: 2-opt, 1: relocate
        int bt = 0, bi = 0, bj = 0, bt2 = 0, bk = 0;

        // 2-opt: reverse stops [i..j] inside one trip
        for (int t = 0; t < static_cast<int>(trips.size()); ++t) {
            const auto& stops = trips[t].stops;
            const int m = static_cast<int>(stops.size());
            if (m < 2) continue;
            const double base = trip_cost(trips[t], pts, depots);
            for (int i = 0; i < m - 1; ++i)
                for (int j = i + 1; j < m; ++j) {
                    Trip cand = trips[t];
                    std::reverse(cand.stops.begin() + i, cand.stops.begin() + j + 1);
                    const double delta = trip_cost(cand, pts, depots) - base;
                    if (delta < best_delta) {
                        best_delta = delta;
                        best_kind = 0;
                        bt = t;
                        bi = i;
                        bj = j;
                    }
                }
        }
        // relocate: move one stop to any position in any trip
        for (int t = 0; t < static_cast<int>(trips.size()); ++t) {
            for (int i = 0; i < static_cast<int>(trips[t].stops.size()); ++i) {
                const int stop = trips[t].stops[i];
                for (int t2 = 0; t2 < static_cast<int>(trips.size()); ++t2) {
                    if (t2 != t && trips[t2].load + demand[stop] > qs) continue;
                    const int m2 = static_cast<int>(trips[t2].stops.size());
                    for (int k = 0; k <= m2; ++k) {
                        if (t2 == t && (k == i || k == i + 1)) continue;
                        std::vector<Trip> cand = trips;
                        cand[t].stops.erase(cand[t].stops.begin() + i);
                        cand[t].load -= demand[stop];
                        int kk = k;
                        if (t2 == t && k > i) --kk;
                        cand[t2].stops.insert(cand[t2].stops.begin() + kk, stop);
                        cand[t2].load += demand[stop];
                        const double delta =
                            total_cost(cand, pts, depots) - total_cost(trips, pts, depots);
                        if (delta < best_delta) {
                            best_delta = delta;
                            best_kind = 1;
                            bt = t;
                            bi = i;
                            bt2 = t2;
                            bk = k;
                        }
                    }
                }
            }
        }
        if (best_kind == 0) {
            std::reverse(trips[bt].stops.begin() + bi, trips[bt].stops.begin() + bj + 1);
            improved = true;
        } else if (best_kind == 1) {
            const int stop = trips[bt].stops[bi];
            trips[bt].stops.erase(trips[bt].stops.begin() + bi);
            trips[bt].load -= demand[stop];
            int kk = bk;
            if (bt2 == bt && bk > bi) --kk;
            trips[bt2].stops.insert(trips[bt2].stops.begin() + kk, stop);
            trips[bt2].load += demand[stop];
            improved = true;
        }
        // drop emptied trips
        trips.erase(std::remove_if(trips.begin(), trips.end(),
                                   [](const Trip& t) { return t.stops.empty(); }),
                    trips.end());
    }
}

int nearest_depot_index(const std::vector<Vec2>& depots, const Vec2& p) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(depots.size()); ++i)
        if (dist(depots[i], p) < dist(depots[best], p)) best = i;
    return best;
}

}  // namespace

Route solve_cvrp(const std::vector<TargetCluster>& clusters,
                 const std::vector<Vec2>& depots, int capacity_qs) {
    if (depots.empty()) throw std::runtime_error("no depot");
    Route route;
    if (clusters.empty()) {
        route.stops.push_back({true, 0});
        return route;
    }
    std::vector<Vec2> pts;
    std::vector<int> demand;
    for (const auto& c : clusters) {
        if (c.size() > capacity_qs)
            throw std::runtime_error("cluster demand exceeds fleet capacity");
        pts.push_back(c.centroid());
        demand.push_back(c.size());
    }

    std::vector<Trip> cw = clarke_wright(pts, demand, depots, capacity_qs);
    std::vector<Trip> nn = nearest_neighbor_trips(pts, demand, depots, capacity_qs);
    std::vector<Trip> trips = (total_cost(cw, pts, depots) <= total_cost(nn, pts, depots))
                                  ? std::move(cw)
                                  : std::move(nn);
    local_search(trips, pts, demand, depots, capacity_qs);

    for (const auto& t : trips) {
        route.stops.push_back({true, nearest_depot_index(depots, pts[t.stops.front()])});
        for (int s : t.stops) route.stops.push_back({false, s});
    }
    route.stops.push_back(
        {true, nearest_depot_index(depots, pts[trips.back().stops.back()])});
    route.total_length = total_cost(trips, pts, depots);
    return route;
}

// --- assignment --------------------------------------------------------------------

std::vector<Assignment> assign_robots(const TargetCluster& cluster, const Fleet& fleet,
                                      const FreeSpaceMask& free_mask, const Environment& env,
                                      const WorkingArea& window, Rng& rng,
                                      double min_separation_um, int max_attempts,
                                      bool throw_on_parking_failure) {
    const int m = static_cast<int>(fleet.robots.size());
    if (m == 0) throw std::runtime_error("empty fleet");
    double max_r = 0.0;
    for (const auto& r : fleet.robots) max_r = std::max(max_r, r.radius_um);
    if (min_separation_um < 0.0) min_separation_um = 4.0 * max_r;  // 2 x max diameter

    // greedy globally-closest matching; ties resolved by robot priority then
    // target index
    std::vector<Assignment> out;
    std::vector<uint8_t> robot_used(m, 0);
    std::vector<uint8_t> target_used(cluster.targets.size(), 0);
    const int n_pairs = std::min<int>(m, cluster.size());
    for (int it = 0; it < n_pairs; ++it) {
        double bd = std::numeric_limits<double>::infinity();
        int br = -1, bt = -1;
        for (int r = 0; r < m; ++r) {
            if (robot_used[r]) continue;
            for (int t = 0; t < cluster.size(); ++t) {
                if (target_used[t]) continue;
                const double d = dist(fleet.robots[r].center, cluster.targets[t]);
                const bool better =
                    d < bd ||
                    (d == bd && br >= 0 &&
                     (fleet.robots[r].priority < fleet.robots[br].priority ||
                      (fleet.robots[r].priority == fleet.robots[br].priority && t < bt)));
                if (better) {
                    bd = d;
                    br = r;
                    bt = t;
                }
            }
        }
        robot_used[br] = 1;
        target_used[bt] = 1;
        out.push_back({br, cluster.targets[bt], bt, false});
    }

    // Poisson-disk parking for the leftover robots
    std::vector<Vec2> goals;
    for (const auto& a : out) goals.push_back(a.goal);
    for (int r = 0; r < m; ++r) {
        if (robot_used[r]) continue;
        const double rr = fleet.robots[r].radius_um;
        bool placed = false;
        for (int attempt = 0; attempt < max_attempts; ++attempt) {
            Vec2 p{rng.uniform(window.origin.x + rr, window.origin.x + window.width_um - rr),
                   rng.uniform(window.origin.y + rr, window.origin.y + window.height_um - rr)};
            const int cx = env.cell_x(p.x), cy = env.cell_y(p.y);
            if (!free_mask.mask.in_bounds(cx, cy) || !free_mask.mask.at(cx, cy)) continue;
            bool ok = true;
            for (const auto& g : goals)
                if (dist(g, p) < min_separation_um) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            goals.push_back(p);
            out.push_back({r, p, -1, false});
            placed = true;
            break;
        }
        if (!placed) {
            if (throw_on_parking_failure) throw std::runtime_error("no idle parking available");
            out.push_back({r, fleet.robots[r].center, -1, true});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Assignment& a, const Assignment& b) { return a.robot_index < b.robot_index; });
    return out;
}

}  // namespace mh
