#include "microharvest/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "microharvest/image.hpp"

namespace mh {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    return os;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

std::string now_comment() {
    char buf[64];
    const std::time_t t = std::time(nullptr);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
    return std::string("<!-- generated ") + buf + " -->\n";
}

}  // namespace

void write_detections_csv(const std::string& path, const std::vector<RobotDetection>& robots,
                          const std::vector<SphereDetection>& spheres) {
    auto os = open_out(path);
    os << "kind,x_px,y_px,radius_px,orientation_rad\n";
    for (const auto& r : robots)
        os << "robot," << fmt(r.center.x) << "," << fmt(r.center.y) << "," << fmt(r.radius) << ","
           << fmt(r.orientation) << "\n";
    for (const auto& s : spheres)
        os << "sphere," << fmt(s.center.x) << "," << fmt(s.center.y) << "," << fmt(s.radius)
           << ",0.000000\n";
}

void write_paths_csv(const std::string& path, const std::vector<TimedPath>& paths) {
    auto os = open_out(path);
    os << "agent,t,x_um,y_um\n";
    for (const auto& p : paths)
        for (const auto& wp : p.waypoints)
            os << p.agent << "," << fmt(wp.t) << "," << fmt(wp.pos.x) << "," << fmt(wp.pos.y)
               << "\n";
}

std::vector<TimedPath> read_paths_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(is, line);  // header
    std::map<int, TimedPath> by_agent;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw std::runtime_error("malformed path row: " + line);
        const int agent = std::stoi(f[0]);
        by_agent[agent].agent = agent;
        by_agent[agent].waypoints.push_back({{std::stod(f[2]), std::stod(f[3])}, std::stod(f[1])});
    }
    std::vector<TimedPath> out;
    for (auto& [id, p] : by_agent) out.push_back(std::move(p));
    return out;
}

void write_robots_csv(const std::string& path, const std::vector<Robot>& robots) {
    auto os = open_out(path);
    os << "id,x_um,y_um,radius_um,speed_um_s,priority\n";
    for (size_t i = 0; i < robots.size(); ++i)
        os << i << "," << fmt(robots[i].center.x) << "," << fmt(robots[i].center.y) << ","
           << fmt(robots[i].radius_um) << "," << fmt(robots[i].speed_um_s) << ","
           << robots[i].priority << "\n";
}

std::vector<Robot> read_robots_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(is, line);
    std::vector<Robot> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw std::runtime_error("malformed robot row: " + line);
        Robot r;
        r.center = {std::stod(f[1]), std::stod(f[2])};
        r.radius_um = std::stod(f[3]);
        r.speed_um_s = std::stod(f[4]);
        r.priority = std::stoi(f[5]);
        out.push_back(r);
    }
    return out;
}

std::vector<std::pair<Vec2, Vec2>> read_dots_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(is, line);
    std::vector<std::pair<Vec2, Vec2>> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw std::runtime_error("malformed dot row: " + line);
        out.push_back({{std::stod(f[0]), std::stod(f[1])}, {std::stod(f[2]), std::stod(f[3])}});
    }
    return out;
}

void write_route_csv(const std::string& path, const Route& route,
                     const std::vector<TargetCluster>& clusters,
                     const std::vector<Vec2>& depots) {
    auto os = open_out(path);
    os << "order,kind,index,x_um,y_um,n_targets\n";
    int order = 0;
    for (const auto& stop : route.stops) {
        if (stop.is_depot) {
            os << order++ << ",depot," << stop.index << "," << fmt(depots[stop.index].x) << ","
               << fmt(depots[stop.index].y) << ",0\n";
        } else {
            const Vec2 c = clusters[stop.index].centroid();
            os << order++ << ",cluster," << stop.index << "," << fmt(c.x) << "," << fmt(c.y) << ","
               << clusters[stop.index].size() << "\n";
        }
    }
}

void write_journeys_csv(const std::string& path, const ScenarioResult& result) {
    auto os = open_out(path);
    os << "stop,trip,robot,target_region,success,cause,path_length_um,duration_s\n";
    for (const auto& j : result.journeys)
        os << j.stop_index << "," << j.trip_index << "," << j.robot << "," << j.target_region
           << "," << (j.success ? 1 : 0) << ","
           << (j.success ? "-"
                         : (j.cause == FailureCause::InvalidStartGoal ? "invalid_start_goal"
                                                                      : "plan_failure"))
           << "," << fmt(j.path_length_um) << "," << fmt(j.duration_s) << "\n";
}

void write_sweep_runs_csv(const std::string& path, const SweepResult& result) {
    auto os = open_out(path);
    os << "fleet_size,density_scale,seed,runnable,free_space_fraction,journeys,succeeded,"
          "failures_invalid,failures_plan,targets_total,targets_collected\n";
    for (const auto& r : result.runs) {
        os << r.fleet_size << "," << fmt(r.density_scale) << "," << r.seed << ","
           << (r.result.runnable ? 1 : 0) << "," << fmt(r.result.free_space_fraction) << ","
           << r.result.journeys_attempted << "," << r.result.journeys_succeeded << ","
           << r.result.failures_invalid << "," << r.result.failures_plan << ","
           << r.result.targets_total << "," << r.result.targets_collected << "\n";
    }
}

void write_sweep_bins_csv(const std::string& path, const SweepResult& result, double bin_width) {
    auto os = open_out(path);
    os << "fleet_size,free_space_lo,free_space_hi,scenarios,journeys,mean_success_rate,"
          "invalid_start_goal_share,plan_failure_share\n";
    for (const auto& row : result.binned(bin_width))
        os << row.fleet_size << "," << fmt(row.free_lo) << "," << fmt(row.free_hi) << ","
           << row.scenarios << "," << row.journeys << "," << fmt(row.mean_success) << ","
           << fmt(row.invalid_share) << "," << fmt(row.plan_share) << "\n";
}

void write_sweep_svg(const std::string& path, const SweepResult& result, double bin_width,
                     bool timestamp) {
    const auto rows = result.binned(bin_width);
    const int W = 720, H = 480, ML = 70, MB = 50, MT = 20, MR = 20;
    auto os = open_out(path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n";
    if (timestamp) os << now_comment();
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    auto px = [&](double frac) { return ML + frac * (W - ML - MR); };
    auto py = [&](double rate) { return H - MB - rate * (H - MB - MT); };
    // axes
    os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
       << H - MB << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 10; ++i) {
        os << "<text x=\"" << px(i / 10.0) << "\" y=\"" << H - MB + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << i * 10 << "</text>\n";
        os << "<text x=\"" << ML - 8 << "\" y=\"" << py(i / 10.0) + 4
           << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(i / 10.0) << "</text>\n";
    }
    os << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 12
       << "\" font-size=\"13\" text-anchor=\"middle\">free space (%)</text>\n";
    os << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (MT + H - MB) / 2 << ")\">journey success rate</text>\n";

    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b"};
    std::map<int, std::vector<const SweepBinRow*>> by_m;
    for (const auto& r : rows) by_m[r.fleet_size].push_back(&r);
    int ci = 0;
    for (const auto& [m, series] : by_m) {
        const char* color = colors[ci % 6];
        std::ostringstream pts;
        for (const auto* r : series)
            pts << px((r->free_lo + r->free_hi) / 2.0) << "," << py(r->mean_success) << " ";
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\""
           << pts.str() << "\"/>\n";
        for (const auto* r : series)
            os << "<circle cx=\"" << px((r->free_lo + r->free_hi) / 2.0) << "\" cy=\""
               << py(r->mean_success) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        os << "<text x=\"" << W - MR - 60 << "\" y=\"" << MT + 16 + 16 * ci
           << "\" font-size=\"12\" fill=\"" << color << "\">m = " << m << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
}

void write_overlay_svg(const std::string& path, const Environment& env,
                       const std::vector<TimedPath>& paths, const std::vector<Robot>& robots,
                       const WorkingArea* window, bool timestamp) {
    const int max_cells = 250;
    const int block = std::max(1, std::max(env.nx(), env.ny()) / max_cells);
    const int gw = (env.nx() + block - 1) / block, gh = (env.ny() + block - 1) / block;
    const double scale = 700.0 / std::max(env.width_um, env.height_um);
    const double cell_px = block * env.resolution_um * scale;

    auto os = open_out(path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
       << static_cast<int>(env.width_um * scale) << "\" height=\""
       << static_cast<int>(env.height_um * scale) << "\">\n";
    if (timestamp) os << now_comment();
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n";

    // downsampled raster: a block is drawn with its dominant obstacle class
    for (int by = 0; by < gh; ++by)
        for (int bx = 0; bx < gw; ++bx) {
            int cell_count = 0, debris_count = 0, zone_count = 0;
            for (int y = by * block; y < std::min(env.ny(), (by + 1) * block); ++y)
                for (int x = bx * block; x < std::min(env.nx(), (bx + 1) * block); ++x) {
                    const uint8_t v = env.labels.at(x, y);
                    if (v == label::kCell) ++cell_count;
                    else if (label::is_debris(v)) ++debris_count;
                    else if (v == label::kRobotStartZone) ++zone_count;
                }
            const char* fill = nullptr;
            if (cell_count > 0 && cell_count >= debris_count) fill = "#d62728";
            else if (debris_count > 0) fill = "#2ca02c";
            else if (zone_count > 0) fill = "#dddddd";
            if (!fill) continue;
            os << "<rect x=\"" << fmt(bx * cell_px) << "\" y=\"" << fmt(by * cell_px)
               << "\" width=\"" << fmt(cell_px) << "\" height=\"" << fmt(cell_px) << "\" fill=\""
               << fill << "\"/>\n";
        }

    if (window) {
        os << "<rect x=\"" << fmt(window->origin.x * scale) << "\" y=\""
           << fmt(window->origin.y * scale) << "\" width=\"" << fmt(window->width_um * scale)
           << "\" height=\"" << fmt(window->height_um * scale)
           << "\" fill=\"none\" stroke=\"#9467bd\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n";
    }

    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#17becf", "#e377c2", "#bcbd22",
                                   "#8c564b"};
    for (size_t i = 0; i < paths.size(); ++i) {
        if (paths[i].waypoints.empty()) continue;
        const char* color = colors[i % 6];
        std::ostringstream pts;
        for (const auto& wp : paths[i].waypoints)
            pts << fmt(wp.pos.x * scale) << "," << fmt(wp.pos.y * scale) << " ";
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    }
    for (size_t i = 0; i < robots.size(); ++i) {
        const char* color = colors[i % 6];
        os << "<circle cx=\"" << fmt(robots[i].center.x * scale) << "\" cy=\""
           << fmt(robots[i].center.y * scale) << "\" r=\"" << fmt(robots[i].radius_um * scale)
           << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    }
    os << "</svg>\n";
}

void write_free_space_report(const std::string& path, const Environment& env,
                             double robot_radius_um, double fraction) {
    auto os = open_out(path);
    os << "device_um," << fmt(env.width_um) << "x" << fmt(env.height_um) << "\n";
    os << "resolution_um," << fmt(env.resolution_um) << "\n";
    os << "seed," << env.rng_seed << "\n";
    os << "robot_radius_um," << fmt(robot_radius_um) << "\n";
    os << "free_space_fraction," << fmt(fraction) << "\n";
}

void write_calibration_pattern(const std::string& dir, int width_px, int height_px, int rows,
                               int cols, int dot_radius_px) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const double sx = static_cast<double>(width_px) / (cols + 1);
    const double sy = static_cast<double>(height_px) / (rows + 1);
    auto stamp_dot = [&](ImageU8& img, double cx, double cy) {
        for (int y = std::max(0, static_cast<int>(cy - dot_radius_px - 1));
             y <= std::min(height_px - 1, static_cast<int>(cy + dot_radius_px + 1)); ++y)
            for (int x = std::max(0, static_cast<int>(cx - dot_radius_px - 1));
                 x <= std::min(width_px - 1, static_cast<int>(cx + dot_radius_px + 1)); ++x)
                if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= dot_radius_px) img.at(x, y) = 255;
    };
    // alternating pattern: odd rows first, even rows second, then columns
    int frame = 0;
    for (int parity = 0; parity < 2; ++parity) {
        ImageU8 img(width_px, height_px, 0);
        for (int r = parity; r < rows; r += 2)
            for (int c = 0; c < cols; ++c) stamp_dot(img, (c + 1) * sx, (r + 1) * sy);
        save_pgm(img, dir + "/pattern_rows_" + std::to_string(frame++) + ".pgm");
    }
    frame = 0;
    for (int parity = 0; parity < 2; ++parity) {
        ImageU8 img(width_px, height_px, 0);
        for (int c = parity; c < cols; c += 2)
            for (int r = 0; r < rows; ++r) stamp_dot(img, (c + 1) * sx, (r + 1) * sy);
        save_pgm(img, dir + "/pattern_cols_" + std::to_string(frame++) + ".pgm");
    }
}

}  // namespace mh
