#pragma once

#include <string>
#include <vector>

#include "microharvest/allocate.hpp"
#include "microharvest/detect.hpp"
#include "microharvest/pathplan.hpp"
#include "microharvest/scene.hpp"
#include "microharvest/sim.hpp"

namespace mh {

// CSV columns: kind,x_px,y_px,radius_px,orientation_rad
void write_detections_csv(const std::string& path, const std::vector<RobotDetection>& robots,
                          const std::vector<SphereDetection>& spheres);

// CSV columns: agent,t,x_um,y_um
void write_paths_csv(const std::string& path, const std::vector<TimedPath>& paths);
std::vector<TimedPath> read_paths_csv(const std::string& path);

// CSV columns: id,x_um,y_um,radius_um,speed_um_s,priority
void write_robots_csv(const std::string& path, const std::vector<Robot>& robots);
std::vector<Robot> read_robots_csv(const std::string& path);

// Dot observations: camera_x,camera_y,projector_x,projector_y
std::vector<std::pair<Vec2, Vec2>> read_dots_csv(const std::string& path);

// CSV columns: order,kind,index,x_um,y_um,n_targets
void write_route_csv(const std::string& path, const Route& route,
                     const std::vector<TargetCluster>& clusters, const std::vector<Vec2>& depots);

void write_journeys_csv(const std::string& path, const ScenarioResult& result);

void write_sweep_runs_csv(const std::string& path, const SweepResult& result);
void write_sweep_bins_csv(const std::string& path, const SweepResult& result,
                          double bin_width = 0.02);

// Fig-5-style curves: success rate vs free-space percentage, one polyline per
// fleet size. `timestamp` adds a comment line (suppress for byte-identical runs).
void write_sweep_svg(const std::string& path, const SweepResult& result, double bin_width,
                     bool timestamp);

// Environment raster (downsampled) with path overlays.
void write_overlay_svg(const std::string& path, const Environment& env,
                       const std::vector<TimedPath>& paths, const std::vector<Robot>& robots,
                       const WorkingArea* window, bool timestamp);

void write_free_space_report(const std::string& path, const Environment& env,
                             double robot_radius_um, double fraction);

// Alternating rows/columns calibration dot pattern images.
void write_calibration_pattern(const std::string& dir, int width_px, int height_px, int rows,
                               int cols, int dot_radius_px);

}  // namespace mh
