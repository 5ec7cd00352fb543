#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "microharvest/geom.hpp"
#include "microharvest/grid.hpp"

namespace mh {

// Cell labels. Debris sub-classes are 2..(1+debris_classes); 6 classes by default.
namespace label {
constexpr uint8_t kFree = 0;
constexpr uint8_t kCell = 1;
constexpr uint8_t kRobotStartZone = 255;
inline uint8_t debris(int k) { return static_cast<uint8_t>(1 + k); }  // k in 1..K
inline bool is_debris(uint8_t v) { return v >= 2 && v != kRobotStartZone; }
// Obstacle for navigation and free-space purposes: targets and debris block,
// free cells and the robot start zone do not.
inline bool is_obstacle(uint8_t v) { return v != kFree && v != kRobotStartZone; }
}  // namespace label

struct Environment {
    double width_um = 10000.0;
    double height_um = 10000.0;
    double resolution_um = 5.0;
    uint64_t rng_seed = 0;   // seed used to generate it; 0 if loaded/constructed
    int debris_classes = 6;
    GridU8 labels;

    Environment() = default;
    Environment(double w_um, double h_um, double res_um)
        : width_um(w_um), height_um(h_um), resolution_um(res_um),
          labels(grid_dim(w_um, res_um), grid_dim(h_um, res_um), label::kFree) {}

    static int grid_dim(double extent_um, double res_um) {
        return static_cast<int>(std::ceil(extent_um / res_um));
    }

    int nx() const { return labels.width(); }
    int ny() const { return labels.height(); }

    Vec2 cell_center(int ix, int iy) const {
        return {(ix + 0.5) * resolution_um, (iy + 0.5) * resolution_um};
    }
    int cell_x(double x_um) const { return static_cast<int>(std::floor(x_um / resolution_um)); }
    int cell_y(double y_um) const { return static_cast<int>(std::floor(y_um / resolution_um)); }
    bool contains(const Vec2& p) const {
        return p.x >= 0.0 && p.y >= 0.0 && p.x <= width_um && p.y <= height_um;
    }
};

struct Robot {
    Vec2 center;
    double orientation = 0.0;      // radians
    double radius_um = 100.0;
    int capacity = 8;
    int priority = 0;              // unique within a fleet; lower plans first
    double speed_um_s = 65.0;
};

struct WorkingArea {
    Vec2 origin;                   // lower corner, device coordinates (um)
    double width_um = 3300.0;
    double height_um = 3300.0;

    bool contains(const Vec2& p) const {
        return p.x >= origin.x && p.y >= origin.y &&
               p.x <= origin.x + width_um && p.y <= origin.y + height_um;
    }
    // Whole disk inside the window.
    bool contains_disk(const Vec2& c, double r) const {
        return c.x - r >= origin.x && c.y - r >= origin.y &&
               c.x + r <= origin.x + width_um && c.y + r <= origin.y + height_um;
    }
};

struct FreeSpaceMask {
    GridU8 mask;       // 1 = a robot center may occupy this cell without collision
    double fraction = 0.0;
};

// Squared Euclidean distance (in cell units) from every cell center to the
// nearest obstacle cell center. Non-obstacle-free grids get +inf everywhere.
// If `ignore_region` >= 0 and `regions` is given, cells of that region are
// treated as free.
GridF obstacle_distance_sq(const Environment& env,
                           int ignore_region = -1,
                           const GridI32* regions = nullptr);

// Exact squared EDT of a boolean grid (distance to nearest set cell), cell units.
GridF distance_sq_transform(const GridU8& obstacles);

FreeSpaceMask compute_free_space(const Environment& env, double robot_radius_um);

// Same, reusing a precomputed obstacle distance field.
FreeSpaceMask compute_free_space(const Environment& env, double robot_radius_um,
                                 const GridF& dist_sq);

WorkingArea fit_working_area(const std::vector<Vec2>& points,
                             double wa_width_um, double wa_height_um,
                             double device_width_um, double device_height_um);

// Connected components (8-connectivity) over obstacle labels. Returns a grid of
// region ids (-1 = background) and per-region label class + centroid + area.
struct LabeledRegion {
    uint8_t label_class = 0;
    Vec2 centroid_um;
    int area_cells = 0;
};
struct RegionMap {
    GridI32 ids;                   // -1 where not an obstacle
    std::vector<LabeledRegion> regions;
};
RegionMap find_regions(const Environment& env);

// --- persistence ---
void save_environment(const Environment& env, const std::string& path);
Environment load_environment(const std::string& path);
void export_environment_pgm(const Environment& env, const std::string& path);

}  // namespace mh
