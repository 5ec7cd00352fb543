#pragma once

#include <string>
#include <vector>

#include "microharvest/geom.hpp"
#include "microharvest/image.hpp"
#include "microharvest/imgops.hpp"

namespace mh {

struct DetectionParams {
    // candidate shape constraints
    double t_ar = 1.30;            // aspect-ratio cap, major/minor
    double t_sl = 0.45;            // solidity lower bound
    double t_sh = 0.75;            // solidity upper bound
    int min_branches = 5;          // skeleton branches for a cogwheel

    // shared preprocessing
    double clahe_clip = 2.0;
    int clahe_tile = 64;
    double gauss_sigma = 2.0;

    // microrobot, intensity mode (thresholds on [0,1] CLAHE intensity)
    double robot_dark_lo = 0.60;       // darkness = 1 - intensity
    double robot_dark_hi = 0.70;
    double chamber_bright_lo = 0.68;
    double chamber_bright_hi = 0.78;
    int chamber_min_area = 40;
    int robot_open_radius = 1;
    int robot_close_radius = 2;
    int robot_fill_dilate = 1;
    int robot_min_area = 350;
    int robot_max_area = 5000;
    double center_bright_min = 0.60;   // mean CLAHE intensity in the core disk

    // microrobot, edge mode
    double canny_lo = 0.06;
    double canny_hi = 0.16;
    int canny_close_radius = 3;

    // microsphere / cell detector (thresholds on [0,1] equalized gradients)
    double sphere_sigma = 1.0;
    double sphere_hi_lo = 0.30;
    double sphere_hi_hi = 0.55;
    double sphere_lo_lo = 0.16;
    double sphere_lo_hi = 0.35;
    int sphere_close_radius = 1;
    int sphere_open_radius = 1;
    int sphere_min_area = 30;
    int sphere_max_area = 1200;
    double sphere_max_skeleton_factor = 1.6;  // vs. equivalent-circle perimeter

    // debris labelling
    int debris_min_area = 12;
    int debris_max_area = 250000;
};

enum class RobotDetectionMode { Intensity, Edge };

struct RobotDetection {
    Vec2 center;                   // px
    double radius = 0.0;           // px
    double orientation = 0.0;      // radians in [0, pi)
    RobotDetectionMode mode = RobotDetectionMode::Intensity;
};

struct SphereDetection {
    Vec2 center;                   // px
    double radius = 0.0;           // px
};

std::vector<RobotDetection> detect_microrobots(const ImageU8& img, const DetectionParams& p);
std::vector<SphereDetection> detect_microspheres(const ImageU8& img, const DetectionParams& p);

GridU8 label_debris(const ImageU8& img, const std::vector<SphereDetection>& spheres,
                    const DetectionParams& p);

struct MatchScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int tp = 0, fp = 0, fn = 0;
};
// Greedy nearest-first one-to-one matching within match_radius.
MatchScore score_detections(const std::vector<Vec2>& predicted,
                            const std::vector<Vec2>& truth, double match_radius);

// Camera -> projector mapping built from projected dot observations. The
// control grid is rectangular in projector space; queries interpolate
// bilinearly within the deformed camera-space quads.
class CalibrationMap {
public:
    CalibrationMap() = default;
    CalibrationMap(int rows, int cols, std::vector<Vec2> camera, std::vector<Vec2> projector);

    Vec2 apply(const Vec2& camera_px) const;
    int rows() const { return rows_; }
    int cols() const { return cols_; }

    void save(const std::string& path) const;
    static CalibrationMap load(const std::string& path);

private:
    const Vec2& cam(int r, int c) const { return camera_[static_cast<size_t>(r) * cols_ + c]; }
    const Vec2& prj(int r, int c) const { return projector_[static_cast<size_t>(r) * cols_ + c]; }

    int rows_ = 0, cols_ = 0;
    std::vector<Vec2> camera_;     // row-major control points
    std::vector<Vec2> projector_;
};

CalibrationMap build_calibration(const std::vector<std::pair<Vec2, Vec2>>& dot_observations);

}  // namespace mh
