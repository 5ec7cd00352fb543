#pragma once

#include <cstdint>
#include <vector>

#include "microharvest/image.hpp"
#include "microharvest/rng.hpp"
#include "microharvest/scene.hpp"
#include "microharvest/shapemodel.hpp"

namespace mh {

enum class DensityMode { Uniform, Variable };

struct GenerationParams {
    double concentration = 1.0;          // cells/uL, clamped to the model range
    DensityMode mode = DensityMode::Uniform;
    double tile_um = 825.0;              // Variable mode tile edge
    double density_scale = 1.0;          // manual scaling of final label density
    double width_um = 10000.0;
    double height_um = 10000.0;
    double resolution_um = 5.0;
    uint64_t seed = 1;
    double start_zone_um = 0.0;          // >0: keep a central square clear (RobotStartZone)
    int max_place_attempts = 1000;       // per region
};

// Rasterizes one region from sampled shape descriptors. The returned mask is
// tightly cropped and 8-connected; its area is grown pixel-by-pixel to the
// sampled area target.
GridU8 generate_region(const ShapeVector& shape, Rng& rng);

Environment generate_environment(const GenerativeModel& model, const GenerationParams& params);

struct RenderParams {
    double background = 0.5;
    double ring_level = 0.25;            // cell outer ring (dark)
    double core_level = 0.8;             // cell center (bright)
    double debris_level = 0.33;
    double debris_texture = 0.06;
    double noise_sigma = 0.02;           // additive Gaussian, [0,1] scale
    double robot_body_level = 0.22;
    double robot_chamber_level = 0.85;
};

struct RobotPose {
    Vec2 center_px;
    double radius_px = 20.0;
    double orientation = 0.0;
};

ImageU8 render_image(const Environment& env, Rng& rng, const RenderParams& params = {},
                     const std::vector<RobotPose>& robots = {});

// Cogwheel sprite: dark toothed annulus around a bright chamber with one
// opening; the opening points along `orientation`.
void stamp_robot_sprite(ImageF& img, const RobotPose& pose, const RenderParams& params);

}  // namespace mh
