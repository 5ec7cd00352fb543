#pragma once

#include <string>

#include "microharvest/detect.hpp"
#include "microharvest/envgen.hpp"
#include "microharvest/sim.hpp"

namespace mh {

// Structured run configuration; one file drives every module's parameter set.
// Unknown keys are rejected; the schema is versioned.
struct RunConfig {
    static constexpr int kVersion = 1;
    ScenarioConfig scenario;       // includes generation and planner parameters
    DetectionParams detect;
    RenderParams render;
    double match_radius_px = 6.0;  // detection scoring radius
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& config, const std::string& path);
std::string run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);

}  // namespace mh
