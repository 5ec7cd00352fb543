#include "microharvest/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mh {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::runtime_error("unknown config key '" + it.key() + "' in " + where);
}

template <typename T>
void get(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

json scenario_to_json(const ScenarioConfig& s) {
    json j;
    j["device_width_um"] = s.device_width_um;
    j["device_height_um"] = s.device_height_um;
    j["resolution_um"] = s.resolution_um;
    j["depot_extent_um"] = s.depot_extent_um;
    j["wa_extent_um"] = s.wa_extent_um;
    j["fleet_size"] = s.fleet_size;
    j["robot_radius_um"] = s.robot_radius_um;
    j["robot_speed_um_s"] = s.robot_speed_um_s;
    j["robot_capacity"] = s.robot_capacity;
    j["seed"] = s.seed;
    j["verify_paths"] = s.verify_paths;
    j["max_trips_per_stop"] = s.max_trips_per_stop;
    return j;
}

void scenario_from_json(const json& j, ScenarioConfig& s) {
    check_keys(j,
               {"device_width_um", "device_height_um", "resolution_um", "depot_extent_um",
                "wa_extent_um", "fleet_size", "robot_radius_um", "robot_speed_um_s",
                "robot_capacity", "seed", "verify_paths", "max_trips_per_stop"},
               "scenario");
    get(j, "device_width_um", s.device_width_um);
    get(j, "device_height_um", s.device_height_um);
    get(j, "resolution_um", s.resolution_um);
    get(j, "depot_extent_um", s.depot_extent_um);
    get(j, "wa_extent_um", s.wa_extent_um);
    get(j, "fleet_size", s.fleet_size);
    get(j, "robot_radius_um", s.robot_radius_um);
    get(j, "robot_speed_um_s", s.robot_speed_um_s);
    get(j, "robot_capacity", s.robot_capacity);
    get(j, "seed", s.seed);
    get(j, "verify_paths", s.verify_paths);
    get(j, "max_trips_per_stop", s.max_trips_per_stop);
}

json generation_to_json(const GenerationParams& g) {
    json j;
    j["concentration"] = g.concentration;
    j["mode"] = g.mode == DensityMode::Uniform ? "uniform" : "variable";
    j["tile_um"] = g.tile_um;
    j["density_scale"] = g.density_scale;
    j["width_um"] = g.width_um;
    j["height_um"] = g.height_um;
    j["resolution_um"] = g.resolution_um;
    j["seed"] = g.seed;
    j["start_zone_um"] = g.start_zone_um;
    j["max_place_attempts"] = g.max_place_attempts;
    return j;
}

void generation_from_json(const json& j, GenerationParams& g) {
    check_keys(j,
               {"concentration", "mode", "tile_um", "density_scale", "width_um", "height_um",
                "resolution_um", "seed", "start_zone_um", "max_place_attempts"},
               "generation");
    get(j, "concentration", g.concentration);
    if (j.contains("mode")) {
        const std::string m = j.at("mode").get<std::string>();
        if (m == "uniform") g.mode = DensityMode::Uniform;
        else if (m == "variable") g.mode = DensityMode::Variable;
        else throw std::runtime_error("generation.mode must be 'uniform' or 'variable'");
    }
    get(j, "tile_um", g.tile_um);
    get(j, "density_scale", g.density_scale);
    get(j, "width_um", g.width_um);
    get(j, "height_um", g.height_um);
    get(j, "resolution_um", g.resolution_um);
    get(j, "seed", g.seed);
    get(j, "start_zone_um", g.start_zone_um);
    get(j, "max_place_attempts", g.max_place_attempts);
}

json planner_to_json(const PlannerOptions& p) {
    json j;
    j["safety_margin_um"] = p.safety_margin_um;
    j["lattice_stride_cells"] = p.lattice_stride_cells;
    j["horizon_s"] = p.horizon_s;
    j["max_expansions"] = p.max_expansions;
    return j;
}

void planner_from_json(const json& j, PlannerOptions& p) {
    check_keys(j, {"safety_margin_um", "lattice_stride_cells", "horizon_s", "max_expansions"},
               "planner");
    get(j, "safety_margin_um", p.safety_margin_um);
    get(j, "lattice_stride_cells", p.lattice_stride_cells);
    get(j, "horizon_s", p.horizon_s);
    get(j, "max_expansions", p.max_expansions);
}

json detect_to_json(const DetectionParams& d) {
    json j;
    j["t_ar"] = d.t_ar;
    j["t_sl"] = d.t_sl;
    j["t_sh"] = d.t_sh;
    j["min_branches"] = d.min_branches;
    j["clahe_clip"] = d.clahe_clip;
    j["clahe_tile"] = d.clahe_tile;
    j["gauss_sigma"] = d.gauss_sigma;
    j["robot_dark_lo"] = d.robot_dark_lo;
    j["robot_dark_hi"] = d.robot_dark_hi;
    j["chamber_bright_lo"] = d.chamber_bright_lo;
    j["chamber_bright_hi"] = d.chamber_bright_hi;
    j["chamber_min_area"] = d.chamber_min_area;
    j["robot_open_radius"] = d.robot_open_radius;
    j["robot_close_radius"] = d.robot_close_radius;
    j["robot_fill_dilate"] = d.robot_fill_dilate;
    j["robot_min_area"] = d.robot_min_area;
    j["robot_max_area"] = d.robot_max_area;
    j["center_bright_min"] = d.center_bright_min;
    j["canny_lo"] = d.canny_lo;
    j["canny_hi"] = d.canny_hi;
    j["canny_close_radius"] = d.canny_close_radius;
    j["sphere_sigma"] = d.sphere_sigma;
    j["sphere_hi_lo"] = d.sphere_hi_lo;
    j["sphere_hi_hi"] = d.sphere_hi_hi;
    j["sphere_lo_lo"] = d.sphere_lo_lo;
    j["sphere_lo_hi"] = d.sphere_lo_hi;
    j["sphere_close_radius"] = d.sphere_close_radius;
    j["sphere_open_radius"] = d.sphere_open_radius;
    j["sphere_min_area"] = d.sphere_min_area;
    j["sphere_max_area"] = d.sphere_max_area;
    j["sphere_max_skeleton_factor"] = d.sphere_max_skeleton_factor;
    j["debris_min_area"] = d.debris_min_area;
    j["debris_max_area"] = d.debris_max_area;
    return j;
}

void detect_from_json(const json& j, DetectionParams& d) {
    check_keys(j, {"t_ar", "t_sl", "t_sh", "min_branches", "clahe_clip", "clahe_tile",
                   "gauss_sigma", "robot_dark_lo", "robot_dark_hi", "chamber_bright_lo",
                   "chamber_bright_hi", "chamber_min_area", "robot_open_radius",
                   "robot_close_radius", "robot_fill_dilate", "robot_min_area", "robot_max_area",
                   "center_bright_min", "canny_lo", "canny_hi", "canny_close_radius",
                   "sphere_sigma", "sphere_hi_lo", "sphere_hi_hi", "sphere_lo_lo", "sphere_lo_hi",
                   "sphere_close_radius", "sphere_open_radius", "sphere_min_area",
                   "sphere_max_area", "sphere_max_skeleton_factor", "debris_min_area",
                   "debris_max_area"},
               "detect");
    get(j, "t_ar", d.t_ar);
    get(j, "t_sl", d.t_sl);
    get(j, "t_sh", d.t_sh);
    get(j, "min_branches", d.min_branches);
    get(j, "clahe_clip", d.clahe_clip);
    get(j, "clahe_tile", d.clahe_tile);
    get(j, "gauss_sigma", d.gauss_sigma);
    get(j, "robot_dark_lo", d.robot_dark_lo);
    get(j, "robot_dark_hi", d.robot_dark_hi);
    get(j, "chamber_bright_lo", d.chamber_bright_lo);
    get(j, "chamber_bright_hi", d.chamber_bright_hi);
    get(j, "chamber_min_area", d.chamber_min_area);
    get(j, "robot_open_radius", d.robot_open_radius);
    get(j, "robot_close_radius", d.robot_close_radius);
    get(j, "robot_fill_dilate", d.robot_fill_dilate);
    get(j, "robot_min_area", d.robot_min_area);
    get(j, "robot_max_area", d.robot_max_area);
    get(j, "center_bright_min", d.center_bright_min);
    get(j, "canny_lo", d.canny_lo);
    get(j, "canny_hi", d.canny_hi);
    get(j, "canny_close_radius", d.canny_close_radius);
    get(j, "sphere_sigma", d.sphere_sigma);
    get(j, "sphere_hi_lo", d.sphere_hi_lo);
    get(j, "sphere_hi_hi", d.sphere_hi_hi);
    get(j, "sphere_lo_lo", d.sphere_lo_lo);
    get(j, "sphere_lo_hi", d.sphere_lo_hi);
    get(j, "sphere_close_radius", d.sphere_close_radius);
    get(j, "sphere_open_radius", d.sphere_open_radius);
    get(j, "sphere_min_area", d.sphere_min_area);
    get(j, "sphere_max_area", d.sphere_max_area);
    get(j, "sphere_max_skeleton_factor", d.sphere_max_skeleton_factor);
    get(j, "debris_min_area", d.debris_min_area);
    get(j, "debris_max_area", d.debris_max_area);
}

json render_to_json(const RenderParams& r) {
    json j;
    j["background"] = r.background;
    j["ring_level"] = r.ring_level;
    j["core_level"] = r.core_level;
    j["debris_level"] = r.debris_level;
    j["debris_texture"] = r.debris_texture;
    j["noise_sigma"] = r.noise_sigma;
    j["robot_body_level"] = r.robot_body_level;
    j["robot_chamber_level"] = r.robot_chamber_level;
    return j;
}

void render_from_json(const json& j, RenderParams& r) {
    check_keys(j,
               {"background", "ring_level", "core_level", "debris_level", "debris_texture",
                "noise_sigma", "robot_body_level", "robot_chamber_level"},
               "render");
    get(j, "background", r.background);
    get(j, "ring_level", r.ring_level);
    get(j, "core_level", r.core_level);
    get(j, "debris_level", r.debris_level);
    get(j, "debris_texture", r.debris_texture);
    get(j, "noise_sigma", r.noise_sigma);
    get(j, "robot_body_level", r.robot_body_level);
    get(j, "robot_chamber_level", r.robot_chamber_level);
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["version"] = RunConfig::kVersion;
    j["scenario"] = scenario_to_json(c.scenario);
    j["generation"] = generation_to_json(c.scenario.gen);
    j["planner"] = planner_to_json(c.scenario.planner);
    j["detect"] = detect_to_json(c.detect);
    j["render"] = render_to_json(c.render);
    j["match_radius_px"] = c.match_radius_px;
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    json j = json::parse(text);
    check_keys(j, {"version", "scenario", "generation", "planner", "detect", "render",
                   "match_radius_px"},
               "config root");
    if (!j.contains("version"))
        throw std::runtime_error("config missing 'version'");
    if (j.at("version").get<int>() != RunConfig::kVersion)
        throw std::runtime_error("unsupported config version");
    RunConfig c;
    if (j.contains("scenario")) scenario_from_json(j.at("scenario"), c.scenario);
    if (j.contains("generation")) generation_from_json(j.at("generation"), c.scenario.gen);
    if (j.contains("planner")) planner_from_json(j.at("planner"), c.scenario.planner);
    if (j.contains("detect")) detect_from_json(j.at("detect"), c.detect);
    if (j.contains("render")) render_from_json(j.at("render"), c.render);
    get(j, "match_radius_px", c.match_radius_px);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return run_config_from_json(ss.str());
}

void save_run_config(const RunConfig& config, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << run_config_to_json(config);
}

}  // namespace mh
