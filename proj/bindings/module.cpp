#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "microharvest/allocate.hpp"
#include "microharvest/config.hpp"
#include "microharvest/detect.hpp"
#include "microharvest/envgen.hpp"
#include "microharvest/pathplan.hpp"
#include "microharvest/scene.hpp"
#include "microharvest/shapemodel.hpp"
#include "microharvest/sim.hpp"

namespace py = pybind11;
using namespace mh;

namespace {

py::array_t<uint8_t> grid_to_array(const GridU8& g) {
    py::array_t<uint8_t> arr({g.height(), g.width()});
    std::memcpy(arr.mutable_data(), g.data().data(), g.size());
    return arr;
}

GridU8 array_to_grid(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::runtime_error("expected a 2-D array");
    GridU8 g(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
    std::memcpy(g.data().data(), arr.data(), g.size());
    return g;
}

Vec2 to_vec2(const std::pair<double, double>& p) { return {p.first, p.second}; }

std::vector<Vec2> to_vec2_list(const std::vector<std::pair<double, double>>& pts) {
    std::vector<Vec2> out;
    for (const auto& p : pts) out.push_back(to_vec2(p));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "microharvest: planning and simulation for optoelectronic microrobot harvesting";

    py::class_<Vec2>(m, "Vec2")
        .def(py::init<double, double>())
        .def_readwrite("x", &Vec2::x)
        .def_readwrite("y", &Vec2::y)
        .def("__repr__", [](const Vec2& v) {
            return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ")";
        });

    py::class_<Environment>(m, "Environment")
        .def(py::init<double, double, double>(), py::arg("width_um"), py::arg("height_um"),
             py::arg("resolution_um"))
        .def_readonly("width_um", &Environment::width_um)
        .def_readonly("height_um", &Environment::height_um)
        .def_readonly("resolution_um", &Environment::resolution_um)
        .def_readonly("rng_seed", &Environment::rng_seed)
        .def_property_readonly("labels", [](const Environment& e) { return grid_to_array(e.labels); })
        .def("save", &save_environment, py::arg("path"));

    m.def("load_environment", &load_environment);
    m.def("export_environment_pgm", &export_environment_pgm);

    py::class_<Robot>(m, "Robot")
        .def(py::init<>())
        .def_readwrite("center", &Robot::center)
        .def_readwrite("orientation", &Robot::orientation)
        .def_readwrite("radius_um", &Robot::radius_um)
        .def_readwrite("capacity", &Robot::capacity)
        .def_readwrite("priority", &Robot::priority)
        .def_readwrite("speed_um_s", &Robot::speed_um_s);

    py::class_<WorkingArea>(m, "WorkingArea")
        .def(py::init<>())
        .def_readwrite("origin", &WorkingArea::origin)
        .def_readwrite("width_um", &WorkingArea::width_um)
        .def_readwrite("height_um", &WorkingArea::height_um);

    py::class_<FreeSpaceMask>(m, "FreeSpaceMask")
        .def_readonly("fraction", &FreeSpaceMask::fraction)
        .def_property_readonly("mask",
                               [](const FreeSpaceMask& f) { return grid_to_array(f.mask); });

    m.def("compute_free_space",
          [](const Environment& env, double r) { return compute_free_space(env, r); },
          py::arg("env"), py::arg("robot_radius_um"));
    m.def("fit_working_area",
          [](const std::vector<std::pair<double, double>>& pts, double ww, double wh, double dw,
             double dh) { return fit_working_area(to_vec2_list(pts), ww, wh, dw, dh); });

    // shape model
    py::class_<ShapeVector>(m, "ShapeVector")
        .def(py::init<>())
        .def_readwrite("area", &ShapeVector::area)
        .def_readwrite("major_axis", &ShapeVector::major_axis)
        .def_readwrite("minor_axis", &ShapeVector::minor_axis)
        .def_readwrite("solidity", &ShapeVector::solidity)
        .def_readwrite("thickness", &ShapeVector::thickness)
        .def_readwrite("fiber_length", &ShapeVector::fiber_length)
        .def_readwrite("n_branches", &ShapeVector::n_branches);

    m.def("extract_shape_descriptors",
          [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& mask) {
              return extract_shape_descriptors(array_to_grid(mask));
          });

    py::class_<GenerativeModel>(m, "GenerativeModel")
        .def_readonly("train_image_area_um2", &GenerativeModel::train_image_area_um2);
    m.def("default_model", &default_model);
    m.def("load_model", &load_model);
    m.def("save_model", &save_model);

    // environment generation and rendering
    py::enum_<DensityMode>(m, "DensityMode")
        .value("Uniform", DensityMode::Uniform)
        .value("Variable", DensityMode::Variable);

    py::class_<GenerationParams>(m, "GenerationParams")
        .def(py::init<>())
        .def_readwrite("concentration", &GenerationParams::concentration)
        .def_readwrite("mode", &GenerationParams::mode)
        .def_readwrite("tile_um", &GenerationParams::tile_um)
        .def_readwrite("density_scale", &GenerationParams::density_scale)
        .def_readwrite("width_um", &GenerationParams::width_um)
        .def_readwrite("height_um", &GenerationParams::height_um)
        .def_readwrite("resolution_um", &GenerationParams::resolution_um)
        .def_readwrite("seed", &GenerationParams::seed)
        .def_readwrite("start_zone_um", &GenerationParams::start_zone_um)
        .def_readwrite("max_place_attempts", &GenerationParams::max_place_attempts);

    m.def("generate_environment", &generate_environment);

    py::class_<RenderParams>(m, "RenderParams")
        .def(py::init<>())
        .def_readwrite("background", &RenderParams::background)
        .def_readwrite("ring_level", &RenderParams::ring_level)
        .def_readwrite("core_level", &RenderParams::core_level)
        .def_readwrite("debris_level", &RenderParams::debris_level)
        .def_readwrite("debris_texture", &RenderParams::debris_texture)
        .def_readwrite("noise_sigma", &RenderParams::noise_sigma);

    py::class_<RobotPose>(m, "RobotPose")
        .def(py::init<>())
        .def_readwrite("center_px", &RobotPose::center_px)
        .def_readwrite("radius_px", &RobotPose::radius_px)
        .def_readwrite("orientation", &RobotPose::orientation);

    m.def("render_image",
          [](const Environment& env, uint64_t seed, const RenderParams& params,
             const std::vector<RobotPose>& robots) {
              Rng rng = Rng::stream(seed, "render");
              return grid_to_array(render_image(env, rng, params, robots));
          },
          py::arg("env"), py::arg("seed") = 1, py::arg("params") = RenderParams{},
          py::arg("robots") = std::vector<RobotPose>{});

    // detection
    py::class_<DetectionParams>(m, "DetectionParams").def(py::init<>());
    py::class_<RobotDetection>(m, "RobotDetection")
        .def_readonly("center", &RobotDetection::center)
        .def_readonly("radius", &RobotDetection::radius)
        .def_readonly("orientation", &RobotDetection::orientation);
    py::class_<SphereDetection>(m, "SphereDetection")
        .def_readonly("center", &SphereDetection::center)
        .def_readonly("radius", &SphereDetection::radius);
    py::class_<MatchScore>(m, "MatchScore")
        .def_readonly("precision", &MatchScore::precision)
        .def_readonly("recall", &MatchScore::recall)
        .def_readonly("f1", &MatchScore::f1)
        .def_readonly("tp", &MatchScore::tp)
        .def_readonly("fp", &MatchScore::fp)
        .def_readonly("fn", &MatchScore::fn);

    m.def("detect_microrobots",
          [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& img,
             const DetectionParams& p) { return detect_microrobots(array_to_grid(img), p); },
          py::arg("image"), py::arg("params") = DetectionParams{});
    m.def("detect_microspheres",
          [](const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& img,
             const DetectionParams& p) { return detect_microspheres(array_to_grid(img), p); },
          py::arg("image"), py::arg("params") = DetectionParams{});
    m.def("score_detections",
          [](const std::vector<std::pair<double, double>>& pred,
             const std::vector<std::pair<double, double>>& truth, double r) {
              return score_detections(to_vec2_list(pred), to_vec2_list(truth), r);
          });

    py::class_<CalibrationMap>(m, "CalibrationMap")
        .def("apply", [](const CalibrationMap& m_, const std::pair<double, double>& p) {
            const Vec2 r = m_.apply(to_vec2(p));
            return std::make_pair(r.x, r.y);
        });
    m.def("build_calibration",
          [](const std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>&
                 obs) {
              std::vector<std::pair<Vec2, Vec2>> conv;
              for (const auto& [c, p] : obs) conv.push_back({to_vec2(c), to_vec2(p)});
              return build_calibration(conv);
          });

    // allocation
    py::class_<TargetCluster>(m, "TargetCluster")
        .def_property_readonly("targets",
                               [](const TargetCluster& c) {
                                   std::vector<std::pair<double, double>> out;
                                   for (const auto& t : c.targets) out.push_back({t.x, t.y});
                                   return out;
                               })
        .def_property_readonly("size", &TargetCluster::size);
    m.def("cluster_targets",
          [](const std::vector<std::pair<double, double>>& pts, double ww, double wh, int qs,
             uint64_t seed, double pad) {
              return cluster_targets(to_vec2_list(pts), ww, wh, qs, seed, pad);
          },
          py::arg("targets"), py::arg("wa_width_um"), py::arg("wa_height_um"),
          py::arg("capacity_qs"), py::arg("seed") = 1, py::arg("pad_um") = 200.0);

    py::class_<RouteStop>(m, "RouteStop")
        .def_readonly("is_depot", &RouteStop::is_depot)
        .def_readonly("index", &RouteStop::index);
    py::class_<Route>(m, "Route")
        .def_readonly("stops", &Route::stops)
        .def_readonly("total_length", &Route::total_length);
    m.def("solve_cvrp",
          [](const std::vector<TargetCluster>& clusters,
             const std::vector<std::pair<double, double>>& depots, int qs) {
              return solve_cvrp(clusters, to_vec2_list(depots), qs);
          });

    // planning
    py::enum_<AgentOutcome>(m, "AgentOutcome")
        .value("Success", AgentOutcome::Success)
        .value("InvalidStartGoal", AgentOutcome::InvalidStartGoal)
        .value("PlanFailure", AgentOutcome::PlanFailure);

    py::class_<TimedWaypoint>(m, "TimedWaypoint")
        .def_readonly("pos", &TimedWaypoint::pos)
        .def_readonly("t", &TimedWaypoint::t);
    py::class_<TimedPath>(m, "TimedPath")
        .def_readonly("agent", &TimedPath::agent)
        .def_readonly("waypoints", &TimedPath::waypoints)
        .def("length", &TimedPath::length)
        .def("end_time", &TimedPath::end_time);

    py::class_<AgentTask>(m, "AgentTask")
        .def(py::init<>())
        .def_readwrite("robot", &AgentTask::robot)
        .def_readwrite("start", &AgentTask::start)
        .def_readwrite("goal", &AgentTask::goal);

    py::class_<PlannerOptions>(m, "PlannerOptions")
        .def(py::init<>())
        .def_readwrite("safety_margin_um", &PlannerOptions::safety_margin_um)
        .def_readwrite("lattice_stride_cells", &PlannerOptions::lattice_stride_cells)
        .def_readwrite("horizon_s", &PlannerOptions::horizon_s)
        .def_readwrite("max_expansions", &PlannerOptions::max_expansions);

    py::class_<PlanReport>(m, "PlanReport")
        .def_readonly("outcomes", &PlanReport::outcomes)
        .def_readonly("paths", &PlanReport::paths)
        .def_readonly("makespan", &PlanReport::makespan)
        .def_readonly("total_length", &PlanReport::total_length);

    m.def("plan_paths",
          [](const Environment& env, const std::vector<AgentTask>& agents,
             const WorkingArea& window, const PlannerOptions& opts) {
              return plan_paths(env, agents, window, opts);
          },
          py::arg("env"), py::arg("agents"), py::arg("window"),
          py::arg("options") = PlannerOptions{});

    py::class_<ConflictReport>(m, "ConflictReport")
        .def_readonly("clean", &ConflictReport::clean)
        .def_property_readonly("n_conflicts", [](const ConflictReport& r) {
            return r.conflicts.size();
        });
    m.def("verify_plan",
          [](const Environment& env, const std::vector<TimedPath>& paths,
             const std::vector<Robot>& robots, const WorkingArea& window) {
              return verify_plan(env, paths, robots, window);
          });
    m.def("line_of_sight",
          [](const Environment& env, const std::pair<double, double>& a,
             const std::pair<double, double>& b, double radius) {
              return line_of_sight(env, to_vec2(a), to_vec2(b), radius);
          });

    // simulation
    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("device_width_um", &ScenarioConfig::device_width_um)
        .def_readwrite("device_height_um", &ScenarioConfig::device_height_um)
        .def_readwrite("resolution_um", &ScenarioConfig::resolution_um)
        .def_readwrite("depot_extent_um", &ScenarioConfig::depot_extent_um)
        .def_readwrite("wa_extent_um", &ScenarioConfig::wa_extent_um)
        .def_readwrite("fleet_size", &ScenarioConfig::fleet_size)
        .def_readwrite("robot_radius_um", &ScenarioConfig::robot_radius_um)
        .def_readwrite("robot_speed_um_s", &ScenarioConfig::robot_speed_um_s)
        .def_readwrite("robot_capacity", &ScenarioConfig::robot_capacity)
        .def_readwrite("gen", &ScenarioConfig::gen)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("planner", &ScenarioConfig::planner)
        .def_readwrite("verify_paths", &ScenarioConfig::verify_paths);

    py::class_<ScenarioResult>(m, "ScenarioResult")
        .def_readonly("runnable", &ScenarioResult::runnable)
        .def_readonly("error", &ScenarioResult::error)
        .def_readonly("free_space_fraction", &ScenarioResult::free_space_fraction)
        .def_readonly("journeys_attempted", &ScenarioResult::journeys_attempted)
        .def_readonly("journeys_succeeded", &ScenarioResult::journeys_succeeded)
        .def_readonly("failures_invalid", &ScenarioResult::failures_invalid)
        .def_readonly("failures_plan", &ScenarioResult::failures_plan)
        .def_readonly("all_legs_verified", &ScenarioResult::all_legs_verified)
        .def_readonly("targets_total", &ScenarioResult::targets_total)
        .def_readonly("targets_collected", &ScenarioResult::targets_collected)
        .def("success_rate", &ScenarioResult::success_rate);

    m.def("run_scenario",
          [](const ScenarioConfig& cfg, const GenerativeModel& model) {
              return run_scenario(cfg, model);
          },
          py::arg("config"), py::arg("model"));

    m.attr("__version__") = "1.0.0";
}
