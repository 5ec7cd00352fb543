#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "microharvest/artifacts.hpp"
#include "microharvest/config.hpp"
#include "microharvest/detect.hpp"
#include "microharvest/envgen.hpp"
#include "microharvest/pathplan.hpp"
#include "microharvest/scene.hpp"
#include "microharvest/shapemodel.hpp"
#include "microharvest/sim.hpp"

namespace fs = std::filesystem;
using namespace mh;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    uint64_t seed = 1;
    bool seed_set = false;
    bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "run configuration file (JSON)");
    cmd->add_option("--out-dir", c.out_dir, "output directory");
    cmd->add_option("--seed", c.seed, "root random seed")->each([&](const std::string&) {
        c.seed_set = true;
    });
    cmd->add_flag("--deterministic", c.deterministic, "suppress timestamp comments in SVG output");
}

RunConfig load_config(const CommonOpts& c) {
    RunConfig cfg;
    if (!c.config_path.empty()) cfg = load_run_config(c.config_path);
    if (c.seed_set) {
        cfg.scenario.seed = c.seed;
        cfg.scenario.gen.seed = c.seed;
    }
    return cfg;
}

GenerativeModel load_model_or_default(const std::string& path) {
    return path.empty() ? default_model() : load_model(path);
}

std::vector<int> parse_int_range(const std::string& text) {
    const auto dots = text.find("..");
    std::vector<int> out;
    if (dots != std::string::npos) {
        const int lo = std::stoi(text.substr(0, dots));
        const int hi = std::stoi(text.substr(dots + 2));
        for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw CLI::ValidationError("empty integer range");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw CLI::ValidationError("empty list");
    return out;
}

std::vector<Vec2> read_points_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<Vec2> pts;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        pts.push_back({std::stod(a), std::stod(b)});
    }
    return pts;
}

int cmd_generate(const CommonOpts& common, const std::string& model_path, double concentration,
                 const std::string& mode, double density_scale, double width_um, double height_um,
                 double resolution_um, double start_zone_um, double radius_um, double tile_um) {
    RunConfig cfg = load_config(common);
    GenerationParams gen = cfg.scenario.gen;
    gen.concentration = concentration;
    gen.density_scale = density_scale;
    gen.width_um = width_um;
    gen.height_um = height_um;
    gen.resolution_um = resolution_um;
    gen.start_zone_um = start_zone_um;
    gen.seed = common.seed_set ? common.seed : cfg.scenario.gen.seed;
    if (tile_um > 0.0) gen.tile_um = tile_um;
    if (mode == "uniform") gen.mode = DensityMode::Uniform;
    else if (mode == "variable") gen.mode = DensityMode::Variable;
    else throw std::runtime_error("mode must be 'uniform' or 'variable'");

    const GenerativeModel model = load_model_or_default(model_path);
    const Environment env = generate_environment(model, gen);
    fs::create_directories(common.out_dir);
    save_environment(env, common.out_dir + "/environment.mhenv");
    export_environment_pgm(env, common.out_dir + "/environment.pgm");
    const FreeSpaceMask fsm = compute_free_space(env, radius_um);
    write_free_space_report(common.out_dir + "/free_space.csv", env, radius_um, fsm.fraction);
    std::cout << "environment " << env.nx() << "x" << env.ny() << " cells, free space "
              << fsm.fraction * 100.0 << "% at radius " << radius_um << " um\n";
    return 0;
}

int cmd_render(const CommonOpts& common, const std::string& env_path, const std::string& out_name,
               const std::vector<std::string>& robot_specs) {
    RunConfig cfg = load_config(common);
    const Environment env = load_environment(env_path);
    std::vector<RobotPose> poses;
    for (const auto& spec : robot_specs) {
        const auto vals = parse_double_list(spec);
        if (vals.size() != 4)
            throw std::runtime_error("robot pose must be x_px,y_px,radius_px,orientation_rad");
        poses.push_back({{vals[0], vals[1]}, vals[2], vals[3]});
    }
    Rng rng = Rng::stream(common.seed_set ? common.seed : env.rng_seed, "render");
    const ImageU8 img = render_image(env, rng, cfg.render, poses);
    fs::create_directories(common.out_dir);
    save_pgm(img, common.out_dir + "/" + out_name);
    std::cout << "rendered " << img.width() << "x" << img.height() << " -> " << out_name << "\n";
    return 0;
}

int cmd_detect(const CommonOpts& common, const std::string& image_path, const std::string& kind,
               const std::string& truth_path, double match_radius) {
    RunConfig cfg = load_config(common);
    const ImageU8 img = load_pgm(image_path);
    std::vector<RobotDetection> robots;
    std::vector<SphereDetection> spheres;
    if (kind == "robots" || kind == "all") robots = detect_microrobots(img, cfg.detect);
    if (kind == "cells" || kind == "spheres" || kind == "all")
        spheres = detect_microspheres(img, cfg.detect);
    fs::create_directories(common.out_dir);
    write_detections_csv(common.out_dir + "/detections.csv", robots, spheres);
    std::cout << robots.size() << " robots, " << spheres.size() << " spheres/cells\n";
    if (!truth_path.empty()) {
        const auto truth = read_points_csv(truth_path);
        std::vector<Vec2> pred;
        for (const auto& s : spheres) pred.push_back(s.center);
        for (const auto& r : robots) pred.push_back(r.center);
        const double mr = match_radius > 0 ? match_radius : cfg.match_radius_px;
        const MatchScore score = score_detections(pred, truth, mr);
        std::ofstream os(common.out_dir + "/score.csv");
        os << "precision,recall,f1,tp,fp,fn\n"
           << score.precision << "," << score.recall << "," << score.f1 << "," << score.tp << ","
           << score.fp << "," << score.fn << "\n";
        std::cout << "precision " << score.precision << " recall " << score.recall << " f1 "
                  << score.f1 << "\n";
    }
    return 0;
}

int cmd_calibrate(const CommonOpts& common, const std::string& dots_path, bool emit_pattern,
                  int pat_w, int pat_h, int pat_rows, int pat_cols, int pat_dot) {
    fs::create_directories(common.out_dir);
    if (emit_pattern) {
        write_calibration_pattern(common.out_dir + "/pattern", pat_w, pat_h, pat_rows, pat_cols,
                                  pat_dot);
        std::cout << "wrote calibration dot patterns\n";
        if (dots_path.empty()) return 0;
    }
    if (dots_path.empty()) throw std::runtime_error("--dots observations file required");
    const auto dots = read_dots_csv(dots_path);
    const CalibrationMap map = build_calibration(dots);
    map.save(common.out_dir + "/calibration.txt");
    std::cout << "calibration grid " << map.rows() << "x" << map.cols() << "\n";
    return 0;
}

int cmd_plan(const CommonOpts& common, const std::string& env_path, const std::string& tasks_path,
             const std::string& window_spec) {
    RunConfig cfg = load_config(common);
    const Environment env = load_environment(env_path);

    std::ifstream is(tasks_path);
    if (!is) throw std::runtime_error("cannot open: " + tasks_path);
    std::string line;
    std::getline(is, line);
    std::vector<AgentTask> tasks;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto vals = parse_double_list(line);
        if (vals.size() != 7)
            throw std::runtime_error(
                "task row must be x_um,y_um,goal_x_um,goal_y_um,radius_um,speed_um_s,priority");
        AgentTask t;
        t.start = {vals[0], vals[1]};
        t.goal = {vals[2], vals[3]};
        t.robot.center = t.start;
        t.robot.radius_um = vals[4];
        t.robot.speed_um_s = vals[5];
        t.robot.priority = static_cast<int>(vals[6]);
        tasks.push_back(t);
    }

    WorkingArea window{{0, 0}, env.width_um, env.height_um};
    if (!window_spec.empty()) {
        const auto vals = parse_double_list(window_spec);
        if (vals.size() != 4) throw std::runtime_error("window must be x_um,y_um,width_um,height_um");
        window = {{vals[0], vals[1]}, vals[2], vals[3]};
    }

    const PlanReport report = plan_paths(env, tasks, window, cfg.scenario.planner);
    fs::create_directories(common.out_dir);
    write_paths_csv(common.out_dir + "/paths.csv", report.paths);
    std::vector<Robot> robots;
    for (const auto& t : tasks) robots.push_back(t.robot);
    write_robots_csv(common.out_dir + "/robots.csv", robots);
    write_overlay_svg(common.out_dir + "/overlay.svg", env, report.paths, robots, &window,
                      !common.deterministic);
    int succ = report.count(AgentOutcome::Success);
    std::cout << succ << "/" << tasks.size() << " agents planned, makespan " << report.makespan
              << " s, total length " << report.total_length << " um\n";
    for (size_t i = 0; i < tasks.size(); ++i) {
        const char* oc = report.outcomes[i] == AgentOutcome::Success ? "success"
                         : report.outcomes[i] == AgentOutcome::InvalidStartGoal
                             ? "invalid_start_goal"
                             : "plan_failure";
        std::cout << "agent " << i << ": " << oc << "\n";
    }
    return 0;
}

int cmd_simulate(const CommonOpts& common, const std::string& model_path, int fleet_size,
                 double concentration, double density_scale) {
    RunConfig cfg = load_config(common);
    ScenarioConfig sc = cfg.scenario;
    if (fleet_size > 0) sc.fleet_size = fleet_size;
    if (concentration > 0) sc.gen.concentration = concentration;
    if (density_scale > 0) sc.gen.density_scale = density_scale;
    if (common.seed_set) sc.seed = common.seed;

    const GenerativeModel model = load_model_or_default(model_path);
    ScenarioTrace trace;
    const ScenarioResult res = run_scenario(sc, model, &trace);
    if (!res.runnable) throw std::runtime_error("scenario unrunnable: " + res.error);

    const std::string dir = common.out_dir + "/seed" + std::to_string(sc.seed);
    fs::create_directories(dir);
    save_environment(trace.initial_env, dir + "/environment.mhenv");
    export_environment_pgm(trace.initial_env, dir + "/environment.pgm");
    write_route_csv(dir + "/route.csv", trace.route, trace.clusters,
                    {{sc.device_width_um / 2, sc.device_height_um / 2}});
    write_journeys_csv(dir + "/journeys.csv", res);
    for (const auto& leg : trace.legs) {
        write_paths_csv(dir + "/paths_" + leg.name + ".csv", leg.paths);
        write_overlay_svg(dir + "/overlay_" + leg.name + ".svg", trace.initial_env, leg.paths,
                          leg.robots, &leg.window, !common.deterministic);
    }
    std::cout << "journeys " << res.journeys_succeeded << "/" << res.journeys_attempted
              << " succeeded; free space " << res.free_space_fraction * 100.0
              << "%; failures invalid=" << res.failures_invalid
              << " plan=" << res.failures_plan << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& common, const std::string& model_path, const std::string& robots,
              const std::string& densities, int seeds, int jobs) {
    RunConfig cfg = load_config(common);
    ScenarioConfig sc = cfg.scenario;
    if (common.seed_set) sc.seed = common.seed;
    const GenerativeModel model = load_model_or_default(model_path);
    const auto fleet_sizes = parse_int_range(robots);
    const auto density_scales = parse_double_list(densities);

    const SweepResult result = sweep(sc, fleet_sizes, density_scales, seeds, model, jobs);
    fs::create_directories(common.out_dir);
    write_sweep_runs_csv(common.out_dir + "/sweep_runs.csv", result);
    write_sweep_bins_csv(common.out_dir + "/sweep_bins.csv", result);
    write_sweep_svg(common.out_dir + "/sweep_curves.svg", result, 0.02, !common.deterministic);
    std::cout << result.runs.size() << " scenarios, " << result.unrunnable << " unrunnable\n";
    return 0;
}

int cmd_verify(const CommonOpts& common, const std::string& env_path,
               const std::string& paths_path, const std::string& robots_path,
               const std::string& window_spec) {
    (void)common;
    const Environment env = load_environment(env_path);
    const auto paths = read_paths_csv(paths_path);
    const auto robots = read_robots_csv(robots_path);
    WorkingArea window{{0, 0}, env.width_um, env.height_um};
    if (!window_spec.empty()) {
        const auto vals = parse_double_list(window_spec);
        if (vals.size() != 4) throw std::runtime_error("window must be x_um,y_um,width_um,height_um");
        window = {{vals[0], vals[1]}, vals[2], vals[3]};
    }
    const ConflictReport report = verify_plan(env, paths, robots, window);
    if (report.clean) {
        std::cout << "clean\n";
        return 0;
    }
    for (const auto& c : report.conflicts) {
        const char* kind = c.kind == Conflict::Kind::AgentAgent       ? "agent-agent"
                           : c.kind == Conflict::Kind::StaticOverlap  ? "static-overlap"
                           : c.kind == Conflict::Kind::WindowViolation ? "window-violation"
                                                                       : "speed-violation";
        std::cout << "conflict " << kind << " agents " << c.agent_a << "," << c.agent_b << " at t="
                  << c.time << " pos=(" << c.pos.x << "," << c.pos.y << ")\n";
    }
    throw std::runtime_error("plan has " + std::to_string(report.conflicts.size()) + " conflicts");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"microharvest: microrobot harvesting planning and simulation toolkit"};
    app.require_subcommand(1);

    std::string emit_config_path;
    app.add_option("--emit-default-config", emit_config_path,
                   "write the default configuration file and exit")
        ->expected(1);

    CommonOpts c_gen, c_render, c_detect, c_cal, c_plan, c_sim, c_sweep, c_verify;

    auto* gen = app.add_subcommand("generate", "generate a synthetic environment");
    add_common(gen, c_gen);
    std::string gen_model, gen_mode = "uniform";
    double gen_conc = 1.0, gen_scale = 1.0, gen_w = 10000, gen_h = 10000, gen_res = 5.0,
           gen_zone = 0.0, gen_radius = 100.0, gen_tile = 0.0;
    gen->add_option("--model", gen_model, "generative model file (default: built-in)");
    gen->add_option("--concentration", gen_conc, "cells/uL in [1,400]");
    gen->add_option("--mode", gen_mode, "uniform|variable");
    gen->add_option("--density-scale", gen_scale, "manual density scaling factor");
    gen->add_option("--width-um", gen_w, "device width");
    gen->add_option("--height-um", gen_h, "device height");
    gen->add_option("--resolution-um", gen_res, "grid resolution");
    gen->add_option("--start-zone-um", gen_zone, "central clear square size (0 = none)");
    gen->add_option("--radius-um", gen_radius, "robot radius for the free-space report");
    gen->add_option("--tile-um", gen_tile, "variable-mode tile size");

    auto* ren = app.add_subcommand("render", "render an environment to a grayscale image");
    add_common(ren, c_render);
    std::string ren_env, ren_out = "render.pgm";
    std::vector<std::string> ren_robots;
    ren->add_option("--env", ren_env, "environment file")->required();
    ren->add_option("--out", ren_out, "output image name");
    ren->add_option("--robot", ren_robots, "robot sprite pose x_px,y_px,radius_px,orientation");

    auto* det = app.add_subcommand("detect", "detect robots/cells in an image");
    add_common(det, c_detect);
    std::string det_img, det_kind = "all", det_truth;
    double det_mr = 0.0;
    det->add_option("--image", det_img, "input PGM image")->required();
    det->add_option("--kind", det_kind, "robots|cells|all");
    det->add_option("--truth", det_truth, "ground-truth points CSV (x_px,y_px) for scoring");
    det->add_option("--match-radius", det_mr, "scoring match radius (px)");

    auto* cal = app.add_subcommand("calibrate", "camera-projector calibration from dot pairs");
    add_common(cal, c_cal);
    std::string cal_dots;
    bool cal_emit = false;
    int cal_w = 1024, cal_h = 1024, cal_rows = 9, cal_cols = 9, cal_dot = 4;
    cal->add_option("--dots", cal_dots, "observations CSV (cam_x,cam_y,prj_x,prj_y)");
    cal->add_flag("--emit-calibration-pattern", cal_emit, "write alternating dot pattern PGMs");
    cal->add_option("--pattern-width", cal_w, "pattern width px");
    cal->add_option("--pattern-height", cal_h, "pattern height px");
    cal->add_option("--pattern-rows", cal_rows, "dot rows");
    cal->add_option("--pattern-cols", cal_cols, "dot columns");
    cal->add_option("--pattern-dot-radius", cal_dot, "dot radius px");

    auto* pln = app.add_subcommand("plan", "plan collision-free paths for disk agents");
    add_common(pln, c_plan);
    std::string pln_env, pln_tasks, pln_window;
    pln->add_option("--env", pln_env, "environment file")->required();
    pln->add_option("--tasks", pln_tasks,
                    "tasks CSV: x_um,y_um,goal_x_um,goal_y_um,radius_um,speed_um_s,priority")
        ->required();
    pln->add_option("--window", pln_window, "working area x_um,y_um,width_um,height_um");

    auto* sim = app.add_subcommand("simulate", "run one harvesting scenario");
    add_common(sim, c_sim);
    std::string sim_model;
    int sim_m = 0;
    double sim_conc = 0.0, sim_scale = 0.0;
    sim->add_option("--model", sim_model, "generative model file (default: built-in)");
    sim->add_option("--robots", sim_m, "fleet size");
    sim->add_option("--concentration", sim_conc, "cells/uL");
    sim->add_option("--density-scale", sim_scale, "density scaling factor");

    auto* swp = app.add_subcommand("sweep", "run a fleet-size x density sweep");
    add_common(swp, c_sweep);
    std::string swp_model, swp_robots = "1..5", swp_densities = "1.0";
    int swp_seeds = 10, swp_jobs = 1;
    swp->add_option("--model", swp_model, "generative model file (default: built-in)");
    swp->add_option("--robots", swp_robots, "fleet sizes, e.g. 1..5 or 1,3,5");
    swp->add_option("--densities", swp_densities, "density scales, e.g. 0.1,0.2,0.5");
    swp->add_option("--seeds", swp_seeds, "seeds per grid point");
    swp->add_option("--jobs", swp_jobs, "parallel scenario jobs");

    auto* ver = app.add_subcommand("verify", "verify stored paths against an environment");
    add_common(ver, c_verify);
    std::string ver_env, ver_paths, ver_robots, ver_window;
    ver->add_option("--env", ver_env, "environment file")->required();
    ver->add_option("--paths", ver_paths, "paths CSV")->required();
    ver->add_option("--robots", ver_robots, "robots CSV")->required();
    ver->add_option("--window", ver_window, "working area x_um,y_um,width_um,height_um");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        std::fprintf(stderr, "error: usage: %s\n", e.what());
        return 2;
    }

    try {
        if (!emit_config_path.empty()) {
            save_run_config(RunConfig{}, emit_config_path);
            std::cout << "wrote " << emit_config_path << "\n";
            return 0;
        }
        if (gen->parsed())
            return cmd_generate(c_gen, gen_model, gen_conc, gen_mode, gen_scale, gen_w, gen_h,
                                gen_res, gen_zone, gen_radius, gen_tile);
        if (ren->parsed()) return cmd_render(c_render, ren_env, ren_out, ren_robots);
        if (det->parsed()) return cmd_detect(c_detect, det_img, det_kind, det_truth, det_mr);
        if (cal->parsed())
            return cmd_calibrate(c_cal, cal_dots, cal_emit, cal_w, cal_h, cal_rows, cal_cols,
                                 cal_dot);
        if (pln->parsed()) return cmd_plan(c_plan, pln_env, pln_tasks, pln_window);
        if (sim->parsed()) return cmd_simulate(c_sim, sim_model, sim_m, sim_conc, sim_scale);
        if (swp->parsed())
            return cmd_sweep(c_sweep, swp_model, swp_robots, swp_densities, swp_seeds, swp_jobs);
        if (ver->parsed()) return cmd_verify(c_verify, ver_env, ver_paths, ver_robots, ver_window);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
