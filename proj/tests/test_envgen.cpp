#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "microharvest/envgen.hpp"
#include "microharvest/imgops.hpp"

using namespace mh;

TEST_CASE("region with no branches has at most two skeleton endpoints") {
    const GenerativeModel model = default_model();
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        ShapeVector s = sample_shape(model, label::debris(4), rng);
        s.n_branches = 0;
        const GridU8 mask = generate_region(s, rng);
        GridU8 padded(mask.width() + 2, mask.height() + 2, 0);
        for (int y = 0; y < mask.height(); ++y)
            for (int x = 0; x < mask.width(); ++x)
                if (mask.at(x, y)) padded.at(x + 1, y + 1) = 1;
        const SkeletonInfo sk = analyze_skeleton(padded, 2.0);
        CHECK(sk.endpoints <= 2);
    }
}

TEST_CASE("region area lands within 15% of the sampled target") {
    const GenerativeModel model = default_model();
    Rng rng(12);
    const uint8_t classes[] = {label::kCell,     label::debris(1), label::debris(2),
                               label::debris(3), label::debris(4), label::debris(5),
                               label::debris(6)};
    for (int trial = 0; trial < 120; ++trial) {
        const uint8_t cls = classes[trial % 7];
        const ShapeVector s = sample_shape(model, cls, rng);
        const GridU8 mask = generate_region(s, rng);
        int area = 0;
        for (size_t i = 0; i < mask.size(); ++i) area += mask[i];
        const double target = std::round(s.area);
        CHECK(std::abs(area - target) / target <= 0.15);
    }
}

TEST_CASE("region masks are a single 8-connected component") {
    const GenerativeModel model = default_model();
    Rng rng(13);
    for (int trial = 0; trial < 60; ++trial) {
        const ShapeVector s = sample_shape(model, label::debris(1 + trial % 6), rng);
        const GridU8 mask = generate_region(s, rng);
        GridI32 ids;
        CHECK(connected_components(mask, ids, 8) == 1);
    }
}

TEST_CASE("generate_region is deterministic for a fixed seed") {
    const GenerativeModel model = default_model();
    Rng s1(77);
    const ShapeVector shape = sample_shape(model, label::debris(5), s1);
    Rng a(123), b(123);
    const GridU8 m1 = generate_region(shape, a);
    const GridU8 m2 = generate_region(shape, b);
    CHECK(m1.data() == m2.data());
    CHECK(m1.width() == m2.width());
}

TEST_CASE("tiny area target yields the smallest stamp without error") {
    ShapeVector s;
    s.area = 1.0;
    s.major_axis = 1.0;
    s.minor_axis = 1.0;
    s.solidity = 1.0;
    s.thickness = 1.0;
    s.fiber_length = 1.0;
    s.n_branches = 0.0;
    Rng rng(5);
    const GridU8 m = generate_region(s, rng);
    int area = 0;
    for (size_t i = 0; i < m.size(); ++i) area += m[i];
    CHECK(area >= 1);
    CHECK(area <= 4);
}

TEST_CASE("uniform mode produces the scaled rounded per-class counts") {
    const GenerativeModel model = default_model();
    GenerationParams params;
    params.concentration = 400.0;
    params.mode = DensityMode::Uniform;
    params.density_scale = 0.25;  // keep the fixture quick but non-trivial
    params.width_um = 3300.0;     // training image size: area factor 1
    params.height_um = 3300.0;
    params.resolution_um = 5.0;
    params.seed = 21;
    const Environment env = generate_environment(model, params);

    const Mvn& dist = model.nearest_dist_model(400.0);
    const double factor = model.count_curve.eval(400.0) / dist.mean.sum();
    std::map<uint8_t, int> expected;
    for (int c = 0; c < 7; ++c) {
        const uint8_t cls = (c == 0) ? label::kCell : label::debris(c);
        expected[cls] =
            static_cast<int>(std::floor(dist.mean(c) * factor * params.density_scale + 0.5));
    }

    const RegionMap rm = find_regions(env);
    std::map<uint8_t, int> actual;
    for (const auto& r : rm.regions) ++actual[r.label_class];
    for (const auto& [cls, count] : expected) CHECK(actual[cls] == count);
}

TEST_CASE("variable mode rejects tiles that do not divide the extent") {
    const GenerativeModel model = default_model();
    GenerationParams params;
    params.mode = DensityMode::Variable;
    params.tile_um = 900.0;  // does not divide 3300
    params.width_um = 3300.0;
    params.height_um = 3300.0;
    CHECK_THROWS_WITH(generate_environment(model, params),
                      "tile size must divide the device extent");
}

TEST_CASE("variable mode per-class counts scale with the device area") {
    const GenerativeModel model = default_model();
    double small_total = 0.0, big_total = 0.0;
    const int n_seeds = 6;
    for (int s = 0; s < n_seeds; ++s) {
        GenerationParams params;
        params.concentration = 50.0;
        params.mode = DensityMode::Variable;
        params.tile_um = 825.0;
        params.density_scale = 0.3;
        params.resolution_um = 5.0;
        params.seed = 100 + s;
        params.width_um = 1650.0;
        params.height_um = 1650.0;
        small_total += find_regions(generate_environment(model, params)).regions.size();
        params.width_um = 3300.0;  // 4x the area
        params.height_um = 3300.0;
        big_total += find_regions(generate_environment(model, params)).regions.size();
    }
    const double ratio = big_total / std::max(1.0, small_total);
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("generation is deterministic and keeps the start zone clear") {
    const GenerativeModel model = default_model();
    GenerationParams params;
    params.concentration = 100.0;
    params.density_scale = 0.2;
    params.width_um = 3300.0;
    params.height_um = 3300.0;
    params.start_zone_um = 1000.0;
    params.seed = 31;
    const Environment a = generate_environment(model, params);
    const Environment b = generate_environment(model, params);
    CHECK(a.labels == b.labels);

    // central square holds only start-zone cells
    const int x0 = a.cell_x(3300.0 / 2 - 500.0) + 1, x1 = a.cell_x(3300.0 / 2 + 500.0) - 1;
    for (int y = x0; y <= x1; ++y)
        for (int x = x0; x <= x1; ++x) CHECK(a.labels.at(x, y) == label::kRobotStartZone);
}

TEST_CASE("rendering an empty environment with zero noise is uniform") {
    Environment env(500.0, 500.0, 5.0);
    RenderParams rp;
    rp.noise_sigma = 0.0;
    rp.debris_texture = 0.0;
    Rng rng(1);
    const ImageU8 img = render_image(env, rng, rp);
    for (size_t i = 1; i < img.size(); ++i) CHECK(img[i] == img[0]);
}

TEST_CASE("a rendered cell shows ring darker than background darker than core") {
    Environment env(500.0, 500.0, 5.0);
    // hand-placed round cell region, radius 6 cells at the center
    for (int y = 0; y < env.ny(); ++y)
        for (int x = 0; x < env.nx(); ++x)
            if (std::hypot(x + 0.5 - 50.0, y + 0.5 - 50.0) <= 6.0)
                env.labels.at(x, y) = label::kCell;
    RenderParams rp;
    rp.noise_sigma = 0.0;
    rp.debris_texture = 0.0;
    Rng rng(1);
    const ImageU8 img = render_image(env, rng, rp);
    double ring_sum = 0, core_sum = 0, bg_sum = 0;
    int ring_n = 0, core_n = 0, bg_n = 0;
    for (int y = 0; y < env.ny(); ++y)
        for (int x = 0; x < env.nx(); ++x) {
            const double d = std::hypot(x + 0.5 - 50.0, y + 0.5 - 50.0);
            if (d <= 2.0) {
                core_sum += img.at(x, y);
                ++core_n;
            } else if (d > 4.0 && d <= 6.0) {
                ring_sum += img.at(x, y);
                ++ring_n;
            } else if (d > 10.0) {
                bg_sum += img.at(x, y);
                ++bg_n;
            }
        }
    const double ring = ring_sum / ring_n, core = core_sum / core_n, bg = bg_sum / bg_n;
    CHECK(ring < bg);
    CHECK(bg < core);
}

TEST_CASE("rendering is bit-identical for identical seeds") {
    const GenerativeModel model = default_model();
    GenerationParams params;
    params.concentration = 50.0;
    params.density_scale = 0.2;
    params.width_um = 1650.0;
    params.height_um = 1650.0;
    params.seed = 9;
    const Environment env = generate_environment(model, params);
    Rng r1 = Rng::stream(9, "render");
    Rng r2 = Rng::stream(9, "render");
    const ImageU8 a = render_image(env, r1);
    const ImageU8 b = render_image(env, r2);
    CHECK(a.data() == b.data());
}

TEST_CASE("placement failure reports an environment-too-dense error") {
    const GenerativeModel model = default_model();
    GenerationParams params;
    params.concentration = 400.0;
    params.density_scale = 40.0;  // far beyond what fits
    params.width_um = 825.0;
    params.height_um = 825.0;
    params.max_place_attempts = 20;
    bool threw = false;
    try {
        generate_environment(model, params);
    } catch (const std::exception& e) {
        threw = true;
        CHECK(std::string(e.what()).find("environment too dense") == 0);
    }
    CHECK(threw);
}
