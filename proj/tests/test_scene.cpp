#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>

#include "microharvest/rng.hpp"
#include "microharvest/scene.hpp"

using namespace mh;

namespace {

// Brute-force oracle: disk overlaps a cell iff the cell center is within the
// radius; free iff no obstacle overlapped and the disk fits in the device.
FreeSpaceMask free_space_oracle(const Environment& env, double r) {
    FreeSpaceMask fs;
    fs.mask = GridU8(env.nx(), env.ny(), 0);
    size_t n_free = 0;
    const double r_sq = r * r;
    for (int y = 0; y < env.ny(); ++y)
        for (int x = 0; x < env.nx(); ++x) {
            const Vec2 c = env.cell_center(x, y);
            if (c.x - r < 0 || c.y - r < 0 || c.x + r > env.width_um || c.y + r > env.height_um)
                continue;
            bool blocked = false;
            for (int oy = 0; oy < env.ny() && !blocked; ++oy)
                for (int ox = 0; ox < env.nx(); ++ox) {
                    if (!label::is_obstacle(env.labels.at(ox, oy))) continue;
                    if (dist_sq(env.cell_center(ox, oy), c) <= r_sq) {
                        blocked = true;
                        break;
                    }
                }
            if (!blocked) {
                fs.mask.at(x, y) = 1;
                ++n_free;
            }
        }
    fs.fraction = static_cast<double>(n_free) / fs.mask.size();
    return fs;
}

Environment random_env(Rng& rng, int nx, int ny, double fill) {
    Environment env(nx * 5.0, ny * 5.0, 5.0);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x)
            if (rng.uniform() < fill)
                env.labels.at(x, y) = rng.uniform() < 0.3 ? label::kCell : label::debris(1 + rng.uniform_int(6));
    return env;
}

}  // namespace

TEST_CASE("free space of an empty device leaves only the border margin") {
    Environment env(1000.0, 1000.0, 5.0);
    const FreeSpaceMask fs = compute_free_space(env, 100.0);
    CHECK(fs.fraction == doctest::Approx(0.64).epsilon(1e-12));
}

TEST_CASE("fully blocked device has zero free space") {
    Environment env(500.0, 500.0, 5.0);
    env.labels.fill(label::debris(1));
    const FreeSpaceMask fs = compute_free_space(env, 50.0);
    CHECK(fs.fraction == 0.0);
}

TEST_CASE("radius larger than the device errors") {
    Environment env(500.0, 500.0, 5.0);
    CHECK_THROWS_WITH(compute_free_space(env, 300.0), "radius exceeds device");
}

TEST_CASE("free space matches the brute-force oracle on small random grids") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const int nx = 16 + rng.uniform_int(48);
        const int ny = 16 + rng.uniform_int(48);
        Environment env = random_env(rng, nx, ny, 0.05 + 0.1 * rng.uniform());
        const double r = 10.0 + rng.uniform() * 30.0;
        const FreeSpaceMask fast = compute_free_space(env, r);
        const FreeSpaceMask slow = free_space_oracle(env, r);
        REQUIRE(fast.mask.data() == slow.mask.data());
        CHECK(fast.fraction == doctest::Approx(slow.fraction));
    }
}

TEST_CASE("free space is monotone in obstacles and radius") {
    Rng rng(7);
    Environment env = random_env(rng, 40, 40, 0.05);
    const FreeSpaceMask base = compute_free_space(env, 25.0);

    // adding an obstacle never increases the fraction
    Environment env2 = env;
    for (int k = 0; k < 10; ++k)
        env2.labels.at(rng.uniform_int(40), rng.uniform_int(40)) = label::debris(1);
    const FreeSpaceMask denser = compute_free_space(env2, 25.0);
    CHECK(denser.fraction <= base.fraction);

    // larger radius mask is a subset of the smaller radius mask
    const FreeSpaceMask big = compute_free_space(env, 40.0);
    for (size_t i = 0; i < base.mask.size(); ++i)
        if (big.mask[i]) CHECK(base.mask[i]);
}

TEST_CASE("robot start zone counts as free space") {
    Environment env(500.0, 500.0, 5.0);
    for (int y = 40; y < 60; ++y)
        for (int x = 40; x < 60; ++x) env.labels.at(x, y) = label::kRobotStartZone;
    const FreeSpaceMask fs = compute_free_space(env, 50.0);
    Environment empty(500.0, 500.0, 5.0);
    const FreeSpaceMask fs_empty = compute_free_space(empty, 50.0);
    CHECK(fs.fraction == doctest::Approx(fs_empty.fraction));
}

TEST_CASE("working area fits points and clamps inside the device") {
    std::vector<Vec2> pts{{4000, 4000}, {4500, 4800}, {4900, 4100}};
    const WorkingArea wa = fit_working_area(pts, 3300, 3300, 10000, 10000);
    for (const auto& p : pts) CHECK(wa.contains(p));

    // off-center cluster near the device corner still yields a window inside
    std::vector<Vec2> corner{{100, 200}, {400, 150}};
    const WorkingArea wc = fit_working_area(corner, 3300, 3300, 10000, 10000);
    CHECK(wc.origin.x >= 0.0);
    CHECK(wc.origin.y >= 0.0);
    for (const auto& p : corner) CHECK(wc.contains(p));
}

TEST_CASE("too-wide point sets are rejected") {
    std::vector<Vec2> pts{{1000, 5000}, {6000, 5000}};  // 5 mm apart
    CHECK_THROWS_WITH(fit_working_area(pts, 3300, 3300, 10000, 10000),
                      "points exceed working area");
}

TEST_CASE("environment round-trips through the file format") {
    Rng rng(3);
    Environment env = random_env(rng, 37, 23, 0.2);
    env.rng_seed = 123456;
    const std::string path = "test_env_roundtrip.mhenv";
    save_environment(env, path);
    const Environment back = load_environment(path);
    CHECK(back.width_um == env.width_um);
    CHECK(back.height_um == env.height_um);
    CHECK(back.resolution_um == env.resolution_um);
    CHECK(back.rng_seed == env.rng_seed);
    CHECK(back.labels == env.labels);
    std::remove(path.c_str());
}

TEST_CASE("grid dimensions follow ceil(extent / resolution)") {
    Environment env(1001.0, 999.0, 5.0);
    CHECK(env.nx() == 201);
    CHECK(env.ny() == 200);
}

TEST_CASE("find_regions separates components and labels") {
    Environment env(100.0, 100.0, 5.0);
    env.labels.at(2, 2) = label::kCell;
    env.labels.at(3, 3) = label::kCell;     // 8-connected with the first
    env.labels.at(10, 10) = label::debris(2);
    const RegionMap rm = find_regions(env);
    REQUIRE(rm.regions.size() == 2);
    int cells = 0, debris = 0;
    for (const auto& r : rm.regions) {
        if (r.label_class == label::kCell) {
            ++cells;
            CHECK(r.area_cells == 2);
        } else {
            ++debris;
        }
    }
    CHECK(cells == 1);
    CHECK(debris == 1);
}
