#include "microharvest/scene.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mh {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

// 1-D squared distance transform (Felzenszwalb & Huttenlocher lower envelope).
// Sources with f = +inf are skipped; an all-inf row yields all-inf output.
void edt_1d(const std::vector<double>& f, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z) {
    const double inf = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(f.size());
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == inf) continue;
        double s = 0.0;
        while (k >= 0) {
            const int p = v[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k]) --k;
            else break;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
        } else {
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
        }
    }
    if (k < 0) {
        d.assign(n, inf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

}  // namespace

GridF distance_sq_transform(const GridU8& obstacles) {
    const int w = obstacles.width(), h = obstacles.height();
    GridF out(w, h, kInf);
    const double inf = std::numeric_limits<double>::infinity();

    // columns first
    std::vector<double> f(std::max(w, h)), d(std::max(w, h));
    std::vector<int> v(std::max(w, h));
    std::vector<double> z(std::max(w, h) + 1);

    Grid<double> tmp(w, h, inf);
    for (int x = 0; x < w; ++x) {
        f.assign(h, inf);
        for (int y = 0; y < h; ++y)
            if (obstacles.at(x, y)) f[y] = 0.0;
        d.assign(h, inf);
        edt_1d(f, d, v, z);
        for (int y = 0; y < h; ++y) tmp.at(x, y) = d[y];
    }
    for (int y = 0; y < h; ++y) {
        f.assign(w, inf);
        for (int x = 0; x < w; ++x) f[x] = tmp.at(x, y);
        d.assign(w, inf);
        edt_1d(f, d, v, z);
        for (int x = 0; x < w; ++x)
            out.at(x, y) = (d[x] == inf) ? kInf : static_cast<float>(d[x]);
    }
    return out;
}

GridF obstacle_distance_sq(const Environment& env, int ignore_region,
                           const GridI32* regions) {
    const int w = env.nx(), h = env.ny();
    GridU8 obst(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!label::is_obstacle(env.labels.at(x, y))) continue;
            if (ignore_region >= 0 && regions && regions->at(x, y) == ignore_region) continue;
            obst.at(x, y) = 1;
        }
    return distance_sq_transform(obst);
}

FreeSpaceMask compute_free_space(const Environment& env, double robot_radius_um,
                                 const GridF& dist_sq) {
    if (robot_radius_um <= 0.0)
        throw std::runtime_error("robot radius must be positive");
    if (robot_radius_um > std::min(env.width_um, env.height_um) / 2.0)
        throw std::runtime_error("radius exceeds device");

    const double res = env.resolution_um;
    const double r = robot_radius_um;
    const double r_sq_cells = (r / res) * (r / res);

    FreeSpaceMask fs;
    fs.mask = GridU8(env.nx(), env.ny(), 0);
    size_t n_free = 0;
    for (int y = 0; y < env.ny(); ++y) {
        const double cy = (y + 0.5) * res;
        const bool y_ok = (cy - r >= 0.0) && (cy + r <= env.height_um);
        for (int x = 0; x < env.nx(); ++x) {
            if (!y_ok) continue;
            const double cx = (x + 0.5) * res;
            if (cx - r < 0.0 || cx + r > env.width_um) continue;
            // disk overlaps a cell iff that cell's center is within r
            if (static_cast<double>(dist_sq.at(x, y)) <= r_sq_cells) continue;
            fs.mask.at(x, y) = 1;
            ++n_free;
        }
    }
    fs.fraction = static_cast<double>(n_free) / static_cast<double>(fs.mask.size());
    return fs;
}

FreeSpaceMask compute_free_space(const Environment& env, double robot_radius_um) {
    return compute_free_space(env, robot_radius_um, obstacle_distance_sq(env));
}

WorkingArea fit_working_area(const std::vector<Vec2>& points,
                             double wa_width_um, double wa_height_um,
                             double device_width_um, double device_height_um) {
    if (points.empty()) throw std::runtime_error("no points for working area");
    if (wa_width_um > device_width_um || wa_height_um > device_height_um)
        throw std::runtime_error("working area exceeds device");
    const BBox bb = bbox_of(points.begin(), points.end());
    if (bb.width() > wa_width_um || bb.height() > wa_height_um)
        throw std::runtime_error("points exceed working area");
    WorkingArea wa;
    wa.width_um = wa_width_um;
    wa.height_um = wa_height_um;
    const Vec2 c = bb.center();
    wa.origin.x = std::clamp(c.x - wa_width_um / 2.0, 0.0, device_width_um - wa_width_um);
    wa.origin.y = std::clamp(c.y - wa_height_um / 2.0, 0.0, device_height_um - wa_height_um);
    return wa;
}

RegionMap find_regions(const Environment& env) {
    const int w = env.nx(), h = env.ny();
    RegionMap rm;
    rm.ids = GridI32(w, h, -1);
    std::vector<int> stack;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const uint8_t cls = env.labels.at(x0, y0);
            if (!label::is_obstacle(cls) || rm.ids.at(x0, y0) >= 0) continue;
            const int id = static_cast<int>(rm.regions.size());
            LabeledRegion reg;
            reg.label_class = cls;
            double sx = 0, sy = 0;
            stack.push_back(y0 * w + x0);
            rm.ids.at(x0, y0) = id;
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cx = cur % w, cy = cur / w;
                ++reg.area_cells;
                sx += (cx + 0.5) * env.resolution_um;
                sy += (cy + 0.5) * env.resolution_um;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        if (rm.ids.at(nx, ny) >= 0) continue;
                        if (env.labels.at(nx, ny) != cls) continue;
                        rm.ids.at(nx, ny) = id;
                        stack.push_back(ny * w + nx);
                    }
            }
            reg.centroid_um = {sx / reg.area_cells, sy / reg.area_cells};
            rm.regions.push_back(reg);
        }
    }
    return rm;
}

// --- persistence -----------------------------------------------------------

static constexpr const char* kEnvMagic = "MHENV";
static constexpr int kEnvVersion = 1;

void save_environment(const Environment& env, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << kEnvMagic << " " << kEnvVersion << "\n";
    os << "width_um " << env.width_um << "\n";
    os << "height_um " << env.height_um << "\n";
    os << "resolution_um " << env.resolution_um << "\n";
    os << "seed " << env.rng_seed << "\n";
    os << "debris_classes " << env.debris_classes << "\n";
    os << "labels binary\n";
    os.write(reinterpret_cast<const char*>(env.labels.data().data()),
             static_cast<std::streamsize>(env.labels.size()));
    if (!os) throw std::runtime_error("failed writing: " + path);
}

Environment load_environment(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != kEnvMagic) throw std::runtime_error("not an environment file: " + path);
    if (version != kEnvVersion) throw std::runtime_error("unsupported environment version");
    double w = 0, h = 0, res = 0;
    uint64_t seed = 0;
    int classes = 0;
    std::string key, mode;
    for (int i = 0; i < 5; ++i) {
        is >> key;
        if (key == "width_um") is >> w;
        else if (key == "height_um") is >> h;
        else if (key == "resolution_um") is >> res;
        else if (key == "seed") is >> seed;
        else if (key == "debris_classes") is >> classes;
        else throw std::runtime_error("unknown header field: " + key);
    }
    is >> key >> mode;
    if (key != "labels" || mode != "binary")
        throw std::runtime_error("malformed environment header");
    is.get();  // newline before the raw block
    if (res <= 0.0) throw std::runtime_error("invalid resolution");
    Environment env(w, h, res);
    env.rng_seed = seed;
    env.debris_classes = classes;
    is.read(reinterpret_cast<char*>(env.labels.data().data()),
            static_cast<std::streamsize>(env.labels.size()));
    if (is.gcount() != static_cast<std::streamsize>(env.labels.size()))
        throw std::runtime_error("truncated label grid in: " + path);
    return env;
}

void export_environment_pgm(const Environment& env, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "P5\n" << env.nx() << " " << env.ny() << "\n255\n";
    std::vector<uint8_t> row(env.nx());
    for (int y = 0; y < env.ny(); ++y) {
        for (int x = 0; x < env.nx(); ++x) {
            const uint8_t v = env.labels.at(x, y);
            uint8_t g = 255;                       // free: white
            if (v == label::kCell) g = 32;         // targets: near-black
            else if (v == label::kRobotStartZone) g = 224;
            else if (label::is_debris(v)) g = static_cast<uint8_t>(64 + 16 * (v - 2));
            row[x] = g;
        }
        os.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

}  // namespace mh
