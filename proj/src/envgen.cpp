#include "microharvest/envgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "microharvest/imgops.hpp"

namespace mh {

namespace {

Vec2 catmull_rom(const Vec2& p0, const Vec2& p1, const Vec2& p2, const Vec2& p3, double t) {
    const double t2 = t * t, t3 = t2 * t;
    auto comp = [&](double a, double b, double c, double d) {
        return 0.5 * ((2 * b) + (-a + c) * t + (2 * a - 5 * b + 4 * c - d) * t2 +
                      (-a + 3 * b - 3 * c + d) * t3);
    };
    return {comp(p0.x, p1.x, p2.x, p3.x), comp(p0.y, p1.y, p2.y, p3.y)};
}

// Samples a 4-control-point Catmull-Rom spline densely, rescaled to arc length.
std::vector<Vec2> spline_points(const Vec2& a, const Vec2& b, double jitter, double target_len,
                                Rng& rng, double step) {
    const Vec2 dir = b - a;
    Vec2 perp{-dir.y, dir.x};
    const double n = perp.norm();
    if (n > 1e-12) perp = perp / n;
    const Vec2 c1 = a + dir * (1.0 / 3.0) + perp * rng.normal(0.0, jitter);
    const Vec2 c2 = a + dir * (2.0 / 3.0) + perp * rng.normal(0.0, jitter);

    std::vector<Vec2> ctrl{a - dir * (1.0 / 3.0), a, c1, c2, b, b + dir * (1.0 / 3.0)};
    std::vector<Vec2> raw;
    const int seg_samples = 12;
    for (size_t s = 0; s + 3 < ctrl.size(); ++s)
        for (int i = 0; i < seg_samples; ++i)
            raw.push_back(catmull_rom(ctrl[s], ctrl[s + 1], ctrl[s + 2], ctrl[s + 3],
                                      static_cast<double>(i) / seg_samples));
    raw.push_back(b);

    double len = 0.0;
    for (size_t i = 1; i < raw.size(); ++i) len += dist(raw[i - 1], raw[i]);
    if (len < 1e-9) return {a};
    // rescale about the start point so the arc length matches the target and
    // branch roots stay attached to their parent spline
    const double scale = target_len / len;
    for (auto& p : raw) p = a + (p - a) * scale;

    // resample at fixed spacing, interpolating within polyline segments
    std::vector<Vec2> out{raw.front()};
    double carry = 0.0;
    for (size_t i = 1; i < raw.size(); ++i) {
        Vec2 prev = raw[i - 1];
        const Vec2 cur = raw[i];
        double seg = dist(prev, cur);
        while (carry + seg >= step) {
            const double need = step - carry;
            const Vec2 dirseg = (cur - prev) / seg;
            prev = prev + dirseg * need;
            out.push_back(prev);
            seg -= need;
            carry = 0.0;
        }
        carry += seg;
    }
    out.push_back(raw.back());
    return out;
}

void stamp_ellipse(GridU8& m, const Vec2& c, double semi_along, double semi_across,
                   double angle) {
    const double r = std::max(semi_along, semi_across);
    const int x0 = std::max(0, static_cast<int>(std::floor(c.x - r - 1)));
    const int x1 = std::min(m.width() - 1, static_cast<int>(std::ceil(c.x + r + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.y - r - 1)));
    const int y1 = std::min(m.height() - 1, static_cast<int>(std::ceil(c.y + r + 1)));
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x + 0.5 - c.x, dy = y + 0.5 - c.y;
            const double u = (dx * ca + dy * sa) / std::max(semi_along, 0.5);
            const double v = (-dx * sa + dy * ca) / std::max(semi_across, 0.5);
            if (u * u + v * v <= 1.0) m.at(x, y) = 1;
        }
}

GridU8 crop_to_content(const GridU8& m) {
    int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) {
        GridU8 dot(1, 1, 1);
        return dot;
    }
    GridU8 out(x1 - x0 + 1, y1 - y0 + 1, 0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) out.at(x - x0, y - y0) = m.at(x, y);
    return out;
}

}  // namespace

namespace {

int mask_area(const GridU8& m) {
    int area = 0;
    for (size_t i = 0; i < m.size(); ++i) area += m[i];
    return area;
}

// grow one boundary pixel at a time (row-major within each layer) until the
// target is reached exactly
void grow_to_area(GridU8& m, int target) {
    int area = mask_area(m);
    const int w = m.width(), h = m.height();
    while (area < target) {
        std::vector<int> ring;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (m.at(x, y)) continue;
                bool adj = false;
                for (int dy = -1; dy <= 1 && !adj; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if (nx >= 0 && ny >= 0 && nx < w && ny < h && m.at(nx, ny)) {
                            adj = true;
                            break;
                        }
                    }
                if (adj) ring.push_back(y * w + x);
            }
        if (ring.empty()) break;  // grid saturated
        for (int idx : ring) {
            if (area >= target) break;
            m[static_cast<size_t>(idx)] = 1;
            ++area;
        }
    }
}

GridU8 stamp_splines(double fiber, double t_eff, double solidity, int n_branches, Rng& rng) {
    const int side =
        std::max(8, static_cast<int>(std::ceil(2.2 * fiber + 2.0 * t_eff + 8)));
    GridU8 m(side, side, 0);
    const Vec2 center{side / 2.0, side / 2.0};

    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 dir{std::cos(theta), std::sin(theta)};
    const Vec2 a = center - dir * (fiber / 2.0);
    const Vec2 b = center + dir * (fiber / 2.0);
    const double jitter = (1.0 - std::clamp(solidity, 0.0, 1.0)) * fiber * 0.35;
    const double step = std::max(0.4, t_eff / 3.0);

    const auto backbone = spline_points(a, b, jitter, fiber, rng, step);
    std::vector<std::vector<Vec2>> splines{backbone};
    for (int k = 0; k < n_branches; ++k) {
        const auto& root = backbone[static_cast<size_t>(
            rng.uniform(0.2, 0.8) * static_cast<double>(backbone.size() - 1))];
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        const double blen = fiber * rng.uniform(0.3, 0.6);
        const Vec2 tip = root + Vec2{std::cos(phi), std::sin(phi)} * blen;
        splines.push_back(spline_points(root, tip, jitter * 0.5, blen, rng, step));
    }
    const double lo = t_eff + 1.5, hi = side - t_eff - 1.5;
    for (const auto& sp : splines) {
        Vec2 prev;
        for (size_t i = 0; i < sp.size(); ++i) {
            Vec2 tangent{1, 0};
            if (i + 1 < sp.size()) tangent = sp[i + 1] - sp[i];
            else if (i > 0) tangent = sp[i] - sp[i - 1];
            const double ang = std::atan2(tangent.y, tangent.x);
            // clamp into the canvas; clamping is continuous so the chain of
            // stamps stays in one piece
            const Vec2 q{std::clamp(sp[i].x, lo, hi), std::clamp(sp[i].y, lo, hi)};
            stamp_ellipse(m, q, std::max(0.6, t_eff * 0.75), std::max(0.5, t_eff * 0.5), ang);
            if (i > 0) {
                // guarantee 8-connectivity under thin stamps: mark every pixel
                // along the segment between consecutive stamp centers
                const double seg = dist(prev, q);
                const int n = std::max(1, static_cast<int>(std::ceil(seg / 0.3)));
                for (int k = 0; k <= n; ++k) {
                    const Vec2 p = prev + (q - prev) * (static_cast<double>(k) / n);
                    const int px = static_cast<int>(p.x), py = static_cast<int>(p.y);
                    if (px >= 0 && py >= 0 && px < side && py < side) m.at(px, py) = 1;
                }
            }
            prev = q;
        }
    }
    return m;
}

}  // namespace

GridU8 generate_region(const ShapeVector& shape, Rng& rng) {
    const int target_area = static_cast<int>(std::max(1.0, std::round(shape.area)));
    const int n_branches = std::max(0, static_cast<int>(std::lround(shape.n_branches)));

    // the stamped footprint must start at or below the target so pixel growth
    // can land on it exactly; shrink and retry on overshoot
    double fiber = std::max(1.0, shape.fiber_length);
    const double branch_len_factor = 1.0 + 0.45 * n_branches;
    double t_eff = std::clamp(shape.thickness, 1.0,
                              std::max(1.0, 0.75 * target_area / (fiber * branch_len_factor)));
    if (fiber * branch_len_factor * std::max(1.0, t_eff) > 0.9 * target_area)
        fiber = std::max(1.0, 0.9 * target_area / (branch_len_factor * std::max(1.0, t_eff)));

    GridU8 m;
    for (int attempt = 0; attempt < 5; ++attempt) {
        m = stamp_splines(fiber, t_eff, shape.solidity, n_branches, rng);
        const int area = mask_area(m);
        if (area <= target_area) break;
        const double shrink = 0.9 * std::sqrt(static_cast<double>(target_area) / area);
        fiber = std::max(1.0, fiber * shrink);
        t_eff = std::max(1.0, t_eff * shrink);
        if (attempt == 4 || (fiber <= 1.0 + 1e-9 && t_eff <= 1.0 + 1e-9)) {
            // thinnest spline still too large: fall back to a compact disk
            const double r = std::sqrt(target_area / M_PI);
            const int side = static_cast<int>(std::ceil(2 * r + 4));
            m = GridU8(side, side, 0);
            stamp_ellipse(m, {side / 2.0, side / 2.0}, std::max(0.5, r - 0.5),
                          std::max(0.5, r - 0.5), 0.0);
            while (mask_area(m) > target_area) {
                // peel boundary pixels in scan order down to the target
                GridU8 er = erode(m, 1);
                if (mask_area(er) < 1) break;
                int excess = mask_area(m) - target_area;
                for (int y = 0; y < m.height() && excess > 0; ++y)
                    for (int x = 0; x < m.width() && excess > 0; ++x)
                        if (m.at(x, y) && !er.at(x, y)) {
                            m.at(x, y) = 0;
                            --excess;
                        }
                if (excess > 0) break;
            }
            break;
        }
    }
    grow_to_area(m, target_area);
    return crop_to_content(m);
}

namespace {

struct PendingRegion {
    uint8_t label_class = 0;
    GridU8 mask;
    GridU8 clearance;              // mask dilated by one cell, on a +1 padded canvas
    int tile_x = -1, tile_y = -1;  // Variable mode: constrain anchor to this tile
    int area = 0;

    void build_clearance() {
        // 8-neighborhood dilation: placed regions must not touch even diagonally
        clearance = GridU8(mask.width() + 2, mask.height() + 2, 0);
        for (int y = 0; y < mask.height(); ++y)
            for (int x = 0; x < mask.width(); ++x) {
                if (!mask.at(x, y)) continue;
                for (int dy = 0; dy <= 2; ++dy)
                    for (int dx = 0; dx <= 2; ++dx) clearance.at(x + dx, y + dy) = 1;
            }
    }
};

// Rejection placement: anchor chosen uniformly; the one-cell-dilated stamp
// must land on free cells so distinct regions never touch (keeps every placed
// region its own connected component).
bool try_place(Environment& env, const PendingRegion& reg, Rng& rng, int max_attempts,
               double tile_um) {
    const int w = env.nx(), h = env.ny();
    const int rw = reg.mask.width(), rh = reg.mask.height();
    if (rw > w || rh > h) return false;
    int x_lo = 0, x_hi = w - rw, y_lo = 0, y_hi = h - rh;
    if (reg.tile_x >= 0) {
        const int tile_cells = static_cast<int>(std::lround(tile_um / env.resolution_um));
        x_lo = std::clamp(reg.tile_x * tile_cells, 0, w - rw);
        x_hi = std::clamp((reg.tile_x + 1) * tile_cells - rw, x_lo, w - rw);
        y_lo = std::clamp(reg.tile_y * tile_cells, 0, h - rh);
        y_hi = std::clamp((reg.tile_y + 1) * tile_cells - rh, y_lo, h - rh);
    }
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const int ox = x_lo + rng.uniform_int(x_hi - x_lo + 1);
        const int oy = y_lo + rng.uniform_int(y_hi - y_lo + 1);
        bool clear = true;
        for (int y = 0; y < reg.clearance.height() && clear; ++y)
            for (int x = 0; x < reg.clearance.width(); ++x) {
                if (!reg.clearance.at(x, y)) continue;
                const int gx = ox + x - 1, gy = oy + y - 1;
                if (gx < 0 || gy < 0 || gx >= w || gy >= h) continue;
                if (env.labels.at(gx, gy) != label::kFree) {
                    clear = false;
                    break;
                }
            }
        if (!clear) continue;
        for (int y = 0; y < rh; ++y)
            for (int x = 0; x < rw; ++x)
                if (reg.mask.at(x, y)) env.labels.at(ox + x, oy + y) = reg.label_class;
        return true;
    }
    return false;
}

}  // namespace

Environment generate_environment(const GenerativeModel& model, const GenerationParams& params) {
    if (params.resolution_um <= 0.0) throw std::runtime_error("invalid resolution");
    const double conc =
        std::clamp(params.concentration, model.count_curve.lo, model.count_curve.hi);
    const Mvn& dist = model.nearest_dist_model(conc);
    const int n_classes = dist.dim();  // cell + debris classes
    if (n_classes != 1 + model.debris_classes())
        throw std::runtime_error("model distribution dimension mismatch");

    Environment env(params.width_um, params.height_um, params.resolution_um);
    env.rng_seed = params.seed;
    env.debris_classes = model.debris_classes();
    Rng rng = Rng::stream(params.seed, "envgen");

    if (params.start_zone_um > 0.0) {
        const double half = params.start_zone_um / 2.0;
        const int x0 = std::max(0, env.cell_x(params.width_um / 2.0 - half));
        const int x1 = std::min(env.nx() - 1, env.cell_x(params.width_um / 2.0 + half));
        const int y0 = std::max(0, env.cell_y(params.height_um / 2.0 - half));
        const int y1 = std::min(env.ny() - 1, env.cell_y(params.height_um / 2.0 + half));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) env.labels.at(x, y) = label::kRobotStartZone;
    }

    const double area_factor =
        (params.width_um * params.height_um) / model.train_image_area_um2;

    std::vector<PendingRegion> pending;
    auto class_label = [](int c) {
        return c == 0 ? label::kCell : label::debris(c);
    };

    if (params.mode == DensityMode::Uniform) {
        const double mean_sum = std::max(dist.mean.sum(), 1e-12);
        const double density_factor = model.count_curve.eval(conc) / mean_sum;
        for (int c = 0; c < n_classes; ++c) {
            const double expect =
                dist.mean(c) * density_factor * params.density_scale * area_factor;
            const int count = static_cast<int>(std::floor(std::max(0.0, expect) + 0.5));
            for (int i = 0; i < count; ++i) {
                PendingRegion reg;
                reg.label_class = class_label(c);
                const ShapeVector s = sample_shape(model, reg.label_class, rng);
                reg.mask = generate_region(s, rng);
                pending.push_back(std::move(reg));
            }
        }
    } else {
        const int tiles_x = static_cast<int>(std::lround(params.width_um / params.tile_um));
        const int tiles_y = static_cast<int>(std::lround(params.height_um / params.tile_um));
        if (tiles_x < 1 || tiles_y < 1 ||
            std::abs(tiles_x * params.tile_um - params.width_um) > 1e-6 ||
            std::abs(tiles_y * params.tile_um - params.height_um) > 1e-6)
            throw std::runtime_error("tile size must divide the device extent");
        const double tile_factor =
            (params.tile_um * params.tile_um) / model.train_image_area_um2;
        for (int ty = 0; ty < tiles_y; ++ty)
            for (int tx = 0; tx < tiles_x; ++tx) {
                const Eigen::VectorXd draw = dist.sample(rng);
                for (int c = 0; c < n_classes; ++c) {
                    const double expect =
                        std::max(0.0, draw(c)) * params.density_scale * tile_factor;
                    const int count = static_cast<int>(std::floor(expect + 0.5));
                    for (int i = 0; i < count; ++i) {
                        PendingRegion reg;
                        reg.label_class = class_label(c);
                        reg.tile_x = tx;
                        reg.tile_y = ty;
                        const ShapeVector s = sample_shape(model, reg.label_class, rng);
                        reg.mask = generate_region(s, rng);
                        pending.push_back(std::move(reg));
                    }
                }
            }
    }

    for (auto& reg : pending) {
        reg.area = 0;
        for (size_t i = 0; i < reg.mask.size(); ++i) reg.area += reg.mask[i];
        reg.build_clearance();
    }
    // place large regions first; placement stays uniform among valid anchors
    std::stable_sort(pending.begin(), pending.end(),
                     [](const PendingRegion& a, const PendingRegion& b) { return a.area > b.area; });

    int placed = 0;
    for (const auto& reg : pending) {
        if (!try_place(env, reg, rng, params.max_place_attempts, params.tile_um)) {
            throw std::runtime_error("environment too dense: placed " + std::to_string(placed) +
                                     " of " + std::to_string(pending.size()) + " regions");
        }
        ++placed;
    }
    return env;
}

void stamp_robot_sprite(ImageF& img, const RobotPose& pose, const RenderParams& params) {
    const double R = pose.radius_px;
    const int x0 = std::max(0, static_cast<int>(std::floor(pose.center_px.x - R - 2)));
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(pose.center_px.x + R + 2)));
    const int y0 = std::max(0, static_cast<int>(std::floor(pose.center_px.y - R - 2)));
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(pose.center_px.y + R + 2)));
    // hub ring with one opening, six long spokes offset from the opening;
    // chamber and opening channel read bright against the dark body
    const double ring_in = 0.34 * R, ring_out = 0.58 * R;
    const double gap_half = 0.26;       // radians, chamber opening half-angle
    const double tooth_half = 0.14;     // radians
    const double channel_out = 0.95 * R;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x + 0.5 - pose.center_px.x;
            const double dy = y + 0.5 - pose.center_px.y;
            const double r = std::sqrt(dx * dx + dy * dy);
            if (r > R) continue;
            double ang = std::atan2(dy, dx) - pose.orientation;
            ang = std::remainder(ang, 2.0 * M_PI);
            const bool in_gap = std::abs(ang) < gap_half;
            bool body = false;
            if (r >= ring_in && r <= ring_out && !in_gap) body = true;
            if (r > ring_out) {
                const double tooth_ang = std::remainder(ang + M_PI / 6.0, M_PI / 3.0);
                if (std::abs(tooth_ang) < tooth_half) body = true;
            }
            if (body) {
                img.at(x, y) = static_cast<float>(params.robot_body_level);
            } else if (r < ring_in || (in_gap && r <= channel_out)) {
                img.at(x, y) = static_cast<float>(params.robot_chamber_level);
            }
        }
}

ImageU8 render_image(const Environment& env, Rng& rng, const RenderParams& params,
                     const std::vector<RobotPose>& robots) {
    const int w = env.nx(), h = env.ny();
    ImageF img(w, h, static_cast<float>(params.background));

    const RegionMap rm = find_regions(env);
    // cell cores sit at each region's deepest interior point so the dark ring
    // around them never breaks
    std::vector<Vec2> core_center(rm.regions.size());
    std::vector<double> core_radius(rm.regions.size(), 0.0);
    {
        std::vector<BBox> boxes(rm.regions.size());
        std::vector<bool> seen(rm.regions.size(), false);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int id = rm.ids.at(x, y);
                if (id < 0 || rm.regions[id].label_class != label::kCell) continue;
                const Vec2 p{static_cast<double>(x), static_cast<double>(y)};
                if (!seen[id]) {
                    boxes[id].lo = boxes[id].hi = p;
                    seen[id] = true;
                } else {
                    boxes[id].expand(p);
                }
            }
        for (size_t id = 0; id < rm.regions.size(); ++id) {
            if (!seen[id]) continue;
            const int x0 = static_cast<int>(boxes[id].lo.x), y0 = static_cast<int>(boxes[id].lo.y);
            const int cw = static_cast<int>(boxes[id].hi.x) - x0 + 1;
            const int ch = static_cast<int>(boxes[id].hi.y) - y0 + 1;
            GridU8 bg(cw + 2, ch + 2, 1);
            for (int y = 0; y < ch; ++y)
                for (int x = 0; x < cw; ++x)
                    if (rm.ids.at(x0 + x, y0 + y) == static_cast<int>(id)) bg.at(x + 1, y + 1) = 0;
            const GridF dsq = distance_sq_transform(bg);
            double best = -1.0;
            for (int y = 0; y < ch; ++y)
                for (int x = 0; x < cw; ++x) {
                    if (rm.ids.at(x0 + x, y0 + y) != static_cast<int>(id)) continue;
                    const double d = std::sqrt(static_cast<double>(dsq.at(x + 1, y + 1)));
                    if (d > best) {
                        best = d;
                        core_center[id] = {x0 + x + 0.5, y0 + y + 0.5};
                    }
                }
            core_radius[id] = std::max(1.2, 0.55 * best);
        }
    }

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int id = rm.ids.at(x, y);
            if (id < 0) continue;
            const auto& reg = rm.regions[id];
            if (reg.label_class == label::kCell) {
                const double d = std::hypot(x + 0.5 - core_center[id].x, y + 0.5 - core_center[id].y);
                img.at(x, y) = static_cast<float>(
                    d <= core_radius[id] ? params.core_level : params.ring_level);
            } else {
                img.at(x, y) = static_cast<float>(params.debris_level);
            }
        }

    for (const auto& pose : robots) stamp_robot_sprite(img, pose, params);

    // texture on debris, then global sensor noise
    if (params.debris_texture > 0.0 || params.noise_sigma > 0.0) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v = img.at(x, y);
                const int id = rm.ids.at(x, y);
                if (id >= 0 && rm.regions[id].label_class != label::kCell &&
                    params.debris_texture > 0.0)
                    v += static_cast<float>(rng.normal(0.0, params.debris_texture));
                if (params.noise_sigma > 0.0)
                    v += static_cast<float>(rng.normal(0.0, params.noise_sigma));
                img.at(x, y) = v;
            }
    }
    return to_u8(img);
}

}  // namespace mh
