#include "microharvest/detect.hpp"

#ifdef MH_RING_DEBUG
extern int mh_ring_fail[8];
#endif

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace mh {

namespace {

struct Candidate {
    GridU8 mask;          // cropped, padded by 1
    int off_x = 0;        // crop offset into the full image (accounting for pad)
    int off_y = 0;
    int area = 0;
    RobotDetectionMode mode = RobotDetectionMode::Intensity;
};

std::vector<Candidate> split_components(const GridU8& mask, RobotDetectionMode mode) {
    GridI32 ids;
    const int n = connected_components(mask, ids, 8);
    const auto stats = component_stats(ids, n);
    std::vector<Candidate> out;
    for (const auto& c : stats) {
        if (c.area == 0) continue;
        Candidate cand;
        cand.mask = component_mask(ids, c, 1);
        cand.off_x = c.min_x - 1;
        cand.off_y = c.min_y - 1;
        cand.area = c.area;
        cand.mode = mode;
        out.push_back(std::move(cand));
    }
    return out;
}

struct MaskShape {
    double aspect = 1.0;
    double solidity = 1.0;
};

MaskShape mask_shape(const GridU8& m, int area) {
    MaskShape s;
    double sx = 0, sy = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                sx += x;
                sy += y;
            }
    const double cx = sx / area, cy = sy / area;
    double mxx = 0, myy = 0, mxy = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y)) {
                const double dx = x - cx, dy = y - cy;
                mxx += dx * dx;
                myy += dy * dy;
                mxy += dx * dy;
            }
    mxx = mxx / area + 1.0 / 12.0;
    myy = myy / area + 1.0 / 12.0;
    mxy /= area;
    const double common = std::sqrt(0.25 * (mxx - myy) * (mxx - myy) + mxy * mxy);
    const double major = std::sqrt(std::max(0.5 * (mxx + myy) + common, 1e-12));
    const double minor = std::sqrt(std::max(0.5 * (mxx + myy) - common, 1e-12));
    s.aspect = major / minor;
    s.solidity = static_cast<double>(area) / std::max(1, convex_area_pixels(m));
    return s;
}

// Orientation of a cogwheel from its bright opening: principal axis of the
// thresholded chamber-opening strip between the hub and the rim. Modulo pi.
double candidate_orientation(const Circle& mec, const ImageU8& img, double bright_thresh) {
    const double rr = 0.92 * mec.radius;
    const int x0 = std::max(0, static_cast<int>(mec.center.x - rr) - 1);
    const int y0 = std::max(0, static_cast<int>(mec.center.y - rr) - 1);
    const int x1 = std::min(img.width() - 1, static_cast<int>(mec.center.x + rr) + 1);
    const int y1 = std::min(img.height() - 1, static_cast<int>(mec.center.y + rr) + 1);
    std::vector<Vec2> pts;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x + 0.5 - mec.center.x, y + 0.5 - mec.center.y);
            if (d > rr || d < 0.34 * mec.radius) continue;
            if (img.at(x, y) / 255.0 >= bright_thresh) pts.push_back({x + 0.5, y + 0.5});
        }
    if (pts.size() < 6) return 0.0;
    // circular mean of the strip's angular positions: the bisector of a
    // symmetric wedge, well conditioned even for short openings
    double cs = 0.0, sn = 0.0;
    for (const auto& q : pts) {
        const double a = std::atan2(q.y - mec.center.y, q.x - mec.center.x);
        cs += std::cos(a);
        sn += std::sin(a);
    }
    double ang = std::atan2(sn, cs);
    if (ang < 0) ang += M_PI;
    return std::fmod(ang, M_PI);
}

}  // namespace

std::vector<RobotDetection> detect_microrobots(const ImageU8& img, const DetectionParams& p) {
    const ImageU8 eq = clahe(img, p.clahe_clip, p.clahe_tile);
    const ImageF f = gaussian_blur(to_float(eq), p.gauss_sigma);

    std::vector<Candidate> candidates;

    // mode 1: intensity. The bright chamber seeds a candidate; the surrounding
    // dark body forms its mask.
    {
        ImageF darkness(f.width(), f.height());
        for (size_t i = 0; i < f.size(); ++i) darkness[i] = 1.0f - f[i];
        GridU8 dark = hysteresis_threshold(darkness, p.robot_dark_lo, p.robot_dark_hi);
        dark = close_mask(open_mask(dark, p.robot_open_radius), p.robot_close_radius);
        dark = filter_components_by_area(dark, p.robot_min_area / 2, p.robot_max_area);

        GridU8 chamber = hysteresis_threshold(f, p.chamber_bright_lo, p.chamber_bright_hi);
        chamber = filter_components_by_area(chamber, p.chamber_min_area, p.robot_max_area);

        // keep dark components adjacent to a chamber blob; the union of body and
        // chamber fills into the solid candidate
        GridI32 ids;
        const int n = connected_components(dark, ids, 8);
        const auto stats = component_stats(ids, n);
        for (const auto& c : stats) {
            if (c.area == 0) continue;
            Candidate cand;
            const int pad = 5 + p.robot_fill_dilate;
            cand.mask = component_mask(ids, c, pad);
            cand.off_x = c.min_x - pad;
            cand.off_y = c.min_y - pad;
            bool has_chamber = false;
            const GridU8 grown = dilate(cand.mask, 4);
            for (int y = 0; y < cand.mask.height(); ++y)
                for (int x = 0; x < cand.mask.width(); ++x) {
                    if (!grown.at(x, y)) continue;
                    const int ix = x + cand.off_x, iy = y + cand.off_y;
                    if (ix >= 0 && iy >= 0 && ix < img.width() && iy < img.height() &&
                        chamber.at(ix, iy)) {
                        cand.mask.at(x, y) = 1;
                        has_chamber = true;
                    }
                }
            if (!has_chamber) continue;
            cand.mask = dilate(fill_holes(cand.mask), p.robot_fill_dilate);
            cand.area = 0;
            for (size_t i = 0; i < cand.mask.size(); ++i) cand.area += cand.mask[i];
            if (cand.area < p.robot_min_area || cand.area > p.robot_max_area) continue;
            cand.mode = RobotDetectionMode::Intensity;
            candidates.push_back(std::move(cand));
        }
    }

    // mode 2: edges define the outer silhouette
    {
        GridU8 edges = canny(to_float(eq), p.canny_lo, p.canny_hi, p.gauss_sigma);
        edges = close_mask(edges, p.canny_close_radius);
        edges = fill_holes(edges);
        edges = remove_border_components(edges);
        edges = filter_components_by_area(edges, p.robot_min_area, p.robot_max_area);
        for (auto& cand : split_components(edges, RobotDetectionMode::Edge))
            candidates.push_back(std::move(cand));
    }

    std::vector<RobotDetection> detections;
    for (const auto& cand : candidates) {
        const MaskShape s = mask_shape(cand.mask, cand.area);
        if (!(s.aspect < p.t_ar)) continue;
        if (!(s.solidity > p.t_sl && s.solidity < p.t_sh)) continue;

        // branch constraint on the body with the bright chamber removed: a
        // cogwheel gives a hub loop/arc plus one spur per protuberance
        GridU8 body = cand.mask;
        for (int y = 0; y < body.height(); ++y)
            for (int x = 0; x < body.width(); ++x) {
                if (!body.at(x, y)) continue;
                const int ix = x + cand.off_x, iy = y + cand.off_y;
                if (eq.in_bounds(ix, iy) && eq.at(ix, iy) / 255.0 >= p.chamber_bright_lo)
                    body.at(x, y) = 0;
            }
        const SkeletonInfo body_sk = analyze_skeleton(body, 2.0);
        if (static_cast<int>(body_sk.branches.size()) < p.min_branches) continue;

        std::vector<Vec2> pts;
        for (int y = 0; y < cand.mask.height(); ++y)
            for (int x = 0; x < cand.mask.width(); ++x)
                if (cand.mask.at(x, y))
                    pts.push_back({x + cand.off_x + 0.5, y + cand.off_y + 0.5});
        const Circle mec = min_enclosing_circle(pts);

        // empty-center constraint: the chamber must be bright
        double core_sum = 0.0;
        int core_n = 0;
        const double core_r = 0.30 * mec.radius;
        for (const auto& q : pts)
            if (dist(q, mec.center) <= core_r) {
                core_sum += eq.at(static_cast<int>(q.x), static_cast<int>(q.y)) / 255.0;
                ++core_n;
            }
        if (core_n == 0 || core_sum / core_n < p.center_bright_min) continue;

        RobotDetection det;
        det.center = mec.center;
        det.radius = mec.radius;
        det.mode = cand.mode;
        det.orientation = candidate_orientation(mec, img, p.chamber_bright_lo);
        detections.push_back(det);
    }

    // de-duplicate across modes: nearest-center merge, larger first
    std::sort(detections.begin(), detections.end(),
              [](const RobotDetection& a, const RobotDetection& b) {
                  if (a.radius != b.radius) return a.radius > b.radius;
                  if (a.center.x != b.center.x) return a.center.x < b.center.x;
                  return a.center.y < b.center.y;
              });
    std::vector<RobotDetection> out;
    for (const auto& d : detections) {
        bool dup = false;
        for (const auto& kept : out)
            if (dist(d.center, kept.center) < std::max(d.radius, kept.radius)) {
                dup = true;
                break;
            }
        if (!dup) out.push_back(d);
    }
    return out;
}

namespace {

struct RingCheck {
    bool ok = false;
    Circle circle;
};

// Otsu-based outer/center/ring decomposition with the three skeleton
// constraints and the intensity ordering.
RingCheck verify_ring(const ImageU8& img, const Candidate& cand, const DetectionParams& p) {
    RingCheck rc;
    const int w = cand.mask.width(), h = cand.mask.height();
    ImageU8 crop(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int ix = x + cand.off_x, iy = y + cand.off_y;
            crop.at(x, y) = img.in_bounds(ix, iy) ? img.at(ix, iy) : 128;
        }
    const ImageU8 smooth = to_u8(gaussian_blur(to_float(crop), 1.0));

    // inverse binarization: dark structure (the ring), restricted to the
    // candidate's neighborhood so nearby objects cannot fragment the masks
    const GridU8 near = dilate(cand.mask, 2);
    const int t = otsu_threshold_masked(smooth, near);
    GridU8 dark(w, h, 0);
    for (size_t i = 0; i < dark.size(); ++i)
        dark[i] = (near[i] && smooth[i] <= t) ? 1 : 0;
    // keep the dark structure that overlaps the candidate most
    {
        GridI32 dids;
        const int dn = connected_components(dark, dids, 8);
        if (dn > 1) {
            std::vector<int> overlap(dn, 0);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (dids.at(x, y) >= 0 && cand.mask.at(x, y)) ++overlap[dids.at(x, y)];
            int best = 0;
            for (int i = 1; i < dn; ++i)
                if (overlap[i] > overlap[best]) best = i;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (dids.at(x, y) != best) dark.at(x, y) = 0;
        }
    }
    const GridU8 filled = fill_holes(dark);
    GridU8 outer(w, h, 0);
    for (size_t i = 0; i < outer.size(); ++i) outer[i] = filled[i] ? 0 : 1;

    // split the filled area into bright center and dark ring; the boundary
    // band always counts as ring so the hole cannot leak outward, and stray
    // bright specks away from the core are folded into the ring
    const GridU8 interior = erode(filled, 1);
    const int t2 = otsu_threshold_masked(smooth, interior);
    GridU8 center(w, h, 0), ring(w, h, 0);
    for (size_t i = 0; i < filled.size(); ++i) {
        if (!filled[i]) continue;
        if (interior[i] && smooth[i] > t2) center[i] = 1;
        else ring[i] = 1;
    }
    {
        GridI32 cidsc;
        const int cn = connected_components(center, cidsc, 8);
        if (cn > 1) {
            const auto cstats = component_stats(cidsc, cn);
            int core = 0;
            for (int i = 1; i < cn; ++i)
                if (cstats[i].area > cstats[core].area) core = i;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (cidsc.at(x, y) >= 0 && cidsc.at(x, y) != core) {
                        center.at(x, y) = 0;
                        ring.at(x, y) = 1;
                    }
        }
    }
    int ring_area = 0;
    for (size_t i = 0; i < ring.size(); ++i) ring_area += ring[i];
#ifdef MH_RING_DEBUG
#define MH_FAIL(k) do { ++::mh_ring_fail[k]; return rc; } while (0)
#else
#define MH_FAIL(k) return rc
#endif
    if (ring_area < 8) MH_FAIL(0);

    GridI32 ids;
    if (connected_components(ring, ids, 8) != 1) MH_FAIL(1);
    // two contours: the ring's complement must be exactly {outside, hole}
    GridU8 comp(w, h, 0);
    for (size_t i = 0; i < comp.size(); ++i) comp[i] = ring[i] ? 0 : 1;
    GridI32 cids;
    if (connected_components(comp, cids, 4) != 2) MH_FAIL(2);
    const SkeletonInfo sk = analyze_skeleton(ring, 1.5);
    if (!sk.branches.empty()) MH_FAIL(3);
    GridI32 sids;
    if (connected_components(sk.skeleton, sids, 8) != 1) MH_FAIL(4);

    const double m_ring = mean_under_mask(crop, ring);
    const double m_outer = mean_under_mask(crop, outer);
    const double m_center = mean_under_mask(crop, center);
    if (!(m_ring < m_outer && m_ring < m_center)) MH_FAIL(5);

    std::vector<Vec2> pts;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (filled.at(x, y)) pts.push_back({x + cand.off_x + 0.5, y + cand.off_y + 0.5});
    rc.circle = min_enclosing_circle(pts);
    rc.ok = true;
    return rc;
}

GridU8 sphere_low_threshold_mask(const ImageU8& img, const DetectionParams& p) {
    const ImageF f = gaussian_blur(to_float(img), p.sphere_sigma);
    ImageF grad = scharr_magnitude(f);
    float mx = 0.0f;
    for (size_t i = 0; i < grad.size(); ++i) mx = std::max(mx, grad[i]);
    if (mx > 0.0f)
        for (size_t i = 0; i < grad.size(); ++i) grad[i] /= mx;
    const ImageU8 grad_eq = clahe(to_u8(grad), p.clahe_clip, p.clahe_tile);
    return hysteresis_threshold(to_float(grad_eq), p.sphere_lo_lo, p.sphere_lo_hi);
}

}  // namespace

std::vector<SphereDetection> detect_microspheres(const ImageU8& img, const DetectionParams& p) {
    const ImageF f = gaussian_blur(to_float(img), p.sphere_sigma);
    ImageF grad = scharr_magnitude(f);
    float mx = 0.0f;
    for (size_t i = 0; i < grad.size(); ++i) mx = std::max(mx, grad[i]);
    if (mx > 0.0f)
        for (size_t i = 0; i < grad.size(); ++i) grad[i] /= mx;
    const ImageU8 grad_eq = clahe(to_u8(grad), p.clahe_clip, p.clahe_tile);
    const ImageF ge = to_float(grad_eq);

    GridU8 high = hysteresis_threshold(ge, p.sphere_hi_lo, p.sphere_hi_hi);
    high = close_mask(high, p.sphere_close_radius);
    high = fill_holes(high);
    high = open_mask(high, p.sphere_open_radius);
    high = filter_components_by_area(high, p.sphere_min_area, p.sphere_max_area);

    std::vector<SphereDetection> out;
    for (const auto& cand : split_components(high, RobotDetectionMode::Intensity)) {
        // rounded-shape prior: discard components with long skeletons
        const SkeletonInfo sk = analyze_skeleton(cand.mask, 0.0);
        const double eq_perimeter = 2.0 * std::sqrt(M_PI * cand.area);
        if (sk.skeleton_pixels > p.sphere_max_skeleton_factor * eq_perimeter) continue;
        const RingCheck rc = verify_ring(img, cand, p);
        if (!rc.ok) continue;
        out.push_back({rc.circle.center, rc.circle.radius});
    }
    std::sort(out.begin(), out.end(), [](const SphereDetection& a, const SphereDetection& b) {
        if (a.center.x != b.center.x) return a.center.x < b.center.x;
        return a.center.y < b.center.y;
    });
    return out;
}

GridU8 label_debris(const ImageU8& img, const std::vector<SphereDetection>& spheres,
                    const DetectionParams& p) {
    GridU8 low = sphere_low_threshold_mask(img, p);
    low = close_mask(low, p.sphere_close_radius);
    low = fill_holes(low);
    low = filter_components_by_area(low, p.debris_min_area, p.debris_max_area);
    for (const auto& s : spheres) {
        const double r = s.radius + 1.0;
        const int x0 = std::max(0, static_cast<int>(std::floor(s.center.x - r)));
        const int x1 = std::min(low.width() - 1, static_cast<int>(std::ceil(s.center.x + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(s.center.y - r)));
        const int y1 = std::min(low.height() - 1, static_cast<int>(std::ceil(s.center.y + r)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                if (std::hypot(x + 0.5 - s.center.x, y + 0.5 - s.center.y) <= r)
                    low.at(x, y) = 0;
    }
    return low;
}

MatchScore score_detections(const std::vector<Vec2>& predicted,
                            const std::vector<Vec2>& truth, double match_radius) {
    if (match_radius <= 0.0) throw std::runtime_error("match radius must be positive");
    struct Pair {
        double d;
        int pi, ti;
    };
    std::vector<Pair> pairs;
    for (int i = 0; i < static_cast<int>(predicted.size()); ++i)
        for (int j = 0; j < static_cast<int>(truth.size()); ++j) {
            const double d = dist(predicted[i], truth[j]);
            if (d <= match_radius) pairs.push_back({d, i, j});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.d != b.d) return a.d < b.d;
        if (a.pi != b.pi) return a.pi < b.pi;
        return a.ti < b.ti;
    });
    std::vector<uint8_t> pu(predicted.size(), 0), tu(truth.size(), 0);
    MatchScore s;
    for (const auto& pr : pairs) {
        if (pu[pr.pi] || tu[pr.ti]) continue;
        pu[pr.pi] = tu[pr.ti] = 1;
        ++s.tp;
    }
    s.fp = static_cast<int>(predicted.size()) - s.tp;
    s.fn = static_cast<int>(truth.size()) - s.tp;
    s.precision = (s.tp + s.fp) ? static_cast<double>(s.tp) / (s.tp + s.fp) : 1.0;
    s.recall = (s.tp + s.fn) ? static_cast<double>(s.tp) / (s.tp + s.fn) : 1.0;
    s.f1 = (s.precision + s.recall > 0.0)
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

// --- calibration -----------------------------------------------------------------

CalibrationMap::CalibrationMap(int rows, int cols, std::vector<Vec2> camera,
                               std::vector<Vec2> projector)
    : rows_(rows), cols_(cols), camera_(std::move(camera)), projector_(std::move(projector)) {
    if (rows_ < 2 || cols_ < 2 ||
        camera_.size() != static_cast<size_t>(rows_) * cols_ ||
        projector_.size() != camera_.size())
        throw std::runtime_error("calibration grid must be at least 2x2 and complete");
    for (int r = 0; r < rows_; ++r)
        for (int c = 1; c < cols_; ++c)
            if (cam(r, c).x <= cam(r, c - 1).x)
                throw std::runtime_error("calibration grid not monotone in x");
    for (int c = 0; c < cols_; ++c)
        for (int r = 1; r < rows_; ++r)
            if (cam(r, c).y <= cam(r - 1, c).y)
                throw std::runtime_error("calibration grid not monotone in y");
}

namespace {
// Solves p = bilerp(q00,q10,q01,q11; u,v) for (u,v); Newton from the centroid.
bool inverse_bilinear(const Vec2& q00, const Vec2& q10, const Vec2& q01, const Vec2& q11,
                      const Vec2& p, double& u, double& v) {
    u = 0.5;
    v = 0.5;
    for (int it = 0; it < 25; ++it) {
        const Vec2 f = q00 * ((1 - u) * (1 - v)) + q10 * (u * (1 - v)) + q01 * ((1 - u) * v) +
                       q11 * (u * v) - p;
        const Vec2 fu = (q10 - q00) * (1 - v) + (q11 - q01) * v;
        const Vec2 fv = (q01 - q00) * (1 - u) + (q11 - q10) * u;
        const double det = fu.x * fv.y - fu.y * fv.x;
        if (std::abs(det) < 1e-18) return false;
        const double du = (f.x * fv.y - f.y * fv.x) / det;
        const double dv = (fu.x * f.y - fu.y * f.x) / det;
        u -= du;
        v -= dv;
        if (std::abs(du) < 1e-13 && std::abs(dv) < 1e-13) return true;
    }
    return true;
}
}  // namespace

Vec2 CalibrationMap::apply(const Vec2& p) const {
    // locate the containing cell; fall back to the nearest cell (clamped
    // extrapolation at the borders)
    int best_r = 0, best_c = 0;
    double best_u = 0.5, best_v = 0.5;
    double best_score = std::numeric_limits<double>::infinity();
    for (int r = 0; r + 1 < rows_; ++r)
        for (int c = 0; c + 1 < cols_; ++c) {
            double u, v;
            if (!inverse_bilinear(cam(r, c), cam(r, c + 1), cam(r + 1, c), cam(r + 1, c + 1), p,
                                  u, v))
                continue;
            const double score = std::max({0.0, -u, u - 1.0}) + std::max({0.0, -v, v - 1.0});
            if (score < best_score) {
                best_score = score;
                best_r = r;
                best_c = c;
                best_u = u;
                best_v = v;
                if (score == 0.0) {
                    r = rows_;
                    break;
                }
            }
        }
    const double u = std::clamp(best_u, 0.0, 1.0);
    const double v = std::clamp(best_v, 0.0, 1.0);
    const Vec2& q00 = prj(best_r, best_c);
    const Vec2& q10 = prj(best_r, best_c + 1);
    const Vec2& q01 = prj(best_r + 1, best_c);
    const Vec2& q11 = prj(best_r + 1, best_c + 1);
    return q00 * ((1 - u) * (1 - v)) + q10 * (u * (1 - v)) + q01 * ((1 - u) * v) + q11 * (u * v);
}

CalibrationMap build_calibration(const std::vector<std::pair<Vec2, Vec2>>& dot_observations) {
    if (dot_observations.size() < 9)
        throw std::runtime_error("calibration needs at least a 3x3 dot grid");
    // group exact projector coordinates into rows and columns
    std::vector<double> ys, xs;
    for (const auto& [cam_p, prj_p] : dot_observations) {
        ys.push_back(prj_p.y);
        xs.push_back(prj_p.x);
    }
    auto uniq = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-6; }),
                v.end());
    };
    uniq(ys);
    uniq(xs);
    const int rows = static_cast<int>(ys.size());
    const int cols = static_cast<int>(xs.size());
    if (rows < 3 || cols < 3)
        throw std::runtime_error("calibration needs at least a 3x3 dot grid");

    auto nearest_index = [](const std::vector<double>& v, double x) {
        int best = 0;
        for (int i = 1; i < static_cast<int>(v.size()); ++i)
            if (std::abs(v[i] - x) < std::abs(v[best] - x)) best = i;
        return best;
    };
    std::vector<Vec2> camera(static_cast<size_t>(rows) * cols);
    std::vector<Vec2> projector(static_cast<size_t>(rows) * cols);
    std::vector<uint8_t> seen(static_cast<size_t>(rows) * cols, 0);
    for (const auto& [cam_p, prj_p] : dot_observations) {
        const int r = nearest_index(ys, prj_p.y);
        const int c = nearest_index(xs, prj_p.x);
        const size_t idx = static_cast<size_t>(r) * cols + c;
        if (seen[idx]) throw std::runtime_error("duplicate dot at (" + std::to_string(r) + ", " +
                                                std::to_string(c) + ")");
        seen[idx] = 1;
        camera[idx] = cam_p;
        projector[idx] = prj_p;
    }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (!seen[static_cast<size_t>(r) * cols + c])
                throw std::runtime_error("missing dot at (" + std::to_string(r) + ", " +
                                         std::to_string(c) + ")");
    return CalibrationMap(rows, cols, std::move(camera), std::move(projector));
}

void CalibrationMap::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.precision(17);
    os << "MHCAL 1\n" << rows_ << " " << cols_ << "\n";
    for (size_t i = 0; i < camera_.size(); ++i)
        os << camera_[i].x << " " << camera_[i].y << " " << projector_[i].x << " "
           << projector_[i].y << "\n";
}

CalibrationMap CalibrationMap::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    int version = 0, rows = 0, cols = 0;
    is >> magic >> version >> rows >> cols;
    if (magic != "MHCAL" || version != 1)
        throw std::runtime_error("not a calibration file: " + path);
    std::vector<Vec2> camera(static_cast<size_t>(rows) * cols);
    std::vector<Vec2> projector(camera.size());
    for (size_t i = 0; i < camera.size(); ++i)
        is >> camera[i].x >> camera[i].y >> projector[i].x >> projector[i].y;
    if (!is) throw std::runtime_error("truncated calibration file: " + path);
    return CalibrationMap(rows, cols, std::move(camera), std::move(projector));
}

}  // namespace mh
