#include "microharvest/imgops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>

namespace mh {

// --- filtering ---------------------------------------------------------------

ImageF gaussian_blur(const ImageF& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = static_cast<float>(v);
        sum += v;
    }
    for (auto& v : k) v = static_cast<float>(v / sum);

    const int w = img.width(), h = img.height();
    ImageF tmp(w, h), out(w, h);
    auto reflect = [](int i, int n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
        return std::clamp(i, 0, n - 1);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * img.at(reflect(x + i, w), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp.at(x, reflect(y + i, h));
            out.at(x, y) = acc;
        }
    return out;
}

ImageU8 clahe(const ImageU8& img, double clip_limit, int tile_px) {
    const int w = img.width(), h = img.height();
    const int tx = (w + tile_px - 1) / tile_px;
    const int ty = (h + tile_px - 1) / tile_px;

    // per-tile clipped-histogram CDF mapping
    std::vector<std::array<uint8_t, 256>> maps(static_cast<size_t>(tx) * ty);
    for (int tj = 0; tj < ty; ++tj) {
        for (int ti = 0; ti < tx; ++ti) {
            const int x0 = ti * tile_px, y0 = tj * tile_px;
            const int x1 = std::min(w, x0 + tile_px), y1 = std::min(h, y0 + tile_px);
            const int n = (x1 - x0) * (y1 - y0);
            std::array<int, 256> hist{};
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) ++hist[img.at(x, y)];
            const int limit = std::max(1, static_cast<int>(clip_limit * n / 256.0));
            int excess = 0;
            for (auto& c : hist) {
                if (c > limit) {
                    excess += c - limit;
                    c = limit;
                }
            }
            const int add = excess / 256;
            int rem = excess - add * 256;
            for (int b = 0; b < 256; ++b) {
                hist[b] += add;
                if (rem > 0) {
                    ++hist[b];
                    --rem;
                }
            }
            auto& m = maps[static_cast<size_t>(tj) * tx + ti];
            int cum = 0;
            for (int b = 0; b < 256; ++b) {
                cum += hist[b];
                m[b] = static_cast<uint8_t>(std::lround(255.0 * cum / n));
            }
        }
    }

    // bilinear blending of neighboring tile mappings
    ImageU8 out(w, h);
    for (int y = 0; y < h; ++y) {
        const double fy = (y + 0.5) / tile_px - 0.5;
        int j0 = static_cast<int>(std::floor(fy));
        const double wy = fy - j0;
        const int j1 = std::clamp(j0 + 1, 0, ty - 1);
        j0 = std::clamp(j0, 0, ty - 1);
        for (int x = 0; x < w; ++x) {
            const double fx = (x + 0.5) / tile_px - 0.5;
            int i0 = static_cast<int>(std::floor(fx));
            const double wx = fx - i0;
            const int i1 = std::clamp(i0 + 1, 0, tx - 1);
            i0 = std::clamp(i0, 0, tx - 1);
            const uint8_t v = img.at(x, y);
            const double v00 = maps[static_cast<size_t>(j0) * tx + i0][v];
            const double v10 = maps[static_cast<size_t>(j0) * tx + i1][v];
            const double v01 = maps[static_cast<size_t>(j1) * tx + i0][v];
            const double v11 = maps[static_cast<size_t>(j1) * tx + i1][v];
            const double r = (1 - wy) * ((1 - wx) * v00 + wx * v10) +
                             wy * ((1 - wx) * v01 + wx * v11);
            out.at(x, y) = static_cast<uint8_t>(std::lround(r));
        }
    }
    return out;
}

void sobel_gradients(const ImageF& img, ImageF& gx, ImageF& gy) {
    const int w = img.width(), h = img.height();
    gx = ImageF(w, h, 0.0f);
    gy = ImageF(w, h, 0.0f);
    auto px = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return img.at(x, y);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            gx.at(x, y) = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                          (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            gy.at(x, y) = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                          (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
        }
}

ImageF scharr_magnitude(const ImageF& img) {
    const int w = img.width(), h = img.height();
    ImageF out(w, h, 0.0f);
    auto px = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return img.at(x, y);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float sx = 3 * px(x + 1, y - 1) + 10 * px(x + 1, y) + 3 * px(x + 1, y + 1) -
                             3 * px(x - 1, y - 1) - 10 * px(x - 1, y) - 3 * px(x - 1, y + 1);
            const float sy = 3 * px(x - 1, y + 1) + 10 * px(x, y + 1) + 3 * px(x + 1, y + 1) -
                             3 * px(x - 1, y - 1) - 10 * px(x, y - 1) - 3 * px(x + 1, y - 1);
            out.at(x, y) = std::sqrt(sx * sx + sy * sy);
        }
    return out;
}

// --- thresholding --------------------------------------------------------------

namespace {
int otsu_from_hist(const std::array<int64_t, 256>& hist) {
    int64_t total = 0;
    double sum_all = 0.0;
    for (int b = 0; b < 256; ++b) {
        total += hist[b];
        sum_all += static_cast<double>(b) * hist[b];
    }
    if (total == 0) return 0;
    double sum_b = 0.0;
    int64_t w_b = 0;
    double best_var = -1.0;
    int best_t = 0;
    for (int t = 0; t < 256; ++t) {
        w_b += hist[t];
        if (w_b == 0) continue;
        const int64_t w_f = total - w_b;
        if (w_f == 0) break;
        sum_b += static_cast<double>(t) * hist[t];
        const double m_b = sum_b / w_b;
        const double m_f = (sum_all - sum_b) / w_f;
        const double var = static_cast<double>(w_b) * static_cast<double>(w_f) *
                           (m_b - m_f) * (m_b - m_f);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    return best_t;
}
}  // namespace

int otsu_threshold(const ImageU8& img) {
    std::array<int64_t, 256> hist{};
    for (size_t i = 0; i < img.size(); ++i) ++hist[img[i]];
    return otsu_from_hist(hist);
}

int otsu_threshold_masked(const ImageU8& img, const GridU8& mask) {
    std::array<int64_t, 256> hist{};
    for (size_t i = 0; i < img.size(); ++i)
        if (mask[i]) ++hist[img[i]];
    return otsu_from_hist(hist);
}

GridU8 hysteresis_threshold(const ImageF& img, double lo, double hi) {
    const int w = img.width(), h = img.height();
    GridU8 out(w, h, 0);
    std::vector<int> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (img.at(x, y) >= hi) {
                out.at(x, y) = 1;
                stack.push_back(y * w + x);
            }
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cx = cur % w, cy = cur / w;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = cx + dx, ny = cy + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                if (out.at(nx, ny)) continue;
                if (img.at(nx, ny) >= lo) {
                    out.at(nx, ny) = 1;
                    stack.push_back(ny * w + nx);
                }
            }
    }
    return out;
}

GridU8 canny(const ImageF& img, double lo, double hi, double sigma) {
    const ImageF smooth = gaussian_blur(img, sigma);
    ImageF gx, gy;
    sobel_gradients(smooth, gx, gy);
    const int w = img.width(), h = img.height();
    ImageF mag(w, h, 0.0f);
    for (size_t i = 0; i < mag.size(); ++i)
        mag[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);

    // non-maximum suppression along the quantized gradient direction
    ImageF nms(w, h, 0.0f);
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const float m = mag.at(x, y);
            if (m <= 0.0f) continue;
            const double ang = std::atan2(gy.at(x, y), gx.at(x, y));
            const double deg = std::fmod(ang * 180.0 / M_PI + 180.0, 180.0);
            int dx = 1, dy = 0;
            if (deg >= 22.5 && deg < 67.5) {
                dx = 1;
                dy = 1;
            } else if (deg >= 67.5 && deg < 112.5) {
                dx = 0;
                dy = 1;
            } else if (deg >= 112.5 && deg < 157.5) {
                dx = -1;
                dy = 1;
            }
            if (m >= mag.at(x + dx, y + dy) && m >= mag.at(x - dx, y - dy))
                nms.at(x, y) = m;
        }
    return hysteresis_threshold(nms, lo, hi);
}

// --- morphology ----------------------------------------------------------------

namespace {
std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> off;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) off.emplace_back(dx, dy);
    return off;
}
}  // namespace

GridU8 erode(const GridU8& mask, int radius) {
    const auto off = disk_offsets(radius);
    const int w = mask.width(), h = mask.height();
    GridU8 out(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            bool all = true;
            for (const auto& [dx, dy] : off) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h || !mask.at(nx, ny)) {
                    all = false;
                    break;
                }
            }
            out.at(x, y) = all ? 1 : 0;
        }
    return out;
}

GridU8 dilate(const GridU8& mask, int radius) {
    const auto off = disk_offsets(radius);
    const int w = mask.width(), h = mask.height();
    GridU8 out(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at(x, y)) continue;
            for (const auto& [dx, dy] : off) {
                const int nx = x + dx, ny = y + dy;
                if (nx >= 0 && ny >= 0 && nx < w && ny < h) out.at(nx, ny) = 1;
            }
        }
    return out;
}

// --- components ------------------------------------------------------------------

int connected_components(const GridU8& mask, GridI32& ids, int connectivity) {
    const int w = mask.width(), h = mask.height();
    ids = GridI32(w, h, -1);
    int count = 0;
    std::vector<int> stack;
    const int n_nb = (connectivity == 8) ? 8 : 4;
    static const int nb8[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                  {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    for (int y0 = 0; y0 < h; ++y0)
        for (int x0 = 0; x0 < w; ++x0) {
            if (!mask.at(x0, y0) || ids.at(x0, y0) >= 0) continue;
            const int id = count++;
            ids.at(x0, y0) = id;
            stack.push_back(y0 * w + x0);
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cx = cur % w, cy = cur / w;
                for (int k = 0; k < n_nb; ++k) {
                    const int nx = cx + nb8[k][0], ny = cy + nb8[k][1];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    if (!mask.at(nx, ny) || ids.at(nx, ny) >= 0) continue;
                    ids.at(nx, ny) = id;
                    stack.push_back(ny * w + nx);
                }
            }
        }
    return count;
}

std::vector<Component> component_stats(const GridI32& ids, int count) {
    std::vector<Component> comps(count);
    for (int i = 0; i < count; ++i) {
        comps[i].id = i;
        comps[i].min_x = ids.width();
        comps[i].min_y = ids.height();
        comps[i].max_x = -1;
        comps[i].max_y = -1;
    }
    for (int y = 0; y < ids.height(); ++y)
        for (int x = 0; x < ids.width(); ++x) {
            const int id = ids.at(x, y);
            if (id < 0) continue;
            auto& c = comps[id];
            ++c.area;
            c.cx += x + 0.5;
            c.cy += y + 0.5;
            c.min_x = std::min(c.min_x, x);
            c.min_y = std::min(c.min_y, y);
            c.max_x = std::max(c.max_x, x);
            c.max_y = std::max(c.max_y, y);
        }
    for (auto& c : comps) {
        if (c.area > 0) {
            c.cx /= c.area;
            c.cy /= c.area;
        }
    }
    return comps;
}

GridU8 component_mask(const GridI32& ids, const Component& c, int pad) {
    const int w = c.max_x - c.min_x + 1 + 2 * pad;
    const int h = c.max_y - c.min_y + 1 + 2 * pad;
    GridU8 out(w, h, 0);
    for (int y = c.min_y; y <= c.max_y; ++y)
        for (int x = c.min_x; x <= c.max_x; ++x)
            if (ids.at(x, y) == c.id)
                out.at(x - c.min_x + pad, y - c.min_y + pad) = 1;
    return out;
}

GridU8 fill_holes(const GridU8& mask) {
    const int w = mask.width(), h = mask.height();
    // flood background from the border with 4-connectivity (8-connected foreground)
    GridU8 outside(w, h, 0);
    std::vector<int> stack;
    auto push = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        if (mask.at(x, y) || outside.at(x, y)) return;
        outside.at(x, y) = 1;
        stack.push_back(y * w + x);
    };
    for (int x = 0; x < w; ++x) {
        push(x, 0);
        push(x, h - 1);
    }
    for (int y = 0; y < h; ++y) {
        push(0, y);
        push(w - 1, y);
    }
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cx = cur % w, cy = cur / w;
        push(cx + 1, cy);
        push(cx - 1, cy);
        push(cx, cy + 1);
        push(cx, cy - 1);
    }
    GridU8 out(w, h, 0);
    for (size_t i = 0; i < out.size(); ++i) out[i] = (mask[i] || !outside[i]) ? 1 : 0;
    return out;
}

GridU8 remove_border_components(const GridU8& mask) {
    GridI32 ids;
    const int n = connected_components(mask, ids, 8);
    std::vector<uint8_t> touches(n, 0);
    const int w = mask.width(), h = mask.height();
    for (int x = 0; x < w; ++x) {
        if (ids.at(x, 0) >= 0) touches[ids.at(x, 0)] = 1;
        if (ids.at(x, h - 1) >= 0) touches[ids.at(x, h - 1)] = 1;
    }
    for (int y = 0; y < h; ++y) {
        if (ids.at(0, y) >= 0) touches[ids.at(0, y)] = 1;
        if (ids.at(w - 1, y) >= 0) touches[ids.at(w - 1, y)] = 1;
    }
    GridU8 out(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int id = ids.at(x, y);
            if (id >= 0 && !touches[id]) out.at(x, y) = 1;
        }
    return out;
}

GridU8 filter_components_by_area(const GridU8& mask, int min_area, int max_area) {
    GridI32 ids;
    const int n = connected_components(mask, ids, 8);
    const auto stats = component_stats(ids, n);
    GridU8 out(mask.width(), mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            const int id = ids.at(x, y);
            if (id < 0) continue;
            if (stats[id].area >= min_area && stats[id].area <= max_area)
                out.at(x, y) = 1;
        }
    return out;
}

// --- skeletons -----------------------------------------------------------------

GridU8 zhang_suen_thin(const GridU8& mask) {
    const int w = mask.width(), h = mask.height();
    GridU8 img = mask;
    auto p = [&](int x, int y) -> int {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0;
        return img.at(x, y) ? 1 : 0;
    };
    bool changed = true;
    std::vector<std::pair<int, int>> kill;
    while (changed) {
        changed = false;
        for (int pass = 0; pass < 2; ++pass) {
            kill.clear();
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    if (!img.at(x, y)) continue;
                    const int p2 = p(x, y - 1), p3 = p(x + 1, y - 1), p4 = p(x + 1, y);
                    const int p5 = p(x + 1, y + 1), p6 = p(x, y + 1), p7 = p(x - 1, y + 1);
                    const int p8 = p(x - 1, y), p9 = p(x - 1, y - 1);
                    const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    if (b < 2 || b > 6) continue;
                    int a = 0;
                    const int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
                    for (int i = 0; i < 8; ++i)
                        if (seq[i] == 0 && seq[i + 1] == 1) ++a;
                    if (a != 1) continue;
                    if (pass == 0) {
                        if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
                    } else {
                        if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
                    }
                    kill.emplace_back(x, y);
                }
            for (const auto& [x, y] : kill) img.at(x, y) = 0;
            if (!kill.empty()) changed = true;
        }
    }
    return img;
}

SkeletonInfo analyze_skeleton(const GridU8& mask, double min_branch_len) {
    SkeletonInfo info;
    info.skeleton = zhang_suen_thin(mask);
    const GridU8& sk = info.skeleton;
    const int w = sk.width(), h = sk.height();

    auto on = [&](int x, int y) -> bool {
        return x >= 0 && y >= 0 && x < w && y < h && sk.at(x, y);
    };
    auto degree = [&](int x, int y) {
        int d = 0;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                if (on(x + dx, y + dy)) ++d;
            }
        return d;
    };

    std::vector<std::pair<int, int>> endpoints;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!sk.at(x, y)) continue;
            ++info.skeleton_pixels;
            const int d = degree(x, y);
            if (d == 1) {
                endpoints.emplace_back(x, y);
            } else if (d >= 3) {
                ++info.junctions;
            }
        }
    info.endpoints = static_cast<int>(endpoints.size());

    GridU8 used(w, h, 0);  // consumed as a branch terminal
    for (const auto& [ex, ey] : endpoints) {
        if (used.at(ex, ey)) continue;
        std::vector<std::pair<int, int>> path{{ex, ey}};
        GridU8 visited(w, h, 0);
        visited.at(ex, ey) = 1;
        int cx = ex, cy = ey;
        double len = 0.0;
        for (;;) {
            // a junction neighbor ends the branch; otherwise continue the chain
            int nx = -1, ny = -1;
            bool next_is_junction = false;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int qx = cx + dx, qy = cy + dy;
                    if (!on(qx, qy) || visited.at(qx, qy)) continue;
                    const bool is_junction = degree(qx, qy) >= 3;
                    if (nx < 0 || (is_junction && !next_is_junction)) {
                        nx = qx;
                        ny = qy;
                        next_is_junction = is_junction;
                    }
                }
            if (nx < 0) break;  // dead end
            len += std::sqrt(static_cast<double>((nx - cx) * (nx - cx) + (ny - cy) * (ny - cy)));
            visited.at(nx, ny) = 1;
            path.emplace_back(nx, ny);
            if (next_is_junction) break;
            if (degree(nx, ny) == 1) {  // reached the other endpoint
                used.at(nx, ny) = 1;
                break;
            }
            cx = nx;
            cy = ny;
        }
        used.at(ex, ey) = 1;
        if (len >= min_branch_len) {
            info.branches.push_back(std::move(path));
            info.branch_lengths.push_back(len);
        }
    }
    return info;
}

// --- geometry ----------------------------------------------------------------

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    if (pts.size() < 2) return pts;
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) return pts;
    auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    };
    std::vector<Vec2> hull(2 * pts.size());
    size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    const size_t lower = k + 1;
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
        hull[k++] = *it;
    }
    hull.resize(k - 1);
    return hull;
}

namespace {
bool point_in_hull(const std::vector<Vec2>& hull, const Vec2& p, double eps) {
    if (hull.empty()) return false;
    if (hull.size() == 1) return dist(hull[0], p) <= eps;
    if (hull.size() == 2) return dist_point_segment(p, hull[0], hull[1]) <= eps;
    for (size_t i = 0; i < hull.size(); ++i) {
        const Vec2& a = hull[i];
        const Vec2& b = hull[(i + 1) % hull.size()];
        const double c = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if (c < -eps * (dist(a, b) + 1.0)) return false;
    }
    return true;
}
}  // namespace

int convex_area_pixels(const GridU8& mask) {
    std::vector<Vec2> pts;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) pts.push_back({x + 0.5, y + 0.5});
    if (pts.empty()) return 0;
    const auto hull = convex_hull(pts);
    const BBox bb = bbox_of(pts.begin(), pts.end());
    int count = 0;
    for (int y = static_cast<int>(bb.lo.y); y <= static_cast<int>(bb.hi.y); ++y)
        for (int x = static_cast<int>(bb.lo.x); x <= static_cast<int>(bb.hi.x); ++x)
            if (point_in_hull(hull, {x + 0.5, y + 0.5}, 1e-9)) ++count;
    return count;
}

namespace {
Circle circle_from(const Vec2& a, const Vec2& b) {
    const Vec2 c = (a + b) * 0.5;
    return {c, dist(a, b) * 0.5};
}

Circle circle_from(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double ax = a.x, ay = a.y, bx = b.x, by = b.y, cx = c.x, cy = c.y;
    const double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if (std::abs(d) < 1e-12) {
        // collinear: take the widest pair
        Circle best = circle_from(a, b);
        const Circle c2 = circle_from(a, c), c3 = circle_from(b, c);
        if (c2.radius > best.radius) best = c2;
        if (c3.radius > best.radius) best = c3;
        return best;
    }
    const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
    const Vec2 ctr{(a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d,
                   (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d};
    return {ctr, dist(ctr, a)};
}

bool in_circle(const Circle& c, const Vec2& p) {
    return dist(c.center, p) <= c.radius + 1e-9;
}
}  // namespace

Circle min_enclosing_circle(std::vector<Vec2> pts) {
    if (pts.empty()) return {};
    if (pts.size() == 1) return {pts[0], 0.0};
    // deterministic shuffle
    std::mt19937 rng(0x5eed);
    for (size_t i = pts.size(); i > 1; --i) std::swap(pts[i - 1], pts[rng() % i]);

    Circle c{pts[0], 0.0};
    for (size_t i = 1; i < pts.size(); ++i) {
        if (in_circle(c, pts[i])) continue;
        c = {pts[i], 0.0};
        for (size_t j = 0; j < i; ++j) {
            if (in_circle(c, pts[j])) continue;
            c = circle_from(pts[i], pts[j]);
            for (size_t k = 0; k < j; ++k) {
                if (in_circle(c, pts[k])) continue;
                c = circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    return c;
}

double mean_under_mask(const ImageU8& img, const GridU8& mask, int off_x, int off_y) {
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            const int ix = x + off_x, iy = y + off_y;
            if (!img.in_bounds(ix, iy)) continue;
            sum += img.at(ix, iy);
            ++n;
        }
    return n ? sum / n : 0.0;
}

}  // namespace mh
