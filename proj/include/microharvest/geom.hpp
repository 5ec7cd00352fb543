#pragma once

#include <algorithm>
#include <cmath>

namespace mh {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm_sq()); }
};

inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }
inline double dist_sq(const Vec2& a, const Vec2& b) { return (a - b).norm_sq(); }

// Distance from point p to the closed segment [a,b].
inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len_sq = ab.norm_sq();
    if (len_sq <= 0.0) return dist(p, a);
    double t = (p - a).dot(ab) / len_sq;
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, a + ab * t);
}

// Minimum distance between two points moving with constant velocities over [0, dt].
// a(t) = a0 + va*t, b(t) = b0 + vb*t.
inline double min_dist_moving_points(const Vec2& a0, const Vec2& va,
                                     const Vec2& b0, const Vec2& vb, double dt) {
    const Vec2 d0 = a0 - b0;
    const Vec2 dv = va - vb;
    const double dv2 = dv.norm_sq();
    double t_min = 0.0;
    if (dv2 > 0.0) t_min = std::clamp(-d0.dot(dv) / dv2, 0.0, dt);
    return (d0 + dv * t_min).norm();
}

struct Circle {
    Vec2 center;
    double radius = 0.0;
};

struct BBox {
    Vec2 lo{0, 0};
    Vec2 hi{0, 0};
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    Vec2 center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }
    void expand(const Vec2& p) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
};

template <typename It>
BBox bbox_of(It first, It last) {
    BBox b;
    if (first == last) return b;
    b.lo = b.hi = *first;
    for (It it = first; it != last; ++it) b.expand(*it);
    return b;
}

}  // namespace mh
