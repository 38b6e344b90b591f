#pragma once

// Minutiae data model and the planar geometry shared by descriptors and
// pair relaxation.
//
// Coordinate convention: image coordinates, x to the right and y downward.
// Angles (minutia directions, ray angles) are measured counter-clockwise as
// seen on the image, i.e. in the y-up frame. A direction theta therefore
// points along the image vector (cos theta, -sin theta).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace latfuse {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps any finite angle into [0, 2pi).
inline double normalize_angle(double theta)
{
    double r = std::fmod(theta, kTwoPi);
    if (r < 0.0)
        r += kTwoPi;
    // fmod of a tiny negative value can round back up to exactly 2pi
    if (r >= kTwoPi)
        r = 0.0;
    return r;
}

/// Wraps any finite angle into [-pi, pi).
inline double wrap_signed(double theta)
{
    return normalize_angle(theta + kPi) - kPi;
}

struct Minutia
{
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;   ///< radians, always in [0, 2pi)
    double quality = 1.0; ///< carried through I/O, not used by the matchers

    Minutia() = default;
    Minutia(double x_, double y_, double theta_, double quality_ = 1.0)
        : x(x_)
        , y(y_)
        , theta(normalize_angle(theta_))
        , quality(quality_)
    {
        if (!std::isfinite(x_) || !std::isfinite(y_) || !std::isfinite(theta_))
            throw Error("minutia coordinates and direction must be finite");
    }

    friend bool operator==(const Minutia&, const Minutia&) = default;
};

/// Ordered minutiae of one impression. The order is the index space used by
/// descriptor sets, similarity matrices and pair sets. Empty is legal.
struct MinutiaeTemplate
{
    std::string id;
    std::vector<Minutia> minutiae;
    std::optional<int> width;
    std::optional<int> height;

    std::size_t size() const noexcept { return minutiae.size(); }
    bool empty() const noexcept { return minutiae.empty(); }
    const Minutia& operator[](std::size_t i) const { return minutiae[i]; }

    friend bool operator==(const MinutiaeTemplate&, const MinutiaeTemplate&) = default;
};

/// Circular distance between two directions, in [0, pi].
inline double angular_difference(double theta1, double theta2)
{
    const double d = std::abs(normalize_angle(theta1) - normalize_angle(theta2));
    return std::min(d, kTwoPi - d);
}

inline double euclidean_distance(const Minutia& a, const Minutia& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

inline double direction_difference(const Minutia& a, const Minutia& b)
{
    return angular_difference(a.theta, b.theta);
}

/// Angle of the ray from a to b in the y-up frame, in [0, 2pi).
inline double ray_angle(const Minutia& a, const Minutia& b)
{
    return normalize_angle(std::atan2(a.y - b.y, b.x - a.x));
}

/// Difference between a's direction and the ray from a to b, in [0, pi].
/// Not symmetric: radial_angle(a, b) != radial_angle(b, a) in general.
/// Co-located minutiae give 0.
inline double radial_angle(const Minutia& a, const Minutia& b)
{
    if (a.x == b.x && a.y == b.y)
        return 0.0;
    return angular_difference(a.theta, ray_angle(a, b));
}

/// Rigid motion of a whole template: rotation by `angle` (counter-clockwise
/// on the image) about (cx, cy), followed by a shift of (dx, dy) pixels.
/// Directions rotate with the positions.
inline MinutiaeTemplate rigid_transform(const MinutiaeTemplate& t, double angle, double cx,
                                        double cy, double dx, double dy)
{
    MinutiaeTemplate out = t;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (auto& m : out.minutiae) {
        const double px = m.x - cx;
        const double py_up = cy - m.y;
        const double rx = c * px - s * py_up;
        const double ry_up = s * px + c * py_up;
        m = Minutia(cx + rx + dx, cy - ry_up + dy, m.theta + angle, m.quality);
    }
    return out;
}

} // namespace latfuse
