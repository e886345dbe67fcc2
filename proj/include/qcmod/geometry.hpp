#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

namespace qcmod {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

/// Coordinate point; z stays 0 for planar spaces.
using Point = std::array<double, 3>;

inline Point make_point(double x, double y, double z = 0.0) { return {x, y, z}; }

inline double euclidean(const Point& a, const Point& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double norm(const Point& a) {
    return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
}

inline Point operator-(const Point& a, const Point& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Point operator+(const Point& a, const Point& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Point operator*(double c, const Point& a) { return {c * a[0], c * a[1], c * a[2]}; }

inline std::complex<double> to_complex(const Point& a) { return {a[0], a[1]}; }

inline Point from_complex(std::complex<double> z) { return {z.real(), z.imag(), 0.0}; }

/// A point of the compactified plane/space: either finite or the point at infinity.
/// Map evaluations that overflow the double range collapse to infinity, which the
/// chordal metric handles natively.
struct ExtendedPt {
    Point p{0.0, 0.0, 0.0};
    bool at_infinity = false;

    static ExtendedPt infinity() { return {{0.0, 0.0, 0.0}, true}; }
    static ExtendedPt finite(const Point& q) { return {q, false}; }
};

} // namespace qcmod
