#pragma once

#include <cmath>

#include <tppd/error.hpp>

namespace tppd {

/// Mean Earth radius, meters.
inline constexpr double earth_radius_m = 6'371'000.0;

struct geo_point {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
};

inline bool is_valid(const geo_point& p) {
    return p.lat_deg >= -90.0 && p.lat_deg <= 90.0 &&
           p.lon_deg >= -180.0 && p.lon_deg <= 180.0;
}

inline double deg_to_rad(double deg) {
    return deg * (3.14159265358979323846 / 180.0);
}

/// Great-circle distance in meters, atan2 form for stability near antipodes.
/// Coordinates are stored in degrees and converted here, nowhere else.
inline double haversine_distance(const geo_point& a, const geo_point& b) {
    const double phi1 = deg_to_rad(a.lat_deg);
    const double phi2 = deg_to_rad(b.lat_deg);
    const double dphi = deg_to_rad(b.lat_deg - a.lat_deg);
    const double dlam = deg_to_rad(b.lon_deg - a.lon_deg);

    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    if (h > 1.0) h = 1.0; // rounding guard
    if (h < 0.0) h = 0.0;
    const double c = 2.0 * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
    return earth_radius_m * c;
}

/// Min-max scaling interval. Degenerate intervals (max <= min) are rejected
/// at construction so normalize/denormalize never divide by zero.
class normalization_bounds {
public:
    normalization_bounds(double min_value, double max_value)
        : min_(min_value), max_(max_value) {
        require(max_value > min_value,
                "normalization_bounds: max must be strictly greater than min");
    }

    double min() const { return min_; }
    double max() const { return max_; }
    double span() const { return max_ - min_; }

private:
    double min_;
    double max_;
};

/// (x - min) / (max - min). Values outside the bounds map linearly outside
/// [0, 1]; callers decide whether that is acceptable.
inline double normalize(double x, const normalization_bounds& b) {
    return (x - b.min()) / b.span();
}

inline double denormalize(double u, const normalization_bounds& b) {
    return b.min() + u * b.span();
}

} // namespace tppd
