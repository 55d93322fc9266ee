#include "attncsf/display.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace attncsf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Vector3d line_of_sight(const DisplayGeometry& g, const Vector2& pixel) {
    const Vector2 offset = (pixel - g.center_pixel) * g.pixel_pitch_m;
    return {offset.x(), offset.y(), g.viewing_distance_m / g.lens_magnification};
}

double effective_distance(const DisplayGeometry& g) { return g.viewing_distance_m / g.lens_magnification; }

} // namespace

double DisplayGeometry::pixels_per_degree() const {
    return effective_distance(*this) * std::tan(kDeg) / pixel_pitch_m;
}

void DisplayGeometry::validate() const {
    if (!(pixel_pitch_m > 0.0)) throw DomainError("pixel pitch must be > 0");
    if (!(viewing_distance_m > 0.0)) throw DomainError("viewing distance must be > 0");
    if (!(lens_magnification > 0.0)) throw DomainError("lens magnification must be > 0");
    if (width <= 0 || height <= 0) throw DomainError("resolution must be positive");
    if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
    if (!(luminance_min >= 0.0) || !(luminance_max > luminance_min))
        throw DomainError("luminance range must satisfy 0 <= min < max");
    if (!(background_luminance >= luminance_min && background_luminance <= luminance_max))
        throw DomainError("background luminance outside the display range");
}

DisplayGeometry DisplayGeometry::study_monitor() {
    DisplayGeometry g;
    g.width = 3440;
    g.height = 1440;
    // 34" diagonal over a 3440x1440 raster.
    g.pixel_pitch_m = 34.0 * 0.0254 / std::hypot(3440.0, 1440.0);
    g.viewing_distance_m = 0.94;
    g.center_pixel = {(g.width - 1) / 2.0, (g.height - 1) / 2.0};
    g.gamma = 1.89;
    g.luminance_min = 0.6;
    g.luminance_max = 104.0;
    g.background_luminance = 28.0;
    return g;
}

DisplayGeometry DisplayGeometry::with_ppd(double ppd, int width, int height, double viewing_distance_m) {
    DisplayGeometry g = study_monitor();
    g.width = width;
    g.height = height;
    g.viewing_distance_m = viewing_distance_m;
    g.pixel_pitch_m = viewing_distance_m * std::tan(kDeg) / ppd;
    g.center_pixel = {(width - 1) / 2.0, (height - 1) / 2.0};
    return g;
}

DisplayGeometry DisplayGeometry::resized(int new_width, int new_height) const {
    DisplayGeometry g = *this;
    g.width = new_width;
    g.height = new_height;
    g.center_pixel = {(new_width - 1) / 2.0, (new_height - 1) / 2.0};
    return g;
}

double angle_between_pixels(const DisplayGeometry& geom, const Vector2& a, const Vector2& b) {
    const Eigen::Vector3d u = line_of_sight(geom, a);
    const Eigen::Vector3d v = line_of_sight(geom, b);
    return std::atan2(u.cross(v).norm(), u.dot(v)) / kDeg;
}

double pixel_to_eccentricity(const DisplayGeometry& geom, const Vector2& pixel) {
    const double r = (pixel - geom.center_pixel).norm() * geom.pixel_pitch_m;
    return std::atan2(r, effective_distance(geom)) / kDeg;
}

Vector2 visual_position(const DisplayGeometry& geom, const Vector2& pixel) {
    Vector2 d = pixel - geom.center_pixel;
    d.y() = -d.y();
    const double r = d.norm();
    if (r == 0.0) return Vector2::Zero();
    const double e = std::atan2(r * geom.pixel_pitch_m, effective_distance(geom)) / kDeg;
    return d * (e / r);
}

Vector2 pixel_at(const DisplayGeometry& geom, const Vector2& position_deg) {
    const double e = position_deg.norm();
    if (e == 0.0) return geom.center_pixel;
    const double r = eccentricity_to_pixel_distance(geom, e);
    Vector2 d = position_deg * (r / e);
    d.y() = -d.y();
    return geom.center_pixel + d;
}

double eccentricity_to_pixel_distance(const DisplayGeometry& geom, double e_deg) {
    if (!(e_deg >= 0.0 && e_deg < 90.0)) throw DomainError("eccentricity must lie in [0, 90) deg");
    return std::tan(e_deg * kDeg) * effective_distance(geom) / geom.pixel_pitch_m;
}

KeyValues to_key_values(const DisplayGeometry& g) {
    KeyValues kv;
    kv.set("pixel_pitch_m", g.pixel_pitch_m);
    kv.set("viewing_distance_m", g.viewing_distance_m);
    kv.set("lens_magnification", g.lens_magnification);
    kv.set("width", g.width);
    kv.set("height", g.height);
    kv.set("center_x", g.center_pixel.x());
    kv.set("center_y", g.center_pixel.y());
    kv.set("gamma", g.gamma);
    kv.set("luminance_min", g.luminance_min);
    kv.set("luminance_max", g.luminance_max);
    kv.set("background_luminance", g.background_luminance);
    kv.set("weight_r", g.primary_weights[0]);
    kv.set("weight_g", g.primary_weights[1]);
    kv.set("weight_b", g.primary_weights[2]);
    return kv;
}

DisplayGeometry display_geometry_from(const KeyValues& kv, const DisplayGeometry& defaults) {
    DisplayGeometry g = defaults;
    g.width = static_cast<int>(kv.get_int("width", g.width));
    g.height = static_cast<int>(kv.get_int("height", g.height));
    g.viewing_distance_m = kv.get_double("viewing_distance_m", g.viewing_distance_m);
    g.lens_magnification = kv.get_double("lens_magnification", g.lens_magnification);
    if (kv.contains("pixels_per_degree")) {
        g.pixel_pitch_m = g.viewing_distance_m / g.lens_magnification * std::tan(kDeg) /
                          kv.get_double("pixels_per_degree");
    }
    g.pixel_pitch_m = kv.get_double("pixel_pitch_m", g.pixel_pitch_m);
    const bool resized = kv.contains("width") || kv.contains("height");
    const Vector2 center = resized ? Vector2((g.width - 1) / 2.0, (g.height - 1) / 2.0) : g.center_pixel;
    g.center_pixel = {kv.get_double("center_x", center.x()), kv.get_double("center_y", center.y())};
    g.gamma = kv.get_double("gamma", g.gamma);
    g.luminance_min = kv.get_double("luminance_min", g.luminance_min);
    g.luminance_max = kv.get_double("luminance_max", g.luminance_max);
    g.background_luminance = kv.get_double("background_luminance", g.background_luminance);
    g.primary_weights = {kv.get_double("weight_r", g.primary_weights[0]),
                         kv.get_double("weight_g", g.primary_weights[1]),
                         kv.get_double("weight_b", g.primary_weights[2])};
    g.validate();
    return g;
}

} // namespace attncsf
