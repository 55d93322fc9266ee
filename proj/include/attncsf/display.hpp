#pragma once

#include "attncsf/kv_format.hpp"
#include "attncsf/types.hpp"

#include <array>

namespace attncsf {

/// Physical viewing setup; bridges pixel and visual-angle space.
struct DisplayGeometry {
    double pixel_pitch_m = 0.0;
    double viewing_distance_m = 0.0;
    double lens_magnification = 1.0; ///< 1 for a desktop monitor
    int width = 0;
    int height = 0;
    Vector2 center_pixel{0.0, 0.0}; ///< pixel directly in front of the eye
    double gamma = 2.2;
    double luminance_min = 0.0;
    double luminance_max = 100.0;
    double background_luminance = 28.0;
    /// Relative luminance of the R, G, B primaries.
    std::array<double, 3> primary_weights{0.2126, 0.7152, 0.0722};

    /// Pixels spanned by the first degree of visual angle from the center pixel.
    double pixels_per_degree() const;

    /// Throws DomainError on non-physical values.
    void validate() const;

    /// 34" 3440x1440 monitor viewed from 94 cm: about 71 ppd and 46 x 20 deg.
    static DisplayGeometry study_monitor();

    /// Flat display of the given size whose center density is exactly `ppd`.
    static DisplayGeometry with_ppd(double ppd, int width, int height, double viewing_distance_m = 0.94);

    /// Same physical setup resized to another raster, centered.
    DisplayGeometry resized(int new_width, int new_height) const;
};

/// Visual angle (deg) between the lines of sight through two pixels.
double angle_between_pixels(const DisplayGeometry& geom, const Vector2& a, const Vector2& b);

/// Eccentricity (deg) of a pixel relative to the center pixel.
double pixel_to_eccentricity(const DisplayGeometry& geom, const Vector2& pixel);

/// Angular position (deg) of a pixel: eccentricity along the pixel's direction from
/// the center, with +x right and +y up.
Vector2 visual_position(const DisplayGeometry& geom, const Vector2& pixel);

/// Inverse of visual_position.
Vector2 pixel_at(const DisplayGeometry& geom, const Vector2& position_deg);

/// Radial pixel distance from the center at which eccentricity e is reached.
double eccentricity_to_pixel_distance(const DisplayGeometry& geom, double e_deg);

KeyValues to_key_values(const DisplayGeometry& geom);
DisplayGeometry display_geometry_from(const KeyValues& kv, const DisplayGeometry& defaults = DisplayGeometry::study_monitor());

} // namespace attncsf
