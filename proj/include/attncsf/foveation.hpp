#pragma once

#include "attncsf/display.hpp"
#include "attncsf/types.hpp"

namespace attncsf {

/// Linear minimum-angle-of-resolution model, omega(e) = slope * e + omega0 (degrees).
struct MarModel {
    double slope = 0.0;
    double omega0 = 1.0 / 48.0;

    template <typename Scalar>
    Scalar operator()(const Scalar& e) const {
        return Scalar(slope) * e + Scalar(omega0);
    }
};

double mar(const MarModel& model, Eccentricity e);

struct FoveationConfig {
    double omega_s = 0.0283;   ///< peak MAR of the display (deg)
    double sigma_c = 2.0;      ///< filter cut-off
    Vector2 gaze{0.0, 0.0};    ///< gaze position in pixels

    /// omega_s = 2 / ppd (two pixels per cycle), gaze at the display center.
    static FoveationConfig for_display(const DisplayGeometry& geom);
};

/// Standard deviation of the foveation filter, (omega(e)/omega_s - 1) / (2 sigma_c),
/// clamped at 0. The ratio of MARs is dimensionless; the result is applied in display
/// pixels (see foveate_image).
double blur_sigma(const MarModel& model, const FoveationConfig& cfg, Eccentricity e);

/// Per-pixel filter sigma (display pixels), eccentricity measured from the gaze pixel.
Image<double> blur_sigma_map(const DisplayGeometry& geom, const MarModel& model, const FoveationConfig& cfg);

/// Spatially varying Gaussian blur with per-pixel sigma (display pixels) taken from
/// `sigma`, clamp-to-edge boundaries. Pixels with sigma == 0 are copied unchanged.
/// Small sigmas are filtered directly; larger ones interpolate in a Gaussian scale
/// stack (quarter-octave levels, decimated where the blur allows).
LuminanceImage varying_gaussian_blur(const LuminanceImage& img, const Image<double>& sigma);

/// Simulated peripheral resolution loss around cfg.gaze. The image must match the
/// geometry's raster.
LuminanceImage foveate_image(const LuminanceImage& img, const DisplayGeometry& geom, const MarModel& model,
                             const FoveationConfig& cfg);

/// Neutral central bar of the split-screen comparison.
struct SplitBar {
    double width_deg = 6.0;
    double falloff_sigma_deg = 0.5;
};

/// Weight of the neutral bar at a horizontal visual angle from the center
/// (1 inside the bar, Gaussian fall-off beyond its edges, 0 beyond five sigmas).
double split_bar_weight(double horizontal_deg, const SplitBar& bar = {});

/// Left half from `left`, right half from `right`, neutral background bar in between.
LuminanceImage compose_split_screen(const LuminanceImage& left, const LuminanceImage& right,
                                    const DisplayGeometry& geom, const SplitBar& bar = {});

} // namespace attncsf
