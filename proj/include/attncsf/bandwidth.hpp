#pragma once

#include "attncsf/foveation.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace attncsf {

/// Rectangular field of view on a display of uniform angular density.
struct DisplayProfile {
    double fov_width_deg = 46.0;
    double fov_height_deg = 20.0;
    double ppd = 71.0;
    /// Display MAR; 2 / ppd when unset.
    std::optional<double> omega_s;

    double display_mar() const { return omega_s.value_or(2.0 / ppd); }
    void validate() const;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    int initial_points = 8;         ///< per axis, on one quadrant
    double relative_tolerance = 1e-3;
    int max_refinements = 12;
};

struct GainResult {
    double gain = 1.0;
    int refinements = 0;
    int points_per_axis = 0;
    double relative_change = 0.0; ///< between the last two grids
};

/// Ratio of the field's area to its area weighted by the retained sampling density
/// max(omega(e)/omega_s, 1)^-2, gaze at the field center. Midpoint tensor-grid
/// quadrature on one quadrant, doubled until the gain changes less than the tolerance.
GainResult computational_gain(const DisplayProfile& profile, const MarModel& model, const QuadratureOptions& options = {});

struct SweepRow {
    double fov_deg;
    double ppd;
    std::string condition;
    double slope;
    double gain;
};

struct SweepModel {
    std::string condition;
    MarModel model;
};

/// Gains over square fields of view for every (fov, ppd, model). The fov list must be
/// increasing.
std::vector<SweepRow> gain_sweep(const std::vector<double>& fovs_deg, const std::vector<double>& ppds,
                                 const std::vector<SweepModel>& models, const QuadratureOptions& options = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

} // namespace attncsf
