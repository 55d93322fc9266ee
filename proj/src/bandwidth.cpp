#include "attncsf/bandwidth.hpp"

#include <Eigen/Core>

#include <cmath>
#include <ostream>

namespace attncsf {

void DisplayProfile::validate() const {
    if (!(fov_width_deg > 0.0) || !(fov_height_deg > 0.0)) throw DomainError("field of view must be > 0");
    if (!(ppd > 0.0)) throw DomainError("pixels per degree must be > 0");
    if (!(display_mar() > 0.0)) throw DomainError("display MAR must be > 0");
}

namespace {

/// Mean retained density over the quadrant [0, w] x [0, h] on an n x n midpoint grid.
double mean_density(double w, double h, int n, const MarModel& model, double omega_s) {
    const Eigen::ArrayXd xs = (Eigen::ArrayXd::LinSpaced(n, 0, n - 1) + 0.5) * (w / n);
    const Eigen::ArrayXd x2 = xs.square();
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        const double y = (j + 0.5) * (h / n);
        const Eigen::ArrayXd e = (x2 + y * y).sqrt();
        const Eigen::ArrayXd ratio = ((model.slope * e + model.omega0) / omega_s).max(1.0);
        total += ratio.square().inverse().sum();
    }
    return total / (static_cast<double>(n) * n);
}

} // namespace

GainResult computational_gain(const DisplayProfile& profile, const MarModel& model, const QuadratureOptions& options) {
    profile.validate();
    if (options.initial_points < 1 || options.max_refinements < 1 || !(options.relative_tolerance > 0.0))
        throw DomainError("invalid quadrature options");
    const double w = 0.5 * profile.fov_width_deg, h = 0.5 * profile.fov_height_deg;
    const double omega_s = profile.display_mar();

    GainResult result;
    int n = options.initial_points;
    double previous = 1.0 / mean_density(w, h, n, model, omega_s);
    for (int r = 1; r <= options.max_refinements; ++r) {
        n *= 2;
        const double current = 1.0 / mean_density(w, h, n, model, omega_s);
        const double change = std::abs(current - previous) / current;
        if (change < options.relative_tolerance) {
            result.gain = current;
            result.refinements = r;
            result.points_per_axis = n;
            result.relative_change = change;
            return result;
        }
        previous = current;
    }
    throw ConvergenceError("computational gain did not converge after " + std::to_string(options.max_refinements) +
                           " refinements");
}

std::vector<SweepRow> gain_sweep(const std::vector<double>& fovs_deg, const std::vector<double>& ppds,
                                 const std::vector<SweepModel>& models, const QuadratureOptions& options) {
    for (std::size_t i = 1; i < fovs_deg.size(); ++i)
        if (!(fovs_deg[i] > fovs_deg[i - 1])) throw DomainError("field-of-view sweep must be increasing");
    std::vector<SweepRow> rows;
    for (double ppd : ppds)
        for (const auto& m : models)
            for (double fov : fovs_deg) {
                const DisplayProfile profile{fov, fov, ppd, std::nullopt};
                rows.push_back({fov, ppd, m.condition, m.model.slope, computational_gain(profile, m.model, options).gain});
            }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "fov_deg,ppd,condition,slope,gain\n";
    for (const auto& r : rows)
        out << format_double(r.fov_deg) << ',' << format_double(r.ppd) << ',' << r.condition << ','
            << format_double(r.slope) << ',' << format_double(r.gain) << '\n';
}

} // namespace attncsf
