#pragma once

#include "attncsf/csf_attention.hpp"
#include "attncsf/kv_format.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace attncsf {

/// One measured contrast threshold.
struct ThresholdSample {
    double eccentricity_deg = 0.0;
    AttentionTag attention = AttentionTag::low;
    double contrast = 0.0;
    std::string subject_id;
    int repetition = 0;
};

template <typename Model>
struct FitReport {
    Model parameters{};
    double r_squared = 0.0;
    double adjusted_r_squared = 0.0;
    int free_parameters = 0;
    int fitted_points = 0;
    double residual_sum_of_squares = 0.0;
    /// Observed minus predicted contrast, one per input sample, in input order.
    std::vector<double> residuals;
};

enum class FitWeighting {
    cell_means, ///< average samples per (eccentricity, attention) cell, then fit the means
    per_sample  ///< ordinary least squares over every sample
};

/// Least squares fit of t_a(e) = p0 sqrt(e) + p1 on the samples of one attention level.
/// Throws FitError with fewer than two distinct eccentricities.
FitReport<ThresholdModel> fit_per_condition(const std::vector<ThresholdSample>& samples, AttentionTag attention,
                                            FitWeighting weighting = FitWeighting::cell_means);

struct UnifiedFitOptions {
    double gamma_min = 0.0;   ///< open lower end of the gamma_i bracket
    double gamma_max = 3.0;
    int grid_points = 300;    ///< coarse profile grid over the bracket
    double tolerance = 1e-4;  ///< golden-section tolerance on gamma_i
    FitWeighting weighting = FitWeighting::cell_means;
};

/// Fits the continuous-attention model with gamma_s fixed at 0.5. For a given gamma_i the
/// model is linear in (s0, s1, i0, i1); gamma_i is profiled by a grid scan followed by
/// golden-section refinement. Throws FitError if fewer than two attention levels or
/// eccentricities are present, or the inner system is singular.
FitReport<UnifiedModel> fit_unified(const std::vector<ThresholdSample>& samples, const UnifiedFitOptions& options = {});

/// Residual sum of squares of the unified model's inner linear fit at a fixed gamma_i.
double unified_profile_rss(const std::vector<ThresholdSample>& samples, double gamma_i,
                           FitWeighting weighting = FitWeighting::cell_means);

/// Adjusted R^2 = 1 - (1 - R^2) (n - 1) / (n - k - 1) for k fitted parameters.
double adjusted_r_squared(double r_squared, int n, int k);

// Outliers and baseline ----------------------------------------------------------

struct OutlierPartition {
    std::vector<std::size_t> kept;
    std::vector<std::size_t> removed;
    double q1 = 0.0;
    double q3 = 0.0;
};

/// Quartiles by linear interpolation between order statistics. Values strictly below
/// Q1 - k IQR or strictly above Q3 + k IQR are removed; with IQR = 0 this removes every
/// value that differs from the (equal) quartiles. Needs at least 4 values.
OutlierPartition detect_outliers_iqr(const std::vector<double>& values, double k = 4.0);

/// Linear-interpolation quantile (p in [0,1]) of unsorted values.
double quantile(std::vector<double> values, double p);

/// Rescales every subject so that its low-attention threshold (mean over its low samples)
/// equals `baseline_prediction`; within-subject ratios are kept. Throws DomainError if a
/// subject has no low-attention sample or the prediction is not positive.
std::vector<ThresholdSample> baseline_adjust(const std::vector<ThresholdSample>& samples, double baseline_prediction);

// I/O ---------------------------------------------------------------------------

/// CSV with header `subject,eccentricity_deg,attention,contrast,repetition`.
std::vector<ThresholdSample> read_threshold_csv(std::istream& in);
std::vector<ThresholdSample> read_threshold_csv(const std::string& path);
void write_threshold_csv(std::ostream& out, const std::vector<ThresholdSample>& samples);

KeyValues to_key_values(const FitReport<ThresholdModel>& report);
KeyValues to_key_values(const FitReport<UnifiedModel>& report);

/// The nine published cell means as samples.
std::vector<ThresholdSample> reference_threshold_samples();

} // namespace attncsf
