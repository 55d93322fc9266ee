#pragma once

#include "attncsf/csf_attention.hpp"
#include "attncsf/display.hpp"
#include "attncsf/foveation.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace attncsf {

/// 10 means no visible difference from the reference; lower is worse.
struct QualityScore {
    double jod = 10.0;
};

/// Score drop per unit of pooled, threshold-normalized error. A threshold-level error
/// spread uniformly over 1 deg^2 of a single band costs this many JOD.
inline constexpr double kJodPerPooledError = 0.25;

struct PredictorConfig {
    int band_count = 5;
    /// Attention condition whose gain divides the baseline sensitivity; nullopt scores
    /// with the baseline sensitivity alone.
    std::optional<AttentionTag> attention = AttentionTag::low;
    std::shared_ptr<const BaselineCsf> baseline_csf;
    ThresholdModelSet threshold_models;
    double pooling_exponent = 4.0;
    /// Gaze pixel; the display center when unset.
    std::optional<Vector2> gaze;

    /// Study defaults: cortically scaled surrogate CSF and the published threshold models.
    static PredictorConfig study_default(std::optional<AttentionTag> attention = AttentionTag::low);
};

/// Center frequency (cpd) of Laplacian band k on a display with the given density.
double band_frequency(int band, double pixels_per_degree);

/// Simplified spatial visual-difference predictor: Laplacian pyramid, band contrast
/// relative to the local mean, error weighted by the attention-aware sensitivity of
/// the band at each pixel's eccentricity, Minkowski pooling over bands and area.
/// The reference decomposition and sensitivity maps are computed once.
class QualityPredictor {
public:
    QualityPredictor(const LuminanceImage& reference, const DisplayGeometry& geom, PredictorConfig cfg);

    QualityScore score(const LuminanceImage& test) const;
    /// Pooled threshold-normalized error behind score().
    double pooled_error(const LuminanceImage& test) const;

    const PredictorConfig& config() const { return cfg_; }

private:
    struct Band {
        Image<double> laplacian;
        Image<double> local_mean;
        Image<double> sensitivity;
        double area_weight = 0.0; ///< deg^2 per band sample
    };

    std::vector<Band> decompose(const LuminanceImage& img) const;

    PredictorConfig cfg_;
    DisplayGeometry geom_;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    std::vector<Band> reference_;
};

QualityScore predict_quality(const LuminanceImage& reference, const LuminanceImage& test, const DisplayGeometry& geom,
                             const PredictorConfig& cfg);

// Slope search ------------------------------------------------------------------

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SlopeTracePoint {
    double slope;
    double jod;
};

struct SlopeSearchResult {
    double slope = 0.0;
    std::vector<SlopeTracePoint> trace;
};

/// Largest m in [lo, hi] with quality(m) >= q_thr, assuming quality is non-increasing.
/// Bisection to `tolerance` on m. Throws InfeasibleError if quality(lo) < q_thr and
/// DomainError if the bracket is empty or not finite.
SlopeSearchResult bisect_largest_feasible(const std::function<double(double)>& quality, double q_thr, double lo,
                                          double hi, double tolerance = 1e-4);

struct SlopeSearchOptions {
    double slope_min = 0.0;
    double slope_max = 0.5;
    double tolerance = 1e-4;
    double omega0 = 1.0 / 48.0;
    /// omega_s and sigma_c of the foveation filter; gaze is taken from the predictor config.
    FoveationConfig foveation;
};

/// Score of the reference foveated with MAR slope m, judged against the reference.
double foveated_quality(const QualityPredictor& predictor, const LuminanceImage& reference,
                        const DisplayGeometry& geom, double slope, const SlopeSearchOptions& options);

/// Most aggressive foveation whose predicted quality stays at or above q_thr.
SlopeSearchResult optimize_mar_slope(const LuminanceImage& reference, const DisplayGeometry& geom,
                                     const PredictorConfig& cfg, QualityScore q_thr,
                                     const SlopeSearchOptions& options);

/// Foveation options matching a display: omega_s = 2/ppd.
SlopeSearchOptions slope_search_options_for(const DisplayGeometry& geom);

} // namespace attncsf
