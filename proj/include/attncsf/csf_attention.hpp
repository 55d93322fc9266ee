#pragma once

#include "attncsf/kv_format.hpp"
#include "attncsf/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <utility>

namespace attncsf {

// Per-condition threshold model -----------------------------------------------

/// Contrast threshold model for one attention condition: t_a(e) = p0 * sqrt(e) + p1.
struct ThresholdModel {
    double p0 = 0.0; ///< contrast per sqrt(degree)
    double p1 = 0.0; ///< contrast
    AttentionTag attention = AttentionTag::low;

    template <typename Scalar>
    Scalar operator()(const Scalar& e) const {
        using std::sqrt;
        return Scalar(p0) * sqrt(e) + Scalar(p1);
    }
};

/// Evaluates the model over an array of eccentricities.
template <typename Derived>
auto threshold_curve(const ThresholdModel& model, const Eigen::ArrayBase<Derived>& e) {
    return model.p0 * e.sqrt() + model.p1;
}

/// Michelson contrast threshold at eccentricity e. Flags evaluation outside [7, 21] deg.
ModelValue threshold_per_condition(const ThresholdModel& model, Eccentricity e);

/// One model per attention condition.
struct ThresholdModelSet {
    std::array<ThresholdModel, 3> models{};

    const ThresholdModel& operator[](AttentionTag tag) const { return models[index_of(tag)]; }
    ThresholdModel& operator[](AttentionTag tag) { return models[index_of(tag)]; }
};

/// Threshold elevation relative to the low-attention condition, g_a(e) = t_a(e) / t_low(e).
/// Exactly 1 for a = low. Throws DomainError when t_low(e) <= 0.
ModelValue attention_gain(const ThresholdModelSet& models, AttentionTag attention, Eccentricity e);

/// Gain used when a model must be evaluated over a whole visual field:
/// eccentricities beyond 21 deg are clamped to 21 deg, and below 7 deg the gain
/// tapers linearly from g_a(7) down to 1 at the fovea.
double attention_gain_over_field(const ThresholdModelSet& models, AttentionTag attention, double e);

// Baseline CSF ------------------------------------------------------------------

struct CsfQuery {
    double frequency_cpd = 2.0;
    double eccentricity_deg = 0.0;
    double luminance_cdm2 = 28.0;
    double area_deg2 = 1.0;
};

/// Any contrast sensitivity model (frequency, eccentricity, luminance, area -> sensitivity).
class BaselineCsf {
public:
    virtual ~BaselineCsf() = default;
    virtual double sensitivity(const CsfQuery& query) const = 0;
    /// Spatial frequencies (cpd) the provider is defined for.
    virtual std::pair<double, double> frequency_domain() const { return {0.0, 1e9}; }
};

/// Frequency- and eccentricity-independent sensitivity. Mostly useful for tests.
class ConstantCsf final : public BaselineCsf {
public:
    explicit ConstantCsf(double sensitivity) : sensitivity_(sensitivity) {}
    double sensitivity(const CsfQuery&) const override { return sensitivity_; }

private:
    double sensitivity_;
};

/// Cortical magnification M(e) = a0 / (e + e2), in mm of cortex per degree.
struct CorticalMagnification {
    double a0 = 29.2;
    double e2 = 3.67;

    template <typename Scalar>
    Scalar operator()(const Scalar& e) const {
        return Scalar(a0) / (e + Scalar(e2));
    }
};

double cortical_magnification(const CorticalMagnification& cm, Eccentricity e);

struct CorticallyScaledCsfParams {
    CorticalMagnification magnification{};
    double peak_sensitivity = 100.0;
    double peak_frequency_cpd = 4.0;    ///< in foveal-equivalent cpd
    double bandwidth_decades = 0.75;
    double min_frequency_cpd = 0.05;
    double max_frequency_cpd = 60.0;
};

/// Sensitivity depends only on the cortically magnified ("foveal equivalent")
/// frequency f * M(0) / M(e): flat up to the peak frequency, log-parabolic fall-off above.
/// Luminance and area are accepted but do not change the prediction.
class CorticallyScaledCsf final : public BaselineCsf {
public:
    using Params = CorticallyScaledCsfParams;

    CorticallyScaledCsf() : CorticallyScaledCsf(Params{}) {}
    explicit CorticallyScaledCsf(Params params) : params_(params) {}

    /// Surrogate whose peak sensitivity is set so that the given stimulus is at `threshold`.
    static CorticallyScaledCsf calibrated(double threshold, const CsfQuery& stimulus, Params shape = {});
    /// Calibrated to the mean low-attention threshold of the cortically scaled study stimuli.
    static CorticallyScaledCsf study_default();

    double sensitivity(const CsfQuery& query) const override;
    std::pair<double, double> frequency_domain() const override {
        return {params_.min_frequency_cpd, params_.max_frequency_cpd};
    }
    const Params& params() const { return params_; }

private:
    double shape(double frequency_cpd, double eccentricity_deg) const;
    Params params_;
};

/// Attention-aware sensitivity S_a = S / g_a(e). Baseline errors propagate unchanged.
ModelValue scale_sensitivity(const BaselineCsf& baseline, const ThresholdModelSet& models,
                             AttentionTag attention, const CsfQuery& query);

// Unified model -----------------------------------------------------------------

/// Linear sweep between two per-attention values, alpha at w=0 and beta at w=1.
template <typename Scalar>
constexpr Scalar attention_sweep(const Scalar& alpha, const Scalar& beta, const Scalar& w) {
    return alpha * (Scalar(1) - w) + beta * w;
}

/// Continuous-attention threshold model
///   t(e, a_c) = sweep(s0, s1, a_c^gamma_s) * (sqrt(e) - sqrt(7)) + sweep(i0, i1, a_c^gamma_i)
struct UnifiedModel {
    static constexpr double kSlopeExponent = 0.5;
    static constexpr double kReferenceEccentricity = 7.0;

    double s0 = 0.0;
    double s1 = 0.0;
    double i0 = 0.0;
    double i1 = 0.0;
    double gamma_s = kSlopeExponent;
    double gamma_i = 1.0;

    template <typename Scalar>
    Scalar operator()(const Scalar& e, const Scalar& a_c) const {
        using std::pow;
        using std::sqrt;
        const Scalar slope = attention_sweep(Scalar(s0), Scalar(s1), Scalar(pow(a_c, Scalar(gamma_s))));
        const Scalar intercept = attention_sweep(Scalar(i0), Scalar(i1), Scalar(pow(a_c, Scalar(gamma_i))));
        return slope * (sqrt(e) - Scalar(std::sqrt(kReferenceEccentricity))) + intercept;
    }
};

/// Throws DomainError if a_c is outside [0,1].
ModelValue unified_threshold(const UnifiedModel& model, Eccentricity e, double a_c);

// Cortical stimulus scaling -----------------------------------------------------

struct StimulusScale {
    double eccentricity_deg = 21.0;
    double frequency_cpd = 2.0;
    double diameter_deg = 5.0;
};

/// Rescales frequency by M(e)/M(e_ref) and diameter by M(e_ref)/M(e).
StimulusScale scale_stimulus(const StimulusScale& reference, Eccentricity e,
                             const CorticalMagnification& cm = {});

// Text records ------------------------------------------------------------------

KeyValues to_key_values(const ThresholdModelSet& models);
ThresholdModelSet threshold_models_from(const KeyValues& kv);
KeyValues to_key_values(const UnifiedModel& model);
UnifiedModel unified_model_from(const KeyValues& kv);

} // namespace attncsf
