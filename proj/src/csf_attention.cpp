#include "attncsf/csf_attention.hpp"

#include "attncsf/reference_data.hpp"

#include <algorithm>
#include <cmath>

namespace attncsf {

ModelValue threshold_per_condition(const ThresholdModel& model, Eccentricity e) {
    return {model(e.degrees()), outside_measured_range(e.degrees())};
}

ModelValue attention_gain(const ThresholdModelSet& models, AttentionTag attention, Eccentricity e) {
    const bool extrapolated = outside_measured_range(e.degrees());
    const double t_low = models[AttentionTag::low](e.degrees());
    if (!(t_low > 0.0))
        throw DomainError("low-attention threshold is not positive at e = " + std::to_string(e.degrees()));
    if (attention == AttentionTag::low) return {1.0, extrapolated};
    return {models[attention](e.degrees()) / t_low, extrapolated};
}

double attention_gain_over_field(const ThresholdModelSet& models, AttentionTag attention, double e) {
    if (attention == AttentionTag::low) return 1.0;
    if (e >= kMeasuredEccentricityMin) {
        const double clamped = std::min(e, kMeasuredEccentricityMax);
        return attention_gain(models, attention, Eccentricity(clamped)).value;
    }
    const double g7 = attention_gain(models, attention, Eccentricity(kMeasuredEccentricityMin)).value;
    const double w = std::max(e, 0.0) / kMeasuredEccentricityMin;
    return 1.0 + (g7 - 1.0) * w;
}

double cortical_magnification(const CorticalMagnification& cm, Eccentricity e) { return cm(e.degrees()); }

double CorticallyScaledCsf::shape(double frequency_cpd, double eccentricity_deg) const {
    const auto& p = params_;
    const double f_eq = frequency_cpd * p.magnification(0.0) / p.magnification(eccentricity_deg);
    if (f_eq <= p.peak_frequency_cpd) return 1.0;
    const double octave = std::log10(f_eq / p.peak_frequency_cpd) / p.bandwidth_decades;
    return std::pow(10.0, -octave * octave);
}

double CorticallyScaledCsf::sensitivity(const CsfQuery& query) const {
    if (!(query.frequency_cpd > 0.0)) throw DomainError("spatial frequency must be > 0");
    if (!(query.eccentricity_deg >= 0.0)) throw DomainError("eccentricity must be >= 0");
    return params_.peak_sensitivity * shape(query.frequency_cpd, query.eccentricity_deg);
}

CorticallyScaledCsf CorticallyScaledCsf::calibrated(double threshold, const CsfQuery& stimulus, Params shape) {
    if (!(threshold > 0.0)) throw DomainError("calibration threshold must be > 0");
    shape.peak_sensitivity = 1.0;
    CorticallyScaledCsf unit(shape);
    shape.peak_sensitivity = 1.0 / (threshold * unit.sensitivity(stimulus));
    return CorticallyScaledCsf(shape);
}

CorticallyScaledCsf CorticallyScaledCsf::study_default() {
    double sum = 0.0;
    int n = 0;
    for (const auto& cell : reference::threshold_means())
        if (cell.attention == AttentionTag::low) {
            sum += cell.threshold;
            ++n;
        }
    const auto& ref = reference::study_stimuli()[2];
    return calibrated(sum / n, CsfQuery{ref.frequency_cpd, ref.eccentricity_deg, ref.adaptation_luminance, 1.0});
}

ModelValue scale_sensitivity(const BaselineCsf& baseline, const ThresholdModelSet& models,
                             AttentionTag attention, const CsfQuery& query) {
    const double s = baseline.sensitivity(query);
    const ModelValue g = attention_gain(models, attention, Eccentricity(query.eccentricity_deg));
    return {s / g.value, g.extrapolated};
}

ModelValue unified_threshold(const UnifiedModel& model, Eccentricity e, double a_c) {
    if (!(a_c >= 0.0 && a_c <= 1.0))
        throw DomainError("attention coordinate must lie in [0,1], got " + std::to_string(a_c));
    return {model(e.degrees(), a_c), outside_measured_range(e.degrees())};
}

StimulusScale scale_stimulus(const StimulusScale& reference, Eccentricity e, const CorticalMagnification& cm) {
    const double ratio = cm(e.degrees()) / cm(Eccentricity(reference.eccentricity_deg).degrees());
    return {e.degrees(), reference.frequency_cpd * ratio, reference.diameter_deg / ratio};
}

KeyValues to_key_values(const ThresholdModelSet& models) {
    KeyValues kv;
    for (AttentionTag tag : kAttentionTags) {
        const std::string prefix(to_string(tag));
        kv.set(prefix + ".p0", models[tag].p0);
        kv.set(prefix + ".p1", models[tag].p1);
    }
    return kv;
}

ThresholdModelSet threshold_models_from(const KeyValues& kv) {
    ThresholdModelSet out;
    for (AttentionTag tag : kAttentionTags) {
        const std::string prefix(to_string(tag));
        out[tag] = ThresholdModel{kv.get_double(prefix + ".p0"), kv.get_double(prefix + ".p1"), tag};
    }
    return out;
}

KeyValues to_key_values(const UnifiedModel& model) {
    KeyValues kv;
    kv.set("s0", model.s0);
    kv.set("s1", model.s1);
    kv.set("i0", model.i0);
    kv.set("i1", model.i1);
    kv.set("gamma_s", model.gamma_s);
    kv.set("gamma_i", model.gamma_i);
    return kv;
}

UnifiedModel unified_model_from(const KeyValues& kv) {
    UnifiedModel m;
    m.s0 = kv.get_double("s0");
    m.s1 = kv.get_double("s1");
    m.i0 = kv.get_double("i0");
    m.i1 = kv.get_double("i1");
    m.gamma_s = kv.get_double("gamma_s", UnifiedModel::kSlopeExponent);
    m.gamma_i = kv.get_double("gamma_i");
    if (m.gamma_s != UnifiedModel::kSlopeExponent) throw ParseError("gamma_s is fixed at 0.5");
    return m;
}

} // namespace attncsf
