#pragma once

// Published measurements and fitted parameters used as defaults and test fixtures.

#include "attncsf/csf_attention.hpp"
#include "attncsf/foveation.hpp"

#include <array>
#include <span>
#include <string_view>

namespace attncsf::reference {

/// Gabor conditions of the contrast study (Nos. 1-3) and validation study (Nos. 4-7).
struct StudyStimulus {
    int number;
    double eccentricity_deg;
    double diameter_deg;
    double frequency_cpd;
    double adaptation_luminance;
};

std::span<const StudyStimulus> study_stimuli();
const StudyStimulus& study_stimulus(int number);

/// Mean contrast threshold across subjects for one (stimulus, attention) cell.
struct ThresholdCell {
    int stimulus;
    double eccentricity_deg;
    AttentionTag attention;
    double threshold;
};

/// The nine cells of stimuli 1-3 used to fit the models.
std::span<const ThresholdCell> threshold_means();
/// Validation stimuli 4-7.
std::span<const ThresholdCell> validation_threshold_means();

/// Fitted per-condition models (p0, p1) and their R^2.
ThresholdModelSet threshold_models();
std::array<double, 3> threshold_model_r_squared();

UnifiedModel unified_model();
inline constexpr double kUnifiedAdjustedRSquared = 0.973;

/// Mean MAR slopes measured per image, in attention order low, medium, high.
struct ImageSlopes {
    std::string_view image;
    std::array<double, 3> slope;
};
std::span<const ImageSlopes> image_slopes();

/// Global mean MAR slopes per attention condition.
inline constexpr std::array<double, 3> kMeanSlopes = {0.0198, 0.0420, 0.0596};

inline MarModel mean_mar_model(AttentionTag tag) { return MarModel{kMeanSlopes[index_of(tag)]}; }

} // namespace attncsf::reference
