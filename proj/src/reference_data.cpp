#include "attncsf/reference_data.hpp"

#include <stdexcept>

namespace attncsf::reference {

namespace {

constexpr std::array<StudyStimulus, 7> kStimuli = {{
    {1, 7.0, 2.16, 4.62, 28.0},
    {2, 14.0, 3.58, 2.79, 28.0},
    {3, 21.0, 5.0, 2.0, 28.0},
    {4, 9.25, 1.7, 2.0, 28.0},
    {5, 15.0, 5.0, 4.0, 28.0},
    {6, 15.0, 5.0, 4.0, 58.0},
    {7, 15.0, 5.0, 4.0, 116.0},
}};

using A = AttentionTag;

constexpr std::array<ThresholdCell, 9> kMeans = {{
    {1, 7.0, A::low, 0.0297},
    {2, 14.0, A::low, 0.0317},
    {3, 21.0, A::low, 0.0314},
    {1, 7.0, A::medium, 0.0561},
    {2, 14.0, A::medium, 0.0864},
    {3, 21.0, A::medium, 0.1091},
    {1, 7.0, A::high, 0.0851},
    {2, 14.0, A::high, 0.1242},
    {3, 21.0, A::high, 0.1368},
}};

constexpr std::array<ThresholdCell, 12> kValidation = {{
    {4, 9.25, A::low, 0.0325},   {4, 9.25, A::medium, 0.0607}, {4, 9.25, A::high, 0.0905},
    {5, 15.0, A::low, 0.0452},   {5, 15.0, A::medium, 0.1304}, {5, 15.0, A::high, 0.1806},
    {6, 15.0, A::low, 0.0573},   {6, 15.0, A::medium, 0.1415}, {6, 15.0, A::high, 0.1926},
    {7, 15.0, A::low, 0.0508},   {7, 15.0, A::medium, 0.1059}, {7, 15.0, A::high, 0.1832},
}};

constexpr std::array<ImageSlopes, 4> kSlopes = {{
    {"tulips", {0.0222, 0.0499, 0.0651}},
    {"city", {0.0153, 0.0449, 0.0623}},
    {"mountain", {0.0221, 0.0369, 0.0581}},
    {"forest", {0.0197, 0.0361, 0.0531}},
}};

} // namespace

std::span<const StudyStimulus> study_stimuli() { return kStimuli; }

const StudyStimulus& study_stimulus(int number) {
    for (const auto& s : kStimuli)
        if (s.number == number) return s;
    throw std::out_of_range("unknown stimulus number " + std::to_string(number));
}

std::span<const ThresholdCell> threshold_means() { return kMeans; }
std::span<const ThresholdCell> validation_threshold_means() { return kValidation; }

ThresholdModelSet threshold_models() {
    ThresholdModelSet set;
    set[A::low] = {9.672e-4, 2.741e-2, A::low};
    set[A::medium] = {2.737e-2, -1.620e-2, A::medium};
    set[A::high] = {2.714e-2, 1.612e-2, A::high};
    return set;
}

std::array<double, 3> threshold_model_r_squared() { return {0.705, 1.000, 0.956}; }

UnifiedModel unified_model() {
    UnifiedModel m;
    m.s0 = 0.00243;
    m.s1 = 0.0307;
    m.i0 = 0.0285;
    m.i1 = 0.0844;
    m.gamma_i = 0.771;
    return m;
}

std::span<const ImageSlopes> image_slopes() { return kSlopes; }

} // namespace attncsf::reference
