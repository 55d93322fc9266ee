#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace attncsf {

/// Row-major raster: rows are image lines (y), columns are pixels (x).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Linear luminance in cd/m^2 per pixel.
using LuminanceImage = Image<double>;

using Vector2 = Eigen::Vector2d;

// Errors ---------------------------------------------------------------------

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

// Attention -------------------------------------------------------------------

/// Foveal attention load imposed by the concurrent central task.
enum class AttentionTag { low, medium, high };

inline constexpr std::array<AttentionTag, 3> kAttentionTags = {
    AttentionTag::low, AttentionTag::medium, AttentionTag::high};

inline constexpr std::string_view to_string(AttentionTag tag) {
    switch (tag) {
    case AttentionTag::low: return "low";
    case AttentionTag::medium: return "medium";
    case AttentionTag::high: return "high";
    }
    return "low";
}

inline std::optional<AttentionTag> parse_attention_tag(std::string_view s) {
    if (s == "low") return AttentionTag::low;
    if (s == "medium") return AttentionTag::medium;
    if (s == "high") return AttentionTag::high;
    return std::nullopt;
}

inline constexpr std::size_t index_of(AttentionTag tag) { return static_cast<std::size_t>(tag); }

/// Attention condition with its continuous coordinate a_c in [0,1].
/// Tags map to exactly {low: 0, medium: 0.5, high: 1}.
class AttentionLevel {
public:
    constexpr AttentionLevel(AttentionTag tag) : tag_(tag), continuous_(continuous_of(tag)) {}

    static AttentionLevel continuous(double a_c) {
        if (!(a_c >= 0.0 && a_c <= 1.0))
            throw DomainError("attention coordinate must lie in [0,1], got " + std::to_string(a_c));
        return AttentionLevel(a_c);
    }

    constexpr double as_continuous() const { return continuous_; }
    constexpr std::optional<AttentionTag> tag() const { return tag_; }

    static constexpr double continuous_of(AttentionTag tag) {
        switch (tag) {
        case AttentionTag::low: return 0.0;
        case AttentionTag::medium: return 0.5;
        case AttentionTag::high: return 1.0;
        }
        return 0.0;
    }

private:
    explicit AttentionLevel(double a_c) : continuous_(a_c) {
        for (AttentionTag t : kAttentionTags)
            if (continuous_of(t) == a_c) tag_ = t;
    }

    std::optional<AttentionTag> tag_;
    double continuous_ = 0.0;
};

/// Eccentricity in degrees of visual angle; never negative.
class Eccentricity {
public:
    explicit Eccentricity(double degrees) : degrees_(degrees) {
        if (!(degrees >= 0.0))
            throw DomainError("eccentricity must be >= 0 deg, got " + std::to_string(degrees));
    }
    double degrees() const { return degrees_; }

private:
    double degrees_;
};

/// Lower and upper bound of the eccentricities the threshold models were measured at.
inline constexpr double kMeasuredEccentricityMin = 7.0;
inline constexpr double kMeasuredEccentricityMax = 21.0;

inline bool outside_measured_range(double e) {
    return e < kMeasuredEccentricityMin || e > kMeasuredEccentricityMax;
}

/// A model output together with whether it was extrapolated beyond the measured range.
struct ModelValue {
    double value = 0.0;
    bool extrapolated = false;
};

} // namespace attncsf
