#include "attncsf/stimulus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace attncsf {

namespace {

constexpr double kPi = std::numbers::pi;

struct PixelBox {
    int x0, y0, x1, y1; // inclusive
};

/// Pixel bounding box of the disc of radius `radius_deg` around `center_deg`.
PixelBox disc_bounds(const DisplayGeometry& geom, const Vector2& center_deg, double radius_deg) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    constexpr int kSamples = 64;
    for (int i = 0; i < kSamples; ++i) {
        const double a = 2.0 * kPi * i / kSamples;
        Vector2 p = center_deg + radius_deg * Vector2(std::cos(a), std::sin(a));
        const double e = p.norm();
        if (e >= 89.0) p *= 89.0 / e;
        const Vector2 px = pixel_at(geom, p);
        xmin = std::min(xmin, px.x());
        xmax = std::max(xmax, px.x());
        ymin = std::min(ymin, px.y());
        ymax = std::max(ymax, px.y());
    }
    // The disc may contain the display center, which the rim samples do not see.
    if (center_deg.norm() <= radius_deg) {
        xmin = std::min(xmin, geom.center_pixel.x());
        xmax = std::max(xmax, geom.center_pixel.x());
        ymin = std::min(ymin, geom.center_pixel.y());
        ymax = std::max(ymax, geom.center_pixel.y());
    }
    return {std::max(0, static_cast<int>(std::floor(xmin)) - 2),
            std::max(0, static_cast<int>(std::floor(ymin)) - 2),
            std::min(geom.width - 1, static_cast<int>(std::ceil(xmax)) + 2),
            std::min(geom.height - 1, static_cast<int>(std::ceil(ymax)) + 2)};
}

Vector2 patch_center(const GaborSpec& spec) {
    const double a = spec.polar_angle_deg * kPi / 180.0;
    return spec.eccentricity_deg * Vector2(std::cos(a), std::sin(a));
}

void validate_patch(const GaborSpec& spec, const DisplayGeometry& geom) {
    if (!(spec.sigma_deg > 0.0)) throw DomainError("Gabor sigma must be > 0");
    if (!(spec.contrast >= 0.0 && spec.contrast <= 1.0)) throw DomainError("Gabor contrast must lie in [0,1]");
    if (!(spec.frequency_cpd >= 0.0)) throw DomainError("Gabor frequency must be >= 0");
    if (!(spec.eccentricity_deg >= 0.0 && spec.eccentricity_deg < 89.0))
        throw DomainError("Gabor eccentricity must lie in [0, 89) deg");
    const Vector2 c = pixel_at(geom, patch_center(spec));
    if (c.x() < 0.0 || c.y() < 0.0 || c.x() > geom.width - 1 || c.y() > geom.height - 1)
        throw DomainError("Gabor center falls outside the display");
}

/// Adds contrast * g(x) to `modulation` over the patch support.
void accumulate_gabor(Image<double>& modulation, const GaborSpec& spec, const DisplayGeometry& geom) {
    const Vector2 center = patch_center(spec);
    const double support = 6.0 * spec.sigma_deg;
    const PixelBox box = disc_bounds(geom, center, support);
    const double theta = spec.orientation_deg * kPi / 180.0;
    const Vector2 carrier(std::cos(theta), std::sin(theta));
    const double inv2s2 = 1.0 / (2.0 * spec.sigma_deg * spec.sigma_deg);
    for (int y = box.y0; y <= box.y1; ++y)
        for (int x = box.x0; x <= box.x1; ++x) {
            const Vector2 d = visual_position(geom, Vector2(x, y)) - center;
            const double r2 = d.squaredNorm();
            if (r2 > support * support) continue;
            modulation(y, x) += spec.contrast * std::exp(-r2 * inv2s2) *
                                std::cos(2.0 * kPi * spec.frequency_cpd * d.dot(carrier) + spec.phase_rad);
        }
}

LuminanceImage modulate(const Image<double>& modulation, double mean, double peak, const DisplayGeometry& geom) {
    if (mean * (1.0 + peak) > geom.luminance_max || mean * (1.0 - peak) < geom.luminance_min)
        throw RangeError("Gabor modulation exceeds the display luminance range");
    return mean * (1.0 + modulation);
}

} // namespace

GaborSpec GaborSpec::from_study(const reference::StudyStimulus& stimulus, double contrast, double orientation_deg,
                                Side side, double mean_luminance) {
    GaborSpec s;
    s.eccentricity_deg = stimulus.eccentricity_deg;
    s.polar_angle_deg = side == Side::left ? 180.0 : 0.0;
    s.orientation_deg = orientation_deg;
    s.sigma_deg = 0.2 * stimulus.diameter_deg;
    s.frequency_cpd = stimulus.frequency_cpd;
    s.contrast = contrast;
    s.mean_luminance = mean_luminance;
    return s;
}

LuminanceImage gabor_image(const GaborSpec& spec, const DisplayGeometry& geom) {
    geom.validate();
    validate_patch(spec, geom);
    Image<double> modulation = Image<double>::Zero(geom.height, geom.width);
    if (spec.contrast > 0.0) accumulate_gabor(modulation, spec, geom);
    return modulate(modulation, spec.mean_luminance, spec.contrast, geom);
}

LuminanceImage gabor_pair_image(const GaborSpec& first, const GaborSpec& second, const DisplayGeometry& geom) {
    geom.validate();
    validate_patch(first, geom);
    validate_patch(second, geom);
    if (first.mean_luminance != second.mean_luminance)
        throw DomainError("paired Gabor patches must share the mean luminance");
    Image<double> modulation = Image<double>::Zero(geom.height, geom.width);
    if (first.contrast > 0.0) accumulate_gabor(modulation, first, geom);
    if (second.contrast > 0.0) accumulate_gabor(modulation, second, geom);
    const double peak = modulation.size() ? modulation.abs().maxCoeff() : 0.0;
    return modulate(modulation, first.mean_luminance, peak, geom);
}

// RSVP ------------------------------------------------------------------------

std::string_view to_string(LetterColor c) { return c == LetterColor::red ? "red" : "green"; }

std::optional<LetterColor> parse_letter_color(std::string_view s) {
    if (s == "red") return LetterColor::red;
    if (s == "green") return LetterColor::green;
    return std::nullopt;
}

RsvpSpec RsvpSpec::for_attention(AttentionTag tag) {
    RsvpSpec s;
    switch (tag) {
    case AttentionTag::low: s.n_letters = 1; break;
    case AttentionTag::medium: s.n_letters = 4; s.exclude_first_third = true; break;
    case AttentionTag::high: s.n_letters = 6; s.exclude_first_third = true; break;
    }
    return s;
}

std::size_t first_allowed_target_index(const RsvpSpec& spec) {
    if (!spec.exclude_first_third) return 0;
    return static_cast<std::size_t>((spec.n_letters + 2) / 3); // ceil(N/3)
}

RsvpSchedule rsvp_sequence(const RsvpSpec& spec, std::uint64_t seed) {
    if (spec.n_letters < 1) throw DomainError("RSVP needs at least one letter");
    if (!(spec.duration_ms > 0.0)) throw DomainError("RSVP duration must be > 0");
    const std::size_t n = static_cast<std::size_t>(spec.n_letters);
    const std::size_t first = first_allowed_target_index(spec);
    if (first >= n) throw DomainError("target placement rule cannot be met with N = " + std::to_string(n));

    std::mt19937_64 rng(seed);
    const auto start = std::uniform_int_distribution<int>(0, 1)(rng) ? LetterColor::green : LetterColor::red;
    const std::size_t target = std::uniform_int_distribution<std::size_t>(first, n - 1)(rng);

    static constexpr std::string_view kDistractors = "ABCDEFGHJKLMNPRSUVXYZ";
    std::uniform_int_distribution<std::size_t> pick(0, kDistractors.size() - 1);

    RsvpSchedule out;
    out.target_index = target;
    out.items.resize(n);
    const double slot = spec.duration_ms / static_cast<double>(n);
    char previous = 0;
    for (std::size_t i = 0; i < n; ++i) {
        RsvpItem& item = out.items[i];
        if (i == target) {
            item.letter = spec.target;
        } else {
            do item.letter = kDistractors[pick(rng)];
            while (item.letter == previous || item.letter == spec.target);
        }
        previous = item.letter;
        item.color = (i % 2 == 0) == (start == LetterColor::red) ? LetterColor::red : LetterColor::green;
        item.onset_ms = slot * static_cast<double>(i);
        item.offset_ms = i + 1 == n ? spec.duration_ms : slot * static_cast<double>(i + 1);
    }
    return out;
}

std::array<double, 3> letter_channels(LetterColor color, const DisplayGeometry& geom, double chroma) {
    const double lb = geom.background_luminance;
    const auto& w = geom.primary_weights;
    if (color == LetterColor::red) return {lb * (1.0 + chroma), lb * (1.0 - chroma * w[0] / w[1]), lb};
    return {lb * (1.0 - chroma * w[1] / w[0]), lb * (1.0 + chroma), lb};
}

const std::array<std::uint8_t, 7>& glyph(char letter) {
    static constexpr std::array<std::array<std::uint8_t, 7>, 26> kFont = {{
        {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
        {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},
        {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
        {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
        {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
        {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
        {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
        {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
        {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
        {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
        {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
    }};
    if (letter < 'A' || letter > 'Z') throw DomainError(std::string("no glyph for '") + letter + "'");
    return kFont[static_cast<std::size_t>(letter - 'A')];
}

RgbImage rsvp_frame(const RsvpItem& item, const RsvpSpec& spec, const DisplayGeometry& geom) {
    geom.validate();
    RgbImage out;
    for (auto& ch : out.channels) ch = LuminanceImage::Constant(geom.height, geom.width, geom.background_luminance);
    const auto rows = glyph(item.letter);
    const auto color = letter_channels(item.color, geom);
    const double box = spec.letter_size_deg * geom.pixels_per_degree();
    const double cell = box / 7.0;
    const double left = geom.center_pixel.x() - 2.5 * cell;
    const double top = geom.center_pixel.y() - 3.5 * cell;
    for (int y = std::max(0, static_cast<int>(top)); y < std::min(geom.height, static_cast<int>(top + box) + 1); ++y)
        for (int x = std::max(0, static_cast<int>(left)); x < std::min(geom.width, static_cast<int>(left + 5 * cell) + 1);
             ++x) {
            const double u = (x + 0.5 - left) / cell;
            const double v = (y + 0.5 - top) / cell;
            if (u < 0.0 || v < 0.0 || u >= 5.0 || v >= 7.0) continue;
            if (rows[static_cast<std::size_t>(v)] & (0x10 >> static_cast<int>(u)))
                for (int c = 0; c < 3; ++c) out.channels[c](y, x) = color[c];
        }
    return out;
}

// Encoding --------------------------------------------------------------------

namespace {

constexpr double kDitherThreshold[2][2] = {{0.125, 0.625}, {0.875, 0.375}};

double checked_fraction(double luminance, const DisplayGeometry& geom) {
    const double range = geom.luminance_max - geom.luminance_min;
    const double eps = 1e-9 * range;
    if (!(luminance >= geom.luminance_min - eps && luminance <= geom.luminance_max + eps))
        throw RangeError("luminance " + std::to_string(luminance) + " cd/m^2 outside the display range");
    return std::clamp((luminance - geom.luminance_min) / range, 0.0, 1.0);
}

std::uint8_t dithered(double code, int x, int y) {
    const double base = std::floor(code);
    const double frac = code - base;
    const int value = static_cast<int>(base) + (frac > kDitherThreshold[y & 1][x & 1] ? 1 : 0);
    return static_cast<std::uint8_t>(std::min(value, 255));
}

} // namespace

double ideal_code(double luminance, const DisplayGeometry& geom) {
    return std::pow(checked_fraction(luminance, geom), 1.0 / geom.gamma) * 255.0;
}

EncodedFrame encode_display(const LuminanceImage& img, const DisplayGeometry& geom) {
    EncodedFrame f;
    f.width = static_cast<int>(img.cols());
    f.height = static_cast<int>(img.rows());
    f.channels = 1;
    f.data.resize(static_cast<std::size_t>(img.size()));
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            f.data[static_cast<std::size_t>(y) * f.width + x] = dithered(ideal_code(img(y, x), geom), x, y);
    return f;
}

EncodedFrame encode_display(const RgbImage& img, const DisplayGeometry& geom) {
    EncodedFrame f;
    f.width = static_cast<int>(img.channels[0].cols());
    f.height = static_cast<int>(img.channels[0].rows());
    f.channels = 3;
    f.data.resize(static_cast<std::size_t>(f.width) * f.height * 3);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < 3; ++c)
                f.data[(static_cast<std::size_t>(y) * f.width + x) * 3 + c] =
                    dithered(ideal_code(img.channels[c](y, x), geom), x, y);
    return f;
}

LuminanceImage decode_display(const EncodedFrame& frame, const DisplayGeometry& geom) {
    const double range = geom.luminance_max - geom.luminance_min;
    auto lum = [&](std::uint8_t code) { return geom.luminance_min + std::pow(code / 255.0, geom.gamma) * range; };
    LuminanceImage out(frame.height, frame.width);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            if (frame.channels == 1) {
                out(y, x) = lum(frame.at(x, y));
            } else {
                double l = 0.0;
                for (int c = 0; c < 3; ++c) l += geom.primary_weights[c] * lum(frame.at(x, y, c));
                out(y, x) = l;
            }
        }
    return out;
}

} // namespace attncsf
