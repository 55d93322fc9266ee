#pragma once

#include "attncsf/display.hpp"
#include "attncsf/reference_data.hpp"
#include "attncsf/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace attncsf {

// Gabor patches -----------------------------------------------------------------

enum class Side { left, right };

/// Gaussian-windowed cosine grating placed in visual-angle space.
struct GaborSpec {
    double eccentricity_deg = 0.0;
    double polar_angle_deg = 0.0; ///< direction of the patch center; 0 = right, 180 = left
    double orientation_deg = 0.0; ///< carrier direction; 0 = vertical bars
    double sigma_deg = 1.0;
    double frequency_cpd = 2.0;
    double contrast = 0.1;        ///< Michelson contrast at the patch center
    double mean_luminance = 28.0;
    double phase_rad = 0.0;       ///< carrier phase at the patch center; 0 = cosine phase

    /// Study stimulus: sigma is 20% of the diameter, placed left or right of fixation.
    static GaborSpec from_study(const reference::StudyStimulus& stimulus, double contrast,
                                double orientation_deg, Side side, double mean_luminance = 28.0);
};

/// Patch over a uniform background at the patch's mean luminance.
/// Throws RangeError if the modulated luminance leaves the display range and
/// DomainError if the patch center falls outside the raster.
LuminanceImage gabor_image(const GaborSpec& spec, const DisplayGeometry& geom);

/// Two patches sharing a mean luminance, as shown in a contrast-discrimination trial.
LuminanceImage gabor_pair_image(const GaborSpec& first, const GaborSpec& second, const DisplayGeometry& geom);

// RSVP --------------------------------------------------------------------------

enum class LetterColor { red, green };

std::string_view to_string(LetterColor c);
std::optional<LetterColor> parse_letter_color(std::string_view s);

/// Rapid serial letter stream loading foveal attention.
struct RsvpSpec {
    int n_letters = 1;
    double duration_ms = 500.0;
    double letter_size_deg = 1.0;
    char target = 'T';
    /// Keep the target out of the first third of the stream.
    bool exclude_first_third = false;

    /// N = 1, 4, 6 for low, medium, high attention; the first-third rule applies to medium/high.
    static RsvpSpec for_attention(AttentionTag tag);
};

struct RsvpItem {
    char letter = 'T';
    LetterColor color = LetterColor::red;
    double onset_ms = 0.0;
    double offset_ms = 0.0;
};

struct RsvpSchedule {
    std::vector<RsvpItem> items;
    std::size_t target_index = 0;

    LetterColor target_color() const { return items.at(target_index).color; }
};

/// Smallest index the target may take under the placement rule of this stream.
std::size_t first_allowed_target_index(const RsvpSpec& spec);

/// Deterministic per seed. Letters alternate color from a random start; exactly one target.
/// Throws DomainError when the first-third rule cannot be honored (N < 2).
RsvpSchedule rsvp_sequence(const RsvpSpec& spec, std::uint64_t seed);

/// Per-channel linear luminance (cd/m^2 as if each channel were gray) of a letter color
/// whose weighted luminance equals the display background.
std::array<double, 3> letter_channels(LetterColor color, const DisplayGeometry& geom, double chroma = 0.25);

/// 5x7 glyph rows for 'A'-'Z'; bit 4 is the leftmost column.
const std::array<std::uint8_t, 7>& glyph(char letter);

struct RgbImage {
    std::array<LuminanceImage, 3> channels;
};

/// Display frame showing one RSVP letter at the center of a gray background.
RgbImage rsvp_frame(const RsvpItem& item, const RsvpSpec& spec, const DisplayGeometry& geom);

// Display encoding --------------------------------------------------------------

/// 8-bit display codes, row-major, interleaved when channels == 3.
struct EncodedFrame {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

/// Real-valued code ((L - Lmin) / (Lmax - Lmin))^(1/gamma) * 255 before dithering.
double ideal_code(double luminance, const DisplayGeometry& geom);

/// Inverse-gamma encode followed by 2x2 ordered dithering. Throws RangeError on
/// luminance outside [Lmin, Lmax].
EncodedFrame encode_display(const LuminanceImage& img, const DisplayGeometry& geom);
EncodedFrame encode_display(const RgbImage& img, const DisplayGeometry& geom);

/// Linear luminance of an encoded frame (channel-weighted for RGB).
LuminanceImage decode_display(const EncodedFrame& frame, const DisplayGeometry& geom);

} // namespace attncsf
