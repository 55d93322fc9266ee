#include "attncsf/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace attncsf {

namespace {

/// Sum of randomly oriented sinusoids with 1/f amplitudes; roughly zero mean, unit range.
Image<double> spectral_noise(int width, int height, std::mt19937_64& rng, double f_min, double f_max, int terms) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image<double> out = Image<double>::Zero(height, width);
    const Eigen::ArrayXd xs = Eigen::ArrayXd::LinSpaced(width, 0, width - 1);
    double norm = 0.0;
    for (int i = 0; i < terms; ++i) {
        const double f = f_min * std::pow(f_max / f_min, unit(rng)); // cycles per pixel
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        const double amp = f_min / f;
        const double fx = 2.0 * std::numbers::pi * f * std::cos(theta), fy = 2.0 * std::numbers::pi * f * std::sin(theta);
        for (int y = 0; y < height; ++y) out.row(y) += (amp * (fx * xs + (fy * y + phase)).cos()).matrix().transpose().array();
        norm += amp;
    }
    return out / norm;
}

Image<double> tulips(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image<double> img = 0.35 + 0.15 * spectral_noise(w, h, rng, 0.01, 0.25, 48);
    const int blobs = std::max(8, w * h / 900);
    for (int i = 0; i < blobs; ++i) {
        const double cx = unit(rng) * w, cy = unit(rng) * h;
        const double r = 2.0 + unit(rng) * 0.02 * std::min(w, h) + 3.0;
        const double level = unit(rng) < 0.5 ? 0.9 : 0.1;
        const int x0 = std::max(0, static_cast<int>(cx - 3 * r)), x1 = std::min(w - 1, static_cast<int>(cx + 3 * r));
        const int y0 = std::max(0, static_cast<int>(cy - 3 * r)), y1 = std::min(h - 1, static_cast<int>(cy + 3 * r));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r);
                const double a = std::exp(-d2 * d2);
                img(y, x) = (1 - a) * img(y, x) + a * level;
            }
    }
    return img;
}

Image<double> city(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image<double> img(h, w);
    for (int y = 0; y < h; ++y) img.row(y).setConstant(0.75 - 0.2 * y / h); // sky
    int x = 0;
    while (x < w) {
        const int bw = 6 + static_cast<int>(unit(rng) * w / 10);
        const int top = static_cast<int>(h * (0.15 + 0.6 * unit(rng)));
        const double facade = 0.15 + 0.35 * unit(rng);
        const int pitch = 3 + static_cast<int>(unit(rng) * 4);
        for (int yy = top; yy < h; ++yy)
            for (int xx = x; xx < std::min(w, x + bw); ++xx) {
                const bool window = ((xx - x) % pitch == 1) && ((yy - top) % pitch == 1);
                img(yy, xx) = window ? 0.95 : facade;
            }
        x += bw + static_cast<int>(unit(rng) * 3);
    }
    return img;
}

Image<double> mountain(int w, int h, std::mt19937_64& rng) {
    const Image<double> ridge = spectral_noise(w, 1, rng, 0.002, 0.2, 64);
    const Image<double> rock = spectral_noise(w, h, rng, 0.02, 0.4, 64);
    Image<double> img(h, w);
    for (int x = 0; x < w; ++x) {
        const double line = h * (0.45 + 0.3 * ridge(0, x));
        for (int y = 0; y < h; ++y) {
            const double sky = 0.8 - 0.3 * y / h;
            const double ground = 0.3 + 0.2 * rock(y, x) - 0.1 * (y - line) / h;
            const double a = std::clamp(y - line + 0.5, 0.0, 1.0);
            img(y, x) = (1 - a) * sky + a * ground;
        }
    }
    return img;
}

Image<double> forest(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image<double> img = 0.45 + 0.25 * spectral_noise(w, h, rng, 0.08, 0.45, 96);
    const int trunks = std::max(6, w / 12);
    for (int i = 0; i < trunks; ++i) {
        const int cx = static_cast<int>(unit(rng) * w);
        const int half = 1 + static_cast<int>(unit(rng) * 3);
        const double level = 0.08 + 0.1 * unit(rng);
        for (int y = 0; y < h; ++y)
            for (int x = std::max(0, cx - half); x <= std::min(w - 1, cx + half); ++x) img(y, x) = level;
    }
    return img;
}

} // namespace

bool is_scene_name(std::string_view name) {
    return std::find(kSceneNames.begin(), kSceneNames.end(), name) != kSceneNames.end();
}

LuminanceImage procedural_scene(std::string_view name, int width, int height, double lo, double hi,
                                std::uint64_t seed) {
    if (width < 8 || height < 8) throw DomainError("scene must be at least 8x8 pixels");
    if (!(hi > lo) || lo < 0.0) throw DomainError("invalid scene luminance range");
    const auto index = static_cast<std::uint64_t>(std::find(kSceneNames.begin(), kSceneNames.end(), name) - kSceneNames.begin());
    std::seed_seq seq{seed, index};
    std::mt19937_64 rng(seq);
    Image<double> img;
    if (name == "tulips") img = tulips(width, height, rng);
    else if (name == "city") img = city(width, height, rng);
    else if (name == "mountain") img = mountain(width, height, rng);
    else if (name == "forest") img = forest(width, height, rng);
    else throw DomainError("unknown scene '" + std::string(name) + "'");
    return lo + (hi - lo) * img.max(0.0).min(1.0);
}

} // namespace attncsf
