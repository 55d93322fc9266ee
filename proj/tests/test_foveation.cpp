#include "attncsf/foveation.hpp"
#include "attncsf/scenes.hpp"

#include "support/test_support.hpp"

#include "doctest.h"

#include <cmath>

using namespace attncsf;
using doctest::Approx;

namespace {

/// Normalized Gaussian gathered per pixel with clamp-to-edge borders, radius 6 sigma.
LuminanceImage exact_blur(const LuminanceImage& img, const Image<double>& sigma) {
    const int rows = static_cast<int>(img.rows()), cols = static_cast<int>(img.cols());
    LuminanceImage out(rows, cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            const double s = sigma(y, x);
            if (s <= 0.0) {
                out(y, x) = img(y, x);
                continue;
            }
            const int r = static_cast<int>(std::ceil(6.0 * s));
            double acc = 0.0, norm = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
                    acc += w * img(std::clamp(y + dy, 0, rows - 1), std::clamp(x + dx, 0, cols - 1));
                    norm += w;
                }
            out(y, x) = acc / norm;
        }
    return out;
}

double relative_rms(const LuminanceImage& a, const LuminanceImage& b) {
    return std::sqrt((a - b).square().mean()) / std::sqrt(b.square().mean());
}

} // namespace

TEST_CASE("MAR model and filter width") {
    const MarModel m{0.0420};
    CHECK(mar(m, Eccentricity(10.0)) == Approx(0.42 + 1.0 / 48.0));
    FoveationConfig cfg;
    CHECK(blur_sigma(m, cfg, Eccentricity(10.0)) == Approx(((0.42 + 1.0 / 48.0) / 0.0283 - 1.0) / 4.0));
    CHECK(blur_sigma(MarModel{0.0}, cfg, Eccentricity(30.0)) == 0.0);
    const auto study = FoveationConfig::for_display(DisplayGeometry::study_monitor());
    CHECK(study.omega_s == Approx(0.0283).epsilon(0.01));
    cfg.sigma_c = 0.0;
    CHECK_THROWS_AS(blur_sigma(m, cfg, Eccentricity(1.0)), DomainError);
}

TEST_CASE("identity when the MAR never exceeds the display MAR") {
    const auto g = testing::small_display(20, 96, 64);
    const auto img = procedural_scene("city", 96, 64);
    const auto cfg = FoveationConfig::for_display(g); // omega_s = 0.1 > 1/48
    const auto out = foveate_image(img, g, MarModel{0.0}, cfg);
    CHECK((out == img).all());
}

TEST_CASE("constant sigma equals a plain Gaussian blur") {
    const auto img = procedural_scene("forest", 80, 72);
    for (double s : {0.4, 1.0, 2.7, 6.0}) {
        const Image<double> sigma = Image<double>::Constant(72, 80, s);
        const auto fast = varying_gaussian_blur(img, sigma);
        const auto exact = exact_blur(img, sigma);
        CAPTURE(s);
        CHECK(relative_rms(fast, exact) < 0.02);
    }
}

TEST_CASE("foveation matches the per-pixel Gaussian oracle") {
    const auto g = testing::small_display(60, 128, 128);
    for (const auto name : kSceneNames) {
        const auto img = procedural_scene(name, 128, 128);
        for (double slope : {0.0198, 0.0596, 0.2, 0.5}) {
            const auto cfg = FoveationConfig::for_display(g);
            const auto sigma = blur_sigma_map(g, MarModel{slope}, cfg);
            const auto fast = foveate_image(img, g, MarModel{slope}, cfg);
            CAPTURE(name);
            CAPTURE(slope);
            CHECK(relative_rms(fast, exact_blur(img, sigma)) < 0.02);
        }
    }
}

TEST_CASE("sigma map grows away from gaze") {
    const auto g = testing::small_display(60, 128, 96);
    auto cfg = FoveationConfig::for_display(g);
    cfg.gaze = {20.0, 30.0};
    const auto sigma = blur_sigma_map(g, MarModel{0.3}, cfg);
    CHECK(sigma(30, 20) == 0.0);
    CHECK(sigma(90, 120) > sigma(50, 60));
}

TEST_CASE("foveation input validation") {
    const auto g = testing::small_display(60, 64, 64);
    auto cfg = FoveationConfig::for_display(g);
    CHECK_THROWS_AS(foveate_image(LuminanceImage::Constant(32, 64, 28.0), g, MarModel{0.1}, cfg), DomainError);
    cfg.gaze = {100.0, 10.0};
    CHECK_THROWS_AS(foveate_image(LuminanceImage::Constant(64, 64, 28.0), g, MarModel{0.1}, cfg), DomainError);
    CHECK_THROWS_AS(varying_gaussian_blur(LuminanceImage::Constant(4, 4, 1.0), Image<double>::Zero(4, 5)), DomainError);
}

TEST_CASE("split screen") {
    CHECK(split_bar_weight(0.0) == 1.0);
    CHECK(split_bar_weight(3.0) == 1.0);
    CHECK(split_bar_weight(3.5) == Approx(std::exp(-0.5 * 1.0)));
    CHECK(split_bar_weight(-3.5) == Approx(std::exp(-0.5 * 1.0)));
    CHECK(split_bar_weight(6.0) == 0.0);

    const auto g = testing::small_display(10, 300, 40);
    const LuminanceImage left = LuminanceImage::Constant(40, 300, 10.0);
    const LuminanceImage right = LuminanceImage::Constant(40, 300, 50.0);
    const auto out = compose_split_screen(left, right, g);
    CHECK(out(5, 0) == 10.0);
    CHECK(out(5, 299) == 50.0);
    CHECK(out(5, 150) == Approx(g.background_luminance));
    CHECK_THROWS_AS(compose_split_screen(left, LuminanceImage::Constant(40, 10, 1.0), g), DomainError);
}
