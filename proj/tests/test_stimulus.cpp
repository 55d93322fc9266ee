#include "attncsf/display.hpp"
#include "attncsf/image_io.hpp"
#include "attncsf/stimulus.hpp"

#include "support/test_support.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>

using namespace attncsf;
using doctest::Approx;

TEST_CASE("study monitor geometry") {
    const auto g = DisplayGeometry::study_monitor();
    CHECK(g.pixels_per_degree() == Approx(71.0).epsilon(0.01));
    const double half_w = pixel_to_eccentricity(g, {0.0, g.center_pixel.y()});
    const double half_h = pixel_to_eccentricity(g, {g.center_pixel.x(), 0.0});
    CHECK(2 * half_w == Approx(46.0).epsilon(0.02));
    CHECK(2 * half_h == Approx(20.0).epsilon(0.03));
}

TEST_CASE("pixel and visual-angle mappings are inverse") {
    const auto g = DisplayGeometry::study_monitor();
    for (const Vector2 p : {Vector2(10, 20), Vector2(3000, 1300), Vector2(1719.5, 719.5)}) {
        const Vector2 back = pixel_at(g, visual_position(g, p));
        CHECK(back.x() == Approx(p.x()));
        CHECK(back.y() == Approx(p.y()));
    }
    // +y is up
    CHECK(visual_position(g, {g.center_pixel.x(), 0.0}).y() > 0.0);
    CHECK(angle_between_pixels(g, {100, 100}, {100, 100}) == Approx(0.0));
    CHECK(eccentricity_to_pixel_distance(g, 1.0) == Approx(g.pixels_per_degree()));
    const auto kv = to_key_values(g);
    const auto g2 = display_geometry_from(KeyValues::parse(kv.str()));
    CHECK(g2.pixel_pitch_m == g.pixel_pitch_m);
}

TEST_CASE("Gabor patch") {
    const auto g = DisplayGeometry::study_monitor();
    GaborSpec s;
    s.eccentricity_deg = 7.0;
    s.polar_angle_deg = 0.0;
    s.orientation_deg = 0.0;
    s.sigma_deg = 0.5;
    s.frequency_cpd = 2.0;
    s.contrast = 0.2;
    const auto img = gabor_image(s, g);
    const Vector2 c = pixel_at(g, {7.0, 0.0});
    const int cx = static_cast<int>(std::lround(c.x())), cy = static_cast<int>(std::lround(c.y()));
    const Vector2 d = visual_position(g, Vector2(cx, cy)) - Vector2(7.0, 0.0);
    const double expected = 28.0 * (1.0 + 0.2 * std::exp(-d.squaredNorm() / (2 * 0.25)) *
                                              std::cos(2 * std::numbers::pi * 2.0 * d.x()));
    CHECK(img(cy, cx) == Approx(expected).epsilon(1e-12));
    // far from the patch: background
    CHECK(img(10, 10) == 28.0);
    // Michelson contrast of the patch
    const double lmax = img.maxCoeff(), lmin = img.minCoeff();
    CHECK((lmax - lmin) / (lmax + lmin) == Approx(0.2).epsilon(0.02));
    // one carrier period spans about ppd / f pixels near the center of the display
    GaborSpec centered = s;
    centered.eccentricity_deg = 0.0;
    const auto img0 = gabor_image(centered, g);
    const int y0 = static_cast<int>(g.center_pixel.y());
    int zero_crossings = 0;
    const int x_start = static_cast<int>(g.center_pixel.x()) - 35, x_end = static_cast<int>(g.center_pixel.x()) + 36;
    for (int x = x_start; x < x_end; ++x)
        if ((img0(y0, x) - 28.0) * (img0(y0, x + 1) - 28.0) < 0) ++zero_crossings;
    CHECK(zero_crossings == 4); // 71 pixels ~ two periods of 35.5 px
}

TEST_CASE("Gabor errors") {
    const auto g = DisplayGeometry::study_monitor();
    GaborSpec s;
    s.eccentricity_deg = 40.0; // off-screen
    CHECK_THROWS_AS(gabor_image(s, g), DomainError);
    s.eccentricity_deg = 7.0;
    s.contrast = 1.0; // 28 * (1 - 1) < 0.6 cd/m^2
    CHECK_THROWS_AS(gabor_image(s, g), RangeError);
}

TEST_CASE("study Gabor pair") {
    const auto g = DisplayGeometry::study_monitor();
    const auto& stim = reference::study_stimulus(3);
    const auto left = GaborSpec::from_study(stim, 0.1, 45, Side::left);
    const auto right = GaborSpec::from_study(stim, 0.1, 135, Side::right);
    CHECK(left.sigma_deg == Approx(1.0));
    const auto img = gabor_pair_image(left, right, g);
    const Vector2 lc = pixel_at(g, {-21.0, 0.0}), rc = pixel_at(g, {21.0, 0.0});
    CHECK(img(static_cast<int>(lc.y()), static_cast<int>(lc.x())) > 28.0);
    CHECK(img(static_cast<int>(rc.y()), static_cast<int>(rc.x())) > 28.0);
    CHECK(img(static_cast<int>(g.center_pixel.y()), static_cast<int>(g.center_pixel.x())) == 28.0);
}

TEST_CASE("RSVP schedules") {
    for (AttentionTag tag : kAttentionTags) {
        const auto spec = RsvpSpec::for_attention(tag);
        const int n = tag == AttentionTag::low ? 1 : tag == AttentionTag::medium ? 4 : 6;
        CHECK(spec.n_letters == n);
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            const auto s = rsvp_sequence(spec, seed);
            REQUIRE(s.items.size() == static_cast<std::size_t>(n));
            int targets = 0;
            for (std::size_t i = 0; i < s.items.size(); ++i) {
                targets += s.items[i].letter == 'T';
                CHECK(s.items[i].onset_ms == Approx(500.0 * i / n));
                if (i > 0) {
                    CHECK(s.items[i].color != s.items[i - 1].color);
                    CHECK(s.items[i].letter != s.items[i - 1].letter);
                }
            }
            CHECK(targets == 1);
            CHECK(s.items[s.target_index].letter == 'T');
            if (tag != AttentionTag::low) CHECK(s.target_index >= static_cast<std::size_t>((n + 2) / 3));
            CHECK(s.items.back().offset_ms == 500.0);
        }
    }
    const auto a = rsvp_sequence(RsvpSpec::for_attention(AttentionTag::high), 42);
    const auto b = rsvp_sequence(RsvpSpec::for_attention(AttentionTag::high), 42);
    for (std::size_t i = 0; i < a.items.size(); ++i) CHECK(a.items[i].letter == b.items[i].letter);
    RsvpSpec impossible;
    impossible.n_letters = 1;
    impossible.exclude_first_third = true;
    CHECK_THROWS_AS(rsvp_sequence(impossible, 1), DomainError);
}

TEST_CASE("RSVP letter colors are isoluminant with the background") {
    const auto g = DisplayGeometry::study_monitor();
    for (LetterColor c : {LetterColor::red, LetterColor::green}) {
        const auto ch = letter_channels(c, g);
        const double l = g.primary_weights[0] * ch[0] + g.primary_weights[1] * ch[1] + g.primary_weights[2] * ch[2];
        CHECK(l == Approx(g.background_luminance));
    }
    const auto g2 = testing::small_display(30, 90, 60);
    const auto frame = rsvp_frame({'T', LetterColor::red, 0, 500}, RsvpSpec{}, g2);
    CHECK(frame.channels[0].maxCoeff() > g2.background_luminance);
    CHECK_THROWS_AS(glyph('1'), DomainError);
}

TEST_CASE("display encoding with 2x2 dithering") {
    const auto g = testing::small_display(30, 64, 64);
    for (double lum : {0.6, 5.0, 28.0, 28.37, 77.7, 104.0}) {
        const LuminanceImage img = LuminanceImage::Constant(64, 64, lum);
        const auto f = encode_display(img, g);
        const double ideal = ideal_code(lum, g);
        double mean = 0;
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) mean += f.at(x, y) / 4.0;
        CHECK(std::abs(mean - ideal) <= 0.125 + 1e-12);
        for (auto v : f.data) CHECK(std::abs(v - ideal) < 1.0);
    }
    CHECK(ideal_code(0.6, g) == 0.0);
    CHECK(ideal_code(104.0, g) == Approx(255.0));
    CHECK_THROWS_AS(encode_display(LuminanceImage::Constant(4, 4, 200.0), g), RangeError);
    const auto f = encode_display(LuminanceImage::Constant(4, 4, 28.0), g);
    CHECK(decode_display(f, g)(0, 0) == Approx(28.0).epsilon(0.02));
}

TEST_CASE("PNG round trip") {
    EncodedFrame f;
    f.width = 5;
    f.height = 3;
    f.channels = 3;
    for (int i = 0; i < 45; ++i) f.data.push_back(static_cast<std::uint8_t>(i * 5));
    const auto back = decode_png(encode_png(f));
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.channels == 3);
    CHECK(back.data == f.data);
    CHECK_THROWS_AS(decode_png({1, 2, 3}), ImageIoError);
    auto bytes = encode_png(f);
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(decode_png(bytes), ImageIoError);
}
