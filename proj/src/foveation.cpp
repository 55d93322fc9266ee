#include "attncsf/foveation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace attncsf {

double mar(const MarModel& model, Eccentricity e) { return model(e.degrees()); }

FoveationConfig FoveationConfig::for_display(const DisplayGeometry& geom) {
    FoveationConfig cfg;
    cfg.omega_s = 2.0 / geom.pixels_per_degree();
    cfg.gaze = geom.center_pixel;
    return cfg;
}

double blur_sigma(const MarModel& model, const FoveationConfig& cfg, Eccentricity e) {
    if (!(cfg.omega_s > 0.0) || !(cfg.sigma_c > 0.0)) throw DomainError("omega_s and sigma_c must be > 0");
    return std::max(0.0, (model(e.degrees()) / cfg.omega_s - 1.0) / (2.0 * cfg.sigma_c));
}

Image<double> blur_sigma_map(const DisplayGeometry& geom, const MarModel& model, const FoveationConfig& cfg) {
    Image<double> out(geom.height, geom.width);
    for (int y = 0; y < geom.height; ++y)
        for (int x = 0; x < geom.width; ++x)
            out(y, x) = blur_sigma(model, cfg, Eccentricity(angle_between_pixels(geom, Vector2(x, y), cfg.gaze)));
    return out;
}

namespace {

constexpr double kStackBase = 1.0; // sigma of the first stack level, pixels
constexpr int kLevelsPerOctave = 4;
constexpr double kDecimationMargin = 4.0; // stored sample spacing <= sigma / margin

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= sum;
    return k;
}

Image<double> separable_blur(const Image<double>& in, double sigma) {
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const int rows = static_cast<int>(in.rows()), cols = static_cast<int>(in.cols());
    Image<double> tmp(rows, cols), out(rows, cols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * in(y, std::clamp(x + i, 0, cols - 1));
            tmp(y, x) = acc;
        }
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(std::clamp(y + i, 0, rows - 1), x);
            out(y, x) = acc;
        }
    return out;
}

Image<double> decimate(const Image<double>& in) {
    const Eigen::Index rows = (in.rows() + 1) / 2, cols = (in.cols() + 1) / 2;
    Image<double> out(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x) out(y, x) = in(2 * y, 2 * x);
    return out;
}

/// Normalized, truncated Gaussian gathered around one pixel.
double direct_gaussian(const Image<double>& img, int x, int y, double sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    const int rows = static_cast<int>(img.rows()), cols = static_cast<int>(img.cols());
    const double inv = -0.5 / (sigma * sigma);
    double acc = 0.0, norm = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, rows - 1);
        for (int dx = -r; dx <= r; ++dx) {
            const double w = std::exp(inv * (dx * dx + dy * dy));
            acc += w * img(yy, std::clamp(x + dx, 0, cols - 1));
            norm += w;
        }
    }
    return acc / norm;
}

struct StackLevel {
    double sigma = 0.0;
    int step = 1;
    Image<double> data;

    double sample(double x, double y) const {
        const double u = std::clamp(x / step, 0.0, static_cast<double>(data.cols() - 1));
        const double v = std::clamp(y / step, 0.0, static_cast<double>(data.rows() - 1));
        const Eigen::Index u0 = static_cast<Eigen::Index>(u), v0 = static_cast<Eigen::Index>(v);
        const Eigen::Index u1 = std::min<Eigen::Index>(u0 + 1, data.cols() - 1);
        const Eigen::Index v1 = std::min<Eigen::Index>(v0 + 1, data.rows() - 1);
        const double fu = u - u0, fv = v - v0;
        return (1 - fv) * ((1 - fu) * data(v0, u0) + fu * data(v0, u1)) +
               fv * ((1 - fu) * data(v1, u0) + fu * data(v1, u1));
    }
};

double level_sigma(int k) { return kStackBase * std::exp2(static_cast<double>(k) / kLevelsPerOctave); }

StackLevel next_level(const StackLevel& prev, int k) {
    StackLevel next;
    next.sigma = level_sigma(k);
    next.step = prev.step;
    next.data = prev.data;
    if (2.0 * prev.step <= next.sigma / kDecimationMargin) {
        next.data = decimate(prev.data);
        next.step *= 2;
    }
    const double add = std::sqrt(next.sigma * next.sigma - prev.sigma * prev.sigma) / next.step;
    next.data = separable_blur(next.data, add);
    return next;
}

} // namespace

LuminanceImage varying_gaussian_blur(const LuminanceImage& img, const Image<double>& sigma) {
    if (img.rows() != sigma.rows() || img.cols() != sigma.cols())
        throw DomainError("sigma map and image dimensions differ");
    LuminanceImage out = img;
    if (img.size() == 0) return out;
    const double max_sigma = sigma.maxCoeff();
    if (!(max_sigma > 0.0)) return out;

    const int rows = static_cast<int>(img.rows()), cols = static_cast<int>(img.cols());

    // Bucket pixels by the stack interval [level k, level k+1] containing their sigma.
    const int top = std::max(1, static_cast<int>(std::ceil(kLevelsPerOctave * std::log2(max_sigma / kStackBase))));
    std::vector<std::vector<int>> buckets(static_cast<std::size_t>(top));
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            const double s = sigma(y, x);
            if (s <= 0.0) continue;
            if (s < kStackBase) {
                out(y, x) = direct_gaussian(img, x, y, s);
                continue;
            }
            const int k = std::clamp(static_cast<int>(std::floor(kLevelsPerOctave * std::log2(s / kStackBase))), 0,
                                     top - 1);
            buckets[static_cast<std::size_t>(k)].push_back(y * cols + x);
        }

    // Edge-replicated padding so that the cascaded blurs see the same borders as one clamped blur.
    const int pad = static_cast<int>(std::ceil(6.0 * max_sigma));
    Image<double> padded(rows + 2 * pad, cols + 2 * pad);
    for (int y = 0; y < padded.rows(); ++y)
        for (int x = 0; x < padded.cols(); ++x)
            padded(y, x) = img(std::clamp(y - pad, 0, rows - 1), std::clamp(x - pad, 0, cols - 1));

    StackLevel lower{kStackBase, 1, separable_blur(padded, kStackBase)};
    for (int k = 0; k < top; ++k) {
        StackLevel upper = next_level(lower, k + 1);
        const double va = lower.sigma * lower.sigma, vb = upper.sigma * upper.sigma;
        for (int idx : buckets[static_cast<std::size_t>(k)]) {
            const int y = idx / cols, x = idx % cols;
            const double s = sigma(y, x);
            const double w = std::clamp((s * s - va) / (vb - va), 0.0, 1.0);
            out(y, x) = (1.0 - w) * lower.sample(x + pad, y + pad) + w * upper.sample(x + pad, y + pad);
        }
        lower = std::move(upper);
    }
    return out;
}

LuminanceImage foveate_image(const LuminanceImage& img, const DisplayGeometry& geom, const MarModel& model,
                             const FoveationConfig& cfg) {
    if (img.rows() != geom.height || img.cols() != geom.width)
        throw DomainError("image does not match the display raster");
    if (cfg.gaze.x() < 0.0 || cfg.gaze.y() < 0.0 || cfg.gaze.x() > geom.width - 1 || cfg.gaze.y() > geom.height - 1)
        throw DomainError("gaze position outside the image");
    return varying_gaussian_blur(img, blur_sigma_map(geom, model, cfg));
}

double split_bar_weight(double horizontal_deg, const SplitBar& bar) {
    const double beyond = std::abs(horizontal_deg) - 0.5 * bar.width_deg;
    if (beyond <= 0.0) return 1.0;
    if (beyond > 5.0 * bar.falloff_sigma_deg) return 0.0;
    return std::exp(-beyond * beyond / (2.0 * bar.falloff_sigma_deg * bar.falloff_sigma_deg));
}

LuminanceImage compose_split_screen(const LuminanceImage& left, const LuminanceImage& right,
                                    const DisplayGeometry& geom, const SplitBar& bar) {
    if (left.rows() != right.rows() || left.cols() != right.cols())
        throw DomainError("split-screen halves differ in size");
    if (left.rows() != geom.height || left.cols() != geom.width)
        throw DomainError("split-screen images do not match the display raster");
    LuminanceImage out(left.rows(), left.cols());
    const double dist = geom.viewing_distance_m / geom.lens_magnification;
    for (int x = 0; x < geom.width; ++x) {
        const double offset = x - geom.center_pixel.x();
        const double h = std::atan(offset * geom.pixel_pitch_m / dist) * 180.0 / std::numbers::pi;
        const double w = split_bar_weight(h, bar);
        const auto& src = offset < 0.0 ? left : right;
        if (w == 0.0) {
            out.col(x) = src.col(x);
        } else {
            out.col(x) = w * geom.background_luminance + (1.0 - w) * src.col(x);
        }
    }
    return out;
}

} // namespace attncsf
