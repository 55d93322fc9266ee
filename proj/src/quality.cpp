#include "attncsf/quality.hpp"

#include "attncsf/reference_data.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>

namespace attncsf {

namespace {

constexpr std::array<double, 5> kBinomial = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
constexpr double kMinLocalMean = 1e-3; // cd/m^2

Image<double> reduce(const Image<double>& in) {
    const int rows = static_cast<int>(in.rows()), cols = static_cast<int>(in.cols());
    const int orows = (rows + 1) / 2, ocols = (cols + 1) / 2;
    Image<double> tmp(rows, ocols), out(orows, ocols);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < ocols; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += kBinomial[i + 2] * in(y, std::clamp(2 * x + i, 0, cols - 1));
            tmp(y, x) = acc;
        }
    for (int y = 0; y < orows; ++y)
        for (int x = 0; x < ocols; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) acc += kBinomial[i + 2] * tmp(std::clamp(2 * y + i, 0, rows - 1), x);
            out(y, x) = acc;
        }
    return out;
}

/// Upsamples to rows x cols by zero insertion and the doubled binomial kernel.
Image<double> expand(const Image<double>& in, int rows, int cols) {
    const int irows = static_cast<int>(in.rows()), icols = static_cast<int>(in.cols());
    Image<double> tmp(irows, cols), out(rows, cols);
    for (int y = 0; y < irows; ++y)
        for (int x = 0; x < cols; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) {
                const int s = x + i;
                if (s % 2 != 0) continue;
                acc += 2.0 * kBinomial[i + 2] * in(y, std::clamp(s / 2, 0, icols - 1));
            }
            tmp(y, x) = acc;
        }
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i) {
                const int s = y + i;
                if (s % 2 != 0) continue;
                acc += 2.0 * kBinomial[i + 2] * tmp(std::clamp(s / 2, 0, irows - 1), x);
            }
            out(y, x) = acc;
        }
    return out;
}

void warn_clamped_frequency(double f, double clamped) {
    static std::once_flag once;
    std::call_once(once, [&] {
        std::cerr << "warning: band frequency " << f << " cpd outside the CSF domain, clamped to " << clamped
                  << " cpd\n";
    });
}

} // namespace

PredictorConfig PredictorConfig::study_default(std::optional<AttentionTag> attention) {
    PredictorConfig cfg;
    cfg.attention = attention;
    cfg.baseline_csf = std::make_shared<CorticallyScaledCsf>(CorticallyScaledCsf::study_default());
    cfg.threshold_models = reference::threshold_models();
    return cfg;
}

double band_frequency(int band, double pixels_per_degree) {
    return pixels_per_degree / (std::exp2(band + 1) * std::sqrt(2.0));
}

QualityPredictor::QualityPredictor(const LuminanceImage& reference, const DisplayGeometry& geom, PredictorConfig cfg)
    : cfg_(std::move(cfg)), geom_(geom), rows_(reference.rows()), cols_(reference.cols()) {
    if (cfg_.band_count < 3) throw DomainError("the predictor needs at least 3 bands");
    if (!cfg_.baseline_csf) throw DomainError("predictor config lacks a baseline CSF");
    if (!(cfg_.pooling_exponent >= 1.0)) throw DomainError("pooling exponent must be >= 1");
    if (rows_ != geom.height || cols_ != geom.width) throw DomainError("reference does not match the display raster");
    if (std::min(rows_, cols_) < (Eigen::Index(1) << cfg_.band_count))
        throw DomainError("image too small for the requested band count");
    reference_ = decompose(reference);

    const Vector2 gaze = cfg_.gaze.value_or(geom.center_pixel);
    const double ppd = geom.pixels_per_degree();
    const auto [fmin, fmax] = cfg_.baseline_csf->frequency_domain();
    for (int k = 0; k < cfg_.band_count; ++k) {
        Band& band = reference_[static_cast<std::size_t>(k)];
        const double scale = std::exp2(k);
        double f = band_frequency(k, ppd);
        const double clamped = std::clamp(f, fmin, fmax);
        if (clamped != f) warn_clamped_frequency(f, clamped);
        f = clamped;
        band.area_weight = (scale / ppd) * (scale / ppd);
        band.sensitivity.resize(band.laplacian.rows(), band.laplacian.cols());
        for (Eigen::Index y = 0; y < band.laplacian.rows(); ++y)
            for (Eigen::Index x = 0; x < band.laplacian.cols(); ++x) {
                const Vector2 pos((x + 0.5) * scale - 0.5, (y + 0.5) * scale - 0.5);
                const double e = angle_between_pixels(geom, pos, gaze);
                double s = cfg_.baseline_csf->sensitivity({f, e, geom.background_luminance, 1.0});
                if (cfg_.attention) s /= attention_gain_over_field(cfg_.threshold_models, *cfg_.attention, e);
                band.sensitivity(y, x) = s;
            }
    }
}

std::vector<QualityPredictor::Band> QualityPredictor::decompose(const LuminanceImage& img) const {
    std::vector<Band> bands(static_cast<std::size_t>(cfg_.band_count));
    Image<double> current = img;
    for (int k = 0; k < cfg_.band_count; ++k) {
        Image<double> next = reduce(current);
        Image<double> low = expand(next, static_cast<int>(current.rows()), static_cast<int>(current.cols()));
        bands[static_cast<std::size_t>(k)].laplacian = current - low;
        bands[static_cast<std::size_t>(k)].local_mean = low.max(kMinLocalMean);
        current = std::move(next);
    }
    return bands;
}

double QualityPredictor::pooled_error(const LuminanceImage& test) const {
    if (test.rows() != rows_ || test.cols() != cols_) throw DomainError("test and reference images differ in size");
    const auto bands = decompose(test);
    const double beta = cfg_.pooling_exponent;
    double total = 0.0;
    for (std::size_t k = 0; k < bands.size(); ++k) {
        const Band& ref = reference_[k];
        const auto err = ((bands[k].laplacian - ref.laplacian) / ref.local_mean * ref.sensitivity).abs();
        total += ref.area_weight * err.pow(beta).sum();
    }
    return std::pow(total, 1.0 / beta);
}

QualityScore QualityPredictor::score(const LuminanceImage& test) const {
    return {10.0 - kJodPerPooledError * pooled_error(test)};
}

QualityScore predict_quality(const LuminanceImage& reference, const LuminanceImage& test, const DisplayGeometry& geom,
                             const PredictorConfig& cfg) {
    return QualityPredictor(reference, geom, cfg).score(test);
}

// Slope search ------------------------------------------------------------------

SlopeSearchResult bisect_largest_feasible(const std::function<double(double)>& quality, double q_thr, double lo,
                                          double hi, double tolerance) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) throw DomainError("degenerate slope bracket");
    if (!(tolerance > 0.0)) throw DomainError("bisection tolerance must be > 0");
    SlopeSearchResult result;
    const auto eval = [&](double m) {
        const double q = quality(m);
        result.trace.push_back({m, q});
        return q;
    };
    if (eval(lo) < q_thr) throw InfeasibleError("quality at the lower slope bound is already below the threshold");
    if (eval(hi) >= q_thr) {
        result.slope = hi;
        return result;
    }
    while (hi - lo > tolerance) {
        const double mid = 0.5 * (lo + hi);
        (eval(mid) >= q_thr ? lo : hi) = mid;
    }
    result.slope = lo;
    return result;
}

SlopeSearchOptions slope_search_options_for(const DisplayGeometry& geom) {
    SlopeSearchOptions options;
    options.foveation = FoveationConfig::for_display(geom);
    return options;
}

double foveated_quality(const QualityPredictor& predictor, const LuminanceImage& reference,
                        const DisplayGeometry& geom, double slope, const SlopeSearchOptions& options) {
    FoveationConfig fov = options.foveation;
    fov.gaze = predictor.config().gaze.value_or(geom.center_pixel);
    const auto test = foveate_image(reference, geom, MarModel{slope, options.omega0}, fov);
    return predictor.score(test).jod;
}

SlopeSearchResult optimize_mar_slope(const LuminanceImage& reference, const DisplayGeometry& geom,
                                     const PredictorConfig& cfg, QualityScore q_thr,
                                     const SlopeSearchOptions& options) {
    if (!(options.slope_min >= 0.0)) throw DomainError("MAR slopes must be >= 0");
    const QualityPredictor predictor(reference, geom, cfg);
    return bisect_largest_feasible(
        [&](double m) { return foveated_quality(predictor, reference, geom, m, options); }, q_thr.jod,
        options.slope_min, options.slope_max, options.tolerance);
}

} // namespace attncsf
