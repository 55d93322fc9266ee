#include "attncsf/model_fit.hpp"

#include "attncsf/reference_data.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace attncsf {

namespace {

struct Point {
    double e;
    double a_c;
    double t;
};

/// Sorted before summation so the means do not depend on input order.
double mean_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::vector<Point> fit_points(const std::vector<ThresholdSample>& samples, FitWeighting weighting,
                              const std::function<bool(const ThresholdSample&)>& keep) {
    std::vector<Point> points;
    if (weighting == FitWeighting::per_sample) {
        for (const auto& s : samples)
            if (keep(s)) points.push_back({s.eccentricity_deg, AttentionLevel::continuous_of(s.attention), s.contrast});
        std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
            return std::tie(a.e, a.a_c, a.t) < std::tie(b.e, b.a_c, b.t);
        });
        return points;
    }
    std::map<std::pair<double, double>, std::vector<double>> cells;
    for (const auto& s : samples)
        if (keep(s)) cells[{s.eccentricity_deg, AttentionLevel::continuous_of(s.attention)}].push_back(s.contrast);
    for (auto& [key, values] : cells) points.push_back({key.first, key.second, mean_of(values)});
    return points;
}

double r_squared_of(const Eigen::VectorXd& y, double rss) {
    const double mean = y.mean();
    const double tss = (y.array() - mean).square().sum();
    if (tss == 0.0) return rss == 0.0 ? 1.0 : 0.0;
    return 1.0 - rss / tss;
}

void validate_samples(const std::vector<ThresholdSample>& samples) {
    for (const auto& s : samples) {
        if (!(s.eccentricity_deg > 0.0)) throw DomainError("sample eccentricity must be > 0");
        if (!(s.contrast > 0.0 && s.contrast <= 1.0)) throw DomainError("sample contrast must lie in (0,1]");
    }
}

struct InnerFit {
    Eigen::Vector4d coefficients;
    double rss;
};

Eigen::RowVector4d unified_row(double e, double a_c, double gamma_i) {
    const double d = std::sqrt(e) - std::sqrt(UnifiedModel::kReferenceEccentricity);
    const double ws = std::pow(a_c, UnifiedModel::kSlopeExponent);
    const double wi = std::pow(a_c, gamma_i);
    return {(1.0 - ws) * d, ws * d, 1.0 - wi, wi};
}

InnerFit unified_inner(const std::vector<Point>& pts, double gamma_i) {
    Eigen::MatrixXd A(pts.size(), 4);
    Eigen::VectorXd y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        A.row(static_cast<Eigen::Index>(i)) = unified_row(pts[i].e, pts[i].a_c, gamma_i);
        y(static_cast<Eigen::Index>(i)) = pts[i].t;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < 4) throw FitError("unified model: inner least-squares system is singular");
    InnerFit out;
    out.coefficients = qr.solve(y);
    out.rss = (A * out.coefficients - y).squaredNorm();
    return out;
}

std::vector<Point> unified_points(const std::vector<ThresholdSample>& samples, FitWeighting weighting) {
    validate_samples(samples);
    auto pts = fit_points(samples, weighting, [](const ThresholdSample&) { return true; });
    std::set<double> levels, eccs;
    for (const auto& p : pts) {
        levels.insert(p.a_c);
        eccs.insert(p.e);
    }
    if (levels.size() < 2) throw FitError("unified model needs at least two attention levels");
    if (eccs.size() < 2) throw FitError("unified model needs at least two eccentricities");
    return pts;
}

} // namespace

double adjusted_r_squared(double r_squared, int n, int k) {
    if (n - k - 1 <= 0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - (1.0 - r_squared) * (n - 1) / static_cast<double>(n - k - 1);
}

FitReport<ThresholdModel> fit_per_condition(const std::vector<ThresholdSample>& samples, AttentionTag attention,
                                            FitWeighting weighting) {
    validate_samples(samples);
    const auto keep = [attention](const ThresholdSample& s) { return s.attention == attention; };
    const auto pts = fit_points(samples, weighting, keep);
    std::set<double> eccs;
    for (const auto& p : pts) eccs.insert(p.e);
    if (eccs.size() < 2)
        throw FitError("per-condition fit needs at least two distinct eccentricities (rank deficient)");

    // Normal equations for the basis {sqrt(e), 1}.
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixX2d A(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = std::sqrt(pts[static_cast<std::size_t>(i)].e);
        A(i, 1) = 1.0;
        y(i) = pts[static_cast<std::size_t>(i)].t;
    }
    const Eigen::Matrix2d normal = A.transpose() * A;
    const Eigen::Vector2d p = normal.inverse() * (A.transpose() * y);

    FitReport<ThresholdModel> report;
    report.parameters = {p(0), p(1), attention};
    report.residual_sum_of_squares = (A * p - y).squaredNorm();
    report.r_squared = r_squared_of(y, report.residual_sum_of_squares);
    report.free_parameters = 2;
    report.fitted_points = static_cast<int>(n);
    report.adjusted_r_squared = adjusted_r_squared(report.r_squared, report.fitted_points, 2);
    for (const auto& s : samples)
        if (keep(s)) report.residuals.push_back(s.contrast - report.parameters(s.eccentricity_deg));
    return report;
}

double unified_profile_rss(const std::vector<ThresholdSample>& samples, double gamma_i, FitWeighting weighting) {
    return unified_inner(unified_points(samples, weighting), gamma_i).rss;
}

FitReport<UnifiedModel> fit_unified(const std::vector<ThresholdSample>& samples, const UnifiedFitOptions& options) {
    if (!(options.gamma_max > options.gamma_min) || options.gamma_min < 0.0 || options.grid_points < 3)
        throw DomainError("invalid gamma_i search bracket");
    const auto pts = unified_points(samples, options.weighting);
    const auto rss = [&](double g) { return unified_inner(pts, g).rss; };

    const double span = options.gamma_max - options.gamma_min;
    const double step = span / options.grid_points;
    int best = 1;
    double best_rss = rss(options.gamma_min + step);
    for (int j = 2; j <= options.grid_points; ++j) {
        const double r = rss(options.gamma_min + j * step);
        if (r < best_rss) {
            best_rss = r;
            best = j;
        }
    }

    // Golden-section refinement inside the neighbouring grid cells.
    double lo = std::max(options.gamma_min + step * (best - 1), options.gamma_min + 1e-9);
    double hi = std::min(options.gamma_min + step * (best + 1), options.gamma_max);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
    double fc = rss(c), fd = rss(d);
    while (hi - lo > options.tolerance) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = rss(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = rss(d);
        }
    }
    double gamma = 0.5 * (lo + hi);
    InnerFit inner = unified_inner(pts, gamma);
    const double grid_gamma = options.gamma_min + best * step;
    if (best_rss < inner.rss) {
        gamma = grid_gamma;
        inner = unified_inner(pts, gamma);
    }

    FitReport<UnifiedModel> report;
    report.parameters.s0 = inner.coefficients(0);
    report.parameters.s1 = inner.coefficients(1);
    report.parameters.i0 = inner.coefficients(2);
    report.parameters.i1 = inner.coefficients(3);
    report.parameters.gamma_i = gamma;
    report.residual_sum_of_squares = inner.rss;
    Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) y(static_cast<Eigen::Index>(i)) = pts[i].t;
    report.r_squared = r_squared_of(y, inner.rss);
    report.free_parameters = 5;
    report.fitted_points = static_cast<int>(pts.size());
    report.adjusted_r_squared = adjusted_r_squared(report.r_squared, report.fitted_points, 5);
    for (const auto& s : samples)
        report.residuals.push_back(
            s.contrast - report.parameters(s.eccentricity_deg, AttentionLevel::continuous_of(s.attention)));
    return report;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("quantile of an empty set");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

OutlierPartition detect_outliers_iqr(const std::vector<double>& values, double k) {
    if (values.size() < 4) throw DomainError("IQR outlier detection needs at least 4 values");
    OutlierPartition out;
    out.q1 = quantile(values, 0.25);
    out.q3 = quantile(values, 0.75);
    const double iqr = out.q3 - out.q1;
    const double lower = out.q1 - k * iqr, upper = out.q3 + k * iqr;
    for (std::size_t i = 0; i < values.size(); ++i)
        (values[i] < lower || values[i] > upper ? out.removed : out.kept).push_back(i);
    return out;
}

std::vector<ThresholdSample> baseline_adjust(const std::vector<ThresholdSample>& samples, double baseline_prediction) {
    if (!(baseline_prediction > 0.0)) throw DomainError("baseline prediction must be > 0");
    std::map<std::string, std::vector<double>> low;
    std::set<std::string> subjects;
    for (const auto& s : samples) {
        subjects.insert(s.subject_id);
        if (s.attention == AttentionTag::low) low[s.subject_id].push_back(s.contrast);
    }
    std::map<std::string, double> factor;
    for (const auto& subject : subjects) {
        auto it = low.find(subject);
        if (it == low.end()) throw DomainError("subject '" + subject + "' has no low-attention measurement");
        factor[subject] = baseline_prediction / mean_of(it->second);
    }
    std::vector<ThresholdSample> out = samples;
    for (auto& s : out) s.contrast *= factor[s.subject_id];
    return out;
}

// I/O -------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        cell.erase(0, cell.find_first_not_of(" \t\r"));
        cell.erase(cell.find_last_not_of(" \t\r") + 1);
        out.push_back(cell);
    }
    return out;
}

} // namespace

std::vector<ThresholdSample> read_threshold_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("threshold CSV is empty");
    const auto header = split_csv(line);
    const std::vector<std::string> expected = {"subject", "eccentricity_deg", "attention", "contrast", "repetition"};
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const auto& name : expected)
        if (!col.count(name)) throw ParseError("threshold CSV lacks column '" + name + "'");

    std::vector<ThresholdSample> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() < header.size()) throw ParseError("line " + std::to_string(lineno) + ": missing cells");
        ThresholdSample s;
        try {
            s.subject_id = cells[col["subject"]];
            s.eccentricity_deg = std::stod(cells[col["eccentricity_deg"]]);
            s.contrast = std::stod(cells[col["contrast"]]);
            s.repetition = std::stoi(cells[col["repetition"]]);
        } catch (const std::exception&) {
            throw ParseError("line " + std::to_string(lineno) + ": malformed number");
        }
        const auto tag = parse_attention_tag(cells[col["attention"]]);
        if (!tag) throw ParseError("line " + std::to_string(lineno) + ": unknown attention level");
        s.attention = *tag;
        out.push_back(s);
    }
    return out;
}

std::vector<ThresholdSample> read_threshold_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return read_threshold_csv(in);
}

void write_threshold_csv(std::ostream& out, const std::vector<ThresholdSample>& samples) {
    out << "subject,eccentricity_deg,attention,contrast,repetition\n";
    for (const auto& s : samples)
        out << s.subject_id << ',' << format_double(s.eccentricity_deg) << ',' << to_string(s.attention) << ','
            << format_double(s.contrast) << ',' << s.repetition << '\n';
}

namespace {

template <typename Model>
void add_statistics(KeyValues& kv, const FitReport<Model>& r) {
    kv.set("r_squared", r.r_squared);
    kv.set("dof_adjusted_r_squared", r.adjusted_r_squared);
    kv.set("free_parameters", r.free_parameters);
    kv.set("fitted_points", r.fitted_points);
    kv.set("residual_sum_of_squares", r.residual_sum_of_squares);
}

} // namespace

KeyValues to_key_values(const FitReport<ThresholdModel>& report) {
    KeyValues kv;
    kv.set("model", std::string("per-condition"));
    kv.set("attention", std::string(to_string(report.parameters.attention)));
    kv.set("p0", report.parameters.p0);
    kv.set("p1", report.parameters.p1);
    add_statistics(kv, report);
    return kv;
}

KeyValues to_key_values(const FitReport<UnifiedModel>& report) {
    KeyValues kv;
    kv.set("model", std::string("unified"));
    kv.merge("", to_key_values(report.parameters));
    add_statistics(kv, report);
    return kv;
}

std::vector<ThresholdSample> reference_threshold_samples() {
    std::vector<ThresholdSample> out;
    for (const auto& cell : reference::threshold_means())
        out.push_back({cell.eccentricity_deg, cell.attention, cell.threshold, "mean", 0});
    return out;
}

} // namespace attncsf
