#include "attncsf/bandwidth.hpp"
#include "attncsf/csf_attention.hpp"
#include "attncsf/display.hpp"
#include "attncsf/foveation.hpp"
#include "attncsf/image_io.hpp"
#include "attncsf/model_fit.hpp"
#include "attncsf/quality.hpp"
#include "attncsf/quest.hpp"
#include "attncsf/reference_data.hpp"
#include "attncsf/scenes.hpp"
#include "attncsf/stimulus.hpp"
#include "attncsf/study.hpp"
#include "attncsf/study_http.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace attncsf;

namespace {

AttentionTag attention_arg(const std::string& s) {
    if (auto tag = parse_attention_tag(s)) return *tag;
    throw CLI::ValidationError("attention", "expected low, medium or high, got '" + s + "'");
}

ThresholdModelSet load_models(const std::string& path) {
    return path.empty() ? reference::threshold_models() : threshold_models_from(KeyValues::load(path));
}

struct DisplayOptions {
    std::string file;
    double ppd = 0.0;

    void add(CLI::App* cmd) {
        cmd->add_option("--display", file, "display settings (key = value file)");
        cmd->add_option("--ppd", ppd, "override pixels per degree");
    }

    /// Display geometry, resized to the given raster when it is non-zero.
    DisplayGeometry geometry(int width = 0, int height = 0) const {
        DisplayGeometry g = file.empty() ? DisplayGeometry::study_monitor()
                                         : display_geometry_from(KeyValues::load(file));
        if (width > 0 && height > 0) g = g.resized(width, height);
        if (ppd > 0.0) {
            const DisplayGeometry p = DisplayGeometry::with_ppd(ppd, g.width, g.height, g.viewing_distance_m);
            g.pixel_pitch_m = p.pixel_pitch_m;
            g.lens_magnification = p.lens_magnification;
        }
        g.validate();
        return g;
    }
};

LuminanceImage load_luminance(const std::string& path, const DisplayOptions& display, DisplayGeometry& geom) {
    const EncodedFrame frame = read_png(path);
    geom = display.geometry(frame.width, frame.height);
    return decode_display(frame, geom);
}

void save_luminance(const std::string& path, const LuminanceImage& img, const DisplayGeometry& geom) {
    write_png(path, encode_display(img, geom));
}

std::optional<Vector2> parse_gaze(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    if (v.size() != 2) throw CLI::ValidationError("gaze", "expected x,y");
    return Vector2(v[0], v[1]);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-aware contrast sensitivity and foveation toolkit"};
    app.require_subcommand(1);

    // gain ------------------------------------------------------------------------
    auto* gain = app.add_subcommand("gain", "threshold elevation g_a(e) relative to low attention");
    std::string gain_models, gain_attention = "medium";
    std::vector<double> gain_ecc{7.0, 14.0, 21.0};
    gain->add_option("--models", gain_models, "per-condition models (key = value); defaults to the published fits");
    gain->add_option("--attention", gain_attention)->capture_default_str();
    gain->add_option("--eccentricity,-e", gain_ecc, "eccentricities in degrees")->delimiter(',');
    gain->callback([&] {
        const auto models = load_models(gain_models);
        const auto tag = attention_arg(gain_attention);
        std::cout << "eccentricity_deg,attention,gain,extrapolated\n";
        for (double e : gain_ecc) {
            const auto g = attention_gain(models, tag, Eccentricity(e));
            std::cout << format_double(e) << ',' << to_string(tag) << ',' << format_double(g.value) << ','
                      << (g.extrapolated ? "yes" : "no") << '\n';
        }
    });

    // fit -------------------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "fit threshold models to a threshold table");
    std::string fit_input, fit_out, fit_weighting = "cell";
    bool fit_unified_flag = false;
    fit->add_option("--input,-i", fit_input, "CSV: subject,eccentricity_deg,attention,contrast,repetition; "
                                             "the published cell means when omitted");
    fit->add_option("--out,-o", fit_out, "write the report here as well");
    fit->add_flag("--unified", fit_unified_flag, "fit the continuous-attention model");
    fit->add_option("--weighting", fit_weighting, "cell (fit cell means) or sample")->check(CLI::IsMember({"cell", "sample"}));
    fit->callback([&] {
        const auto samples = fit_input.empty() ? reference_threshold_samples() : read_threshold_csv(fit_input);
        const FitWeighting w = fit_weighting == "cell" ? FitWeighting::cell_means : FitWeighting::per_sample;
        KeyValues report;
        if (fit_unified_flag) {
            UnifiedFitOptions options;
            options.weighting = w;
            report = to_key_values(fit_unified(samples, options));
        } else {
            for (AttentionTag tag : kAttentionTags)
                report.merge(std::string(to_string(tag)), to_key_values(fit_per_condition(samples, tag, w)));
        }
        report.write(std::cout);
        if (!fit_out.empty()) report.save(fit_out);
    });

    // stimulus --------------------------------------------------------------------
    auto* stimulus = app.add_subcommand("stimulus", "render study stimuli");
    stimulus->require_subcommand(1);
    DisplayOptions stim_display;

    auto* gabor = stimulus->add_subcommand("gabor", "Gabor pair as an 8-bit display frame");
    int gabor_stim = 3;
    double gabor_contrast = 0.05, gabor_mean = 28.0;
    std::vector<double> gabor_orient{45.0, 45.0};
    std::string gabor_out = "gabor.png";
    bool gabor_single = false;
    gabor->add_option("--stimulus", gabor_stim, "stimulus number 1-7")->capture_default_str();
    gabor->add_option("--contrast", gabor_contrast)->capture_default_str();
    gabor->add_option("--orientations", gabor_orient, "left,right carrier orientation in degrees")->delimiter(',');
    gabor->add_option("--mean", gabor_mean, "mean luminance cd/m^2")->capture_default_str();
    gabor->add_flag("--single", gabor_single, "only the left patch");
    gabor->add_option("--out,-o", gabor_out)->capture_default_str();
    stim_display.add(gabor);
    gabor->callback([&] {
        if (gabor_orient.size() != 2) throw CLI::ValidationError("orientations", "expected two values");
        const auto geom = stim_display.geometry();
        const auto& s = reference::study_stimulus(gabor_stim);
        const auto left = GaborSpec::from_study(s, gabor_contrast, gabor_orient[0], Side::left, gabor_mean);
        const auto right = GaborSpec::from_study(s, gabor_contrast, gabor_orient[1], Side::right, gabor_mean);
        const auto img = gabor_single ? gabor_image(left, geom) : gabor_pair_image(left, right, geom);
        save_luminance(gabor_out, img, geom);
        std::cout << "wrote " << gabor_out << " (" << geom.width << "x" << geom.height << ", "
                  << format_double(geom.pixels_per_degree()) << " ppd)\n";
    });

    auto* rsvp = stimulus->add_subcommand("rsvp", "RSVP letter schedule, optionally with frames");
    std::string rsvp_attention = "high", rsvp_dir;
    std::uint64_t rsvp_seed = 1;
    rsvp->add_option("--attention", rsvp_attention)->capture_default_str();
    rsvp->add_option("--seed", rsvp_seed)->capture_default_str();
    rsvp->add_option("--frames", rsvp_dir, "directory for one PNG per letter");
    stim_display.add(rsvp);
    rsvp->callback([&] {
        const auto spec = RsvpSpec::for_attention(attention_arg(rsvp_attention));
        const auto schedule = rsvp_sequence(spec, rsvp_seed);
        std::cout << "index,letter,color,onset_ms,offset_ms,target\n";
        for (std::size_t i = 0; i < schedule.items.size(); ++i) {
            const auto& item = schedule.items[i];
            std::cout << i << ',' << item.letter << ',' << to_string(item.color) << ',' << format_double(item.onset_ms)
                      << ',' << format_double(item.offset_ms) << ',' << (i == schedule.target_index ? 1 : 0) << '\n';
        }
        if (!rsvp_dir.empty()) {
            const auto geom = stim_display.geometry();
            std::filesystem::create_directories(rsvp_dir);
            for (std::size_t i = 0; i < schedule.items.size(); ++i) {
                const auto path = std::filesystem::path(rsvp_dir) / ("letter_" + std::to_string(i) + ".png");
                write_png(path.string(), encode_display(rsvp_frame(schedule.items[i], spec, geom), geom));
            }
        }
    });

    // scene -----------------------------------------------------------------------
    auto* scene = app.add_subcommand("scene", "write a procedural test scene");
    std::string scene_name = "tulips", scene_out = "scene.png";
    int scene_w = 512, scene_h = 256;
    DisplayOptions scene_display;
    scene->add_option("--name", scene_name)->check(CLI::IsMember(std::vector<std::string>(kSceneNames.begin(), kSceneNames.end())));
    scene->add_option("--width", scene_w)->capture_default_str();
    scene->add_option("--height", scene_h)->capture_default_str();
    scene->add_option("--out,-o", scene_out)->capture_default_str();
    scene_display.add(scene);
    scene->callback([&] {
        const auto geom = scene_display.geometry(scene_w, scene_h);
        save_luminance(scene_out, procedural_scene(scene_name, scene_w, scene_h), geom);
    });

    // foveate ---------------------------------------------------------------------
    auto* foveate = app.add_subcommand("foveate", "simulate peripheral resolution loss");
    std::string fov_in, fov_out = "foveated.png", fov_attention;
    double fov_slope = -1.0;
    std::vector<double> fov_gaze;
    DisplayOptions fov_display;
    foveate->add_option("--image,-i", fov_in)->required();
    foveate->add_option("--out,-o", fov_out)->capture_default_str();
    foveate->add_option("--slope,-m", fov_slope, "MAR slope (deg/deg)");
    foveate->add_option("--attention", fov_attention, "use the mean measured slope of this condition");
    foveate->add_option("--gaze", fov_gaze, "gaze pixel x,y (default: display center)")->delimiter(',');
    fov_display.add(foveate);
    foveate->callback([&] {
        DisplayGeometry geom;
        const auto img = load_luminance(fov_in, fov_display, geom);
        double slope = fov_slope;
        if (!fov_attention.empty()) slope = reference::kMeanSlopes[index_of(attention_arg(fov_attention))];
        if (slope < 0.0) throw CLI::ValidationError("slope", "give --slope or --attention");
        auto cfg = FoveationConfig::for_display(geom);
        if (auto g = parse_gaze(fov_gaze)) cfg.gaze = *g;
        save_luminance(fov_out, foveate_image(img, geom, MarModel{slope}, cfg), geom);
        std::cout << "slope " << format_double(slope) << ", omega_s " << format_double(cfg.omega_s) << " deg\n";
    });

    // predict ---------------------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "predicted quality (JOD) of a test image");
    std::string pred_ref, pred_test, pred_attention = "low";
    DisplayOptions pred_display;
    predict->add_option("--ref", pred_ref)->required();
    predict->add_option("--test", pred_test)->required();
    predict->add_option("--attention", pred_attention, "low, medium, high or none")->capture_default_str();
    pred_display.add(predict);
    predict->callback([&] {
        DisplayGeometry geom, geom_test;
        const auto ref = load_luminance(pred_ref, pred_display, geom);
        const auto test = load_luminance(pred_test, pred_display, geom_test);
        std::optional<AttentionTag> tag;
        if (pred_attention != "none") tag = attention_arg(pred_attention);
        std::cout << "jod = " << format_double(predict_quality(ref, test, geom, PredictorConfig::study_default(tag)).jod)
                  << '\n';
    });

    // optimize-slope --------------------------------------------------------------
    auto* optimize = app.add_subcommand("optimize-slope", "largest MAR slope keeping quality >= qthr");
    std::string opt_image, opt_attention = "low";
    double opt_qthr = 9.0;
    std::vector<double> opt_bracket{0.0, 0.5};
    DisplayOptions opt_display;
    optimize->add_option("--image,-i", opt_image)->required();
    optimize->add_option("--attention", opt_attention)->capture_default_str();
    optimize->add_option("--qthr", opt_qthr, "quality threshold (JOD)")->required();
    optimize->add_option("--bracket", opt_bracket, "lo,hi slope bracket")->delimiter(',');
    opt_display.add(optimize);
    optimize->callback([&] {
        if (opt_bracket.size() != 2) throw CLI::ValidationError("bracket", "expected lo,hi");
        DisplayGeometry geom;
        const auto img = load_luminance(opt_image, opt_display, geom);
        auto options = slope_search_options_for(geom);
        options.slope_min = opt_bracket[0];
        options.slope_max = opt_bracket[1];
        const auto result = optimize_mar_slope(img, geom, PredictorConfig::study_default(attention_arg(opt_attention)),
                                               {opt_qthr}, options);
        std::cout << "slope = " << format_double(result.slope) << "\n\nslope,jod\n";
        for (const auto& p : result.trace) std::cout << format_double(p.slope) << ',' << format_double(p.jod) << '\n';
    });

    // bandwidth -------------------------------------------------------------------
    auto* bandwidth = app.add_subcommand("bandwidth", "computational gain sweep over square fields of view");
    double bw_fov_min = 10.0, bw_fov_max = 180.0, bw_fov_step = 10.0;
    std::vector<double> bw_ppd{20.0, 60.0};
    std::vector<std::string> bw_slopes{"low", "medium", "high"};
    std::string bw_out;
    bandwidth->add_option("--fov-min", bw_fov_min)->capture_default_str();
    bandwidth->add_option("--fov-max", bw_fov_max)->capture_default_str();
    bandwidth->add_option("--fov-step", bw_fov_step)->capture_default_str();
    bandwidth->add_option("--ppd", bw_ppd)->delimiter(',');
    bandwidth->add_option("--slopes", bw_slopes, "attention names or numeric slopes")->delimiter(',');
    bandwidth->add_option("--out,-o", bw_out, "CSV file (stdout when omitted)");
    bandwidth->callback([&] {
        if (!(bw_fov_step > 0.0) || bw_fov_max < bw_fov_min) throw CLI::ValidationError("fov", "invalid sweep range");
        std::vector<double> fovs;
        for (double f = bw_fov_min; f <= bw_fov_max + 1e-9; f += bw_fov_step) fovs.push_back(f);
        std::vector<SweepModel> models;
        for (const auto& s : bw_slopes) {
            if (auto tag = parse_attention_tag(s)) models.push_back({s, reference::mean_mar_model(*tag)});
            else models.push_back({s, MarModel{std::stod(s)}});
        }
        const auto rows = gain_sweep(fovs, bw_ppd, models);
        if (bw_out.empty()) {
            write_sweep_csv(std::cout, rows);
        } else {
            std::ofstream out(bw_out);
            write_sweep_csv(out, rows);
        }
    });

    // simulate-staircase ----------------------------------------------------------
    auto* simulate = app.add_subcommand("simulate-staircase", "QUEST run against a simulated observer");
    double sim_threshold = 0.09;
    std::uint64_t sim_seed = 1;
    int sim_trials = 40;
    double sim_sd_stop = 0.08;
    simulate->add_option("--true-threshold", sim_threshold)->capture_default_str();
    simulate->add_option("--sd-stop", sim_sd_stop, "stop once the posterior sd (log10) is below this; 0 disables")
        ->capture_default_str();
    simulate->add_option("--seed", sim_seed)->capture_default_str();
    simulate->add_option("--trials", sim_trials)->capture_default_str();
    simulate->callback([&] {
        QuestConfig cfg;
        cfg.max_trials = sim_trials;
        if (sim_sd_stop > 0.0) cfg.sd_stop = sim_sd_stop;
        else cfg.sd_stop.reset();
        SimulatedObserver observer(sim_threshold, cfg.psychometric, sim_seed);
        const auto run = run_staircase(cfg, observer);
        std::cout << "trial,intensity,correct\n";
        for (std::size_t i = 0; i < run.trials.size(); ++i)
            std::cout << i + 1 << ',' << format_double(run.trials[i].intensity) << ',' << run.trials[i].correct << '\n';
        std::cout << "\nestimate = " << format_double(run.estimate.threshold)
                  << "\nlog10_sd = " << format_double(run.estimate.log_sd)
                  << "\nlog10_error = " << format_double(run.estimate.log_mean - std::log10(sim_threshold)) << '\n';
    });

    // serve -----------------------------------------------------------------------
    auto* serve = app.add_subcommand("serve", "run the study HTTP service");
    std::string srv_host = "127.0.0.1", srv_config, srv_data;
    int srv_port = 8080;
    serve->add_option("--host", srv_host)->capture_default_str();
    serve->add_option("--port", srv_port)->capture_default_str();
    serve->add_option("--config", srv_config, "study settings (key = value file)");
    serve->add_option("--data-dir", srv_data, "session logs (default: $ATTNCSF_DATA_DIR or ./study-data)");
    serve->callback([&] {
        const StudyConfig cfg = srv_config.empty() ? StudyConfig{} : study_config_from(KeyValues::load(srv_config));
        StudyService service(srv_data.empty() ? StudyService::default_data_dir() : std::filesystem::path(srv_data), cfg,
                             std::make_shared<SystemClock>());
        std::cout << "serving on http://" << srv_host << ":" << srv_port << std::endl;
        serve_study(service, srv_host, srv_port);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
