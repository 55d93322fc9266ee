#include "attncsf/study.hpp"

#include "attncsf/foveation.hpp"
#include "attncsf/image_io.hpp"
#include "attncsf/reference_data.hpp"
#include "attncsf/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <unistd.h>

namespace attncsf {

std::string_view to_string(StudyKind kind) { return kind == StudyKind::csf ? "csf" : "foveation"; }

std::optional<StudyKind> parse_study_kind(std::string_view s) {
    if (s == "csf") return StudyKind::csf;
    if (s == "foveation") return StudyKind::foveation;
    return std::nullopt;
}

std::string_view to_string(Phase phase) {
    switch (phase) {
    case Phase::fixation: return "fixation";
    case Phase::stimulus: return "stimulus";
    case Phase::mask: return "mask";
    case Phase::response: return "response";
    case Phase::done: return "done";
    }
    return "done";
}

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
    case Outcome::accepted: return "accepted";
    case Outcome::replay: return "replay";
    case Outcome::restart_step: return "restart_step";
    }
    return "accepted";
}

std::int64_t SystemClock::now_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Configuration -------------------------------------------------------------------

QuestConfig default_foveation_quest() {
    QuestConfig q;
    q.prior_mean = std::log10(0.03);
    q.min_intensity = 1e-3;
    return q;
}

void StudyConfig::validate() const {
    display.validate();
    if (stimuli.empty()) throw DomainError("csf study needs at least one stimulus");
    for (int s : stimuli) reference::study_stimulus(s);
    if (csf_repetitions < 1 || foveation_repetitions < 1) throw DomainError("repetitions must be >= 1");
    for (const auto& img : images)
        if (!is_scene_name(img)) throw DomainError("unknown image '" + img + "'");
    if (images_per_subject < 1 || images_per_subject > static_cast<int>(images.size()))
        throw DomainError("images_per_subject must lie in [1, number of images]");
    if (foveation_width < 0 || foveation_height < 0) throw DomainError("foveation raster must be >= 0");
    if (timing.response_ms <= 0 || timing.grace_ms < 0) throw DomainError("invalid response window");
    csf_quest.validate();
    foveation_quest.validate();
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << items[i];
    return out.str();
}

QuestConfig quest_from(const KeyValues& kv, QuestConfig q) {
    q.psychometric.beta = kv.get_double("beta", q.psychometric.beta);
    q.psychometric.guess = kv.get_double("guess", q.psychometric.guess);
    q.psychometric.lapse = kv.get_double("lapse", q.psychometric.lapse);
    q.prior_mean = kv.get_double("prior_mean", q.prior_mean);
    q.prior_sd = kv.get_double("prior_sd", q.prior_sd);
    q.grid_min = kv.get_double("grid_min", q.grid_min);
    q.grid_max = kv.get_double("grid_max", q.grid_max);
    q.grid_step = kv.get_double("grid_step", q.grid_step);
    q.max_trials = static_cast<int>(kv.get_int("max_trials", q.max_trials));
    q.min_intensity = kv.get_double("min_intensity", q.min_intensity);
    if (kv.contains("sd_stop")) {
        if (kv.get_string("sd_stop") == "none") q.sd_stop.reset();
        else q.sd_stop = kv.get_double("sd_stop");
    }
    return q;
}

KeyValues quest_kv(const QuestConfig& q) {
    KeyValues kv;
    kv.set("beta", q.psychometric.beta);
    kv.set("guess", q.psychometric.guess);
    kv.set("lapse", q.psychometric.lapse);
    kv.set("prior_mean", q.prior_mean);
    kv.set("prior_sd", q.prior_sd);
    kv.set("grid_min", q.grid_min);
    kv.set("grid_max", q.grid_max);
    kv.set("grid_step", q.grid_step);
    kv.set("max_trials", q.max_trials);
    kv.set("min_intensity", q.min_intensity);
    if (q.sd_stop) kv.set("sd_stop", *q.sd_stop);
    else kv.set("sd_stop", std::string("none"));
    return kv;
}

} // namespace

StudyConfig study_config_from(const KeyValues& kv) {
    StudyConfig cfg;
    cfg.display = display_geometry_from(kv.section("display"), cfg.display);
    const auto timing = kv.section("timing");
    cfg.timing.fixation_ms = static_cast<int>(timing.get_int("fixation_ms", cfg.timing.fixation_ms));
    cfg.timing.stimulus_ms = static_cast<int>(timing.get_int("stimulus_ms", cfg.timing.stimulus_ms));
    cfg.timing.mask_ms = static_cast<int>(timing.get_int("mask_ms", cfg.timing.mask_ms));
    cfg.timing.response_ms = static_cast<int>(timing.get_int("response_ms", cfg.timing.response_ms));
    cfg.timing.grace_ms = static_cast<int>(timing.get_int("grace_ms", cfg.timing.grace_ms));
    if (kv.contains("csf.stimuli")) {
        cfg.stimuli.clear();
        for (const auto& s : split_list(kv.get_string("csf.stimuli"))) {
            try {
                cfg.stimuli.push_back(std::stoi(s));
            } catch (const std::exception&) {
                throw ParseError("csf.stimuli: '" + s + "' is not a stimulus number");
            }
        }
    }
    cfg.csf_repetitions = static_cast<int>(kv.get_int("csf.repetitions", cfg.csf_repetitions));
    cfg.csf_quest = quest_from(kv.section("csf.quest"), cfg.csf_quest);
    if (kv.contains("foveation.images")) cfg.images = split_list(kv.get_string("foveation.images"));
    cfg.images_per_subject = static_cast<int>(kv.get_int("foveation.images_per_subject", cfg.images_per_subject));
    cfg.foveation_repetitions = static_cast<int>(kv.get_int("foveation.repetitions", cfg.foveation_repetitions));
    cfg.foveation_quest = quest_from(kv.section("foveation.quest"), cfg.foveation_quest);
    cfg.foveation_width = static_cast<int>(kv.get_int("foveation.width", cfg.foveation_width));
    cfg.foveation_height = static_cast<int>(kv.get_int("foveation.height", cfg.foveation_height));
    cfg.validate();
    return cfg;
}

KeyValues to_key_values(const StudyConfig& cfg) {
    KeyValues kv;
    kv.merge("display", to_key_values(cfg.display));
    kv.set("timing.fixation_ms", cfg.timing.fixation_ms);
    kv.set("timing.stimulus_ms", cfg.timing.stimulus_ms);
    kv.set("timing.mask_ms", cfg.timing.mask_ms);
    kv.set("timing.response_ms", cfg.timing.response_ms);
    kv.set("timing.grace_ms", cfg.timing.grace_ms);
    kv.set("csf.stimuli", join(cfg.stimuli));
    kv.set("csf.repetitions", cfg.csf_repetitions);
    kv.merge("csf.quest", quest_kv(cfg.csf_quest));
    kv.set("foveation.images", join(cfg.images));
    kv.set("foveation.images_per_subject", cfg.images_per_subject);
    kv.set("foveation.repetitions", cfg.foveation_repetitions);
    kv.merge("foveation.quest", quest_kv(cfg.foveation_quest));
    kv.set("foveation.width", cfg.foveation_width);
    kv.set("foveation.height", cfg.foveation_height);
    return kv;
}

// Plans ---------------------------------------------------------------------------

std::uint64_t subject_seed(const std::string& subject_id) {
    std::uint64_t h = 14695981039346656037ull; // FNV-1a
    for (unsigned char c : subject_id) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<ConditionStep> build_plan(StudyKind kind, const StudyConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> conditions;
    int repetitions = 0;
    if (kind == StudyKind::csf) {
        for (int s : cfg.stimuli) conditions.push_back(std::to_string(s));
        repetitions = cfg.csf_repetitions;
    } else {
        conditions = cfg.images;
        std::shuffle(conditions.begin(), conditions.end(), rng);
        conditions.resize(static_cast<std::size_t>(cfg.images_per_subject));
        repetitions = cfg.foveation_repetitions;
    }
    std::vector<ConditionStep> plan;
    for (int rep = 1; rep <= repetitions; ++rep) {
        std::vector<std::string> order = conditions;
        std::shuffle(order.begin(), order.end(), rng);
        for (const auto& c : order)
            for (AttentionTag a : kAttentionTags) plan.push_back({c, a, rep});
    }
    return plan;
}

// Trials --------------------------------------------------------------------------

std::string TrialDescriptor::afc_correct(StudyKind kind) const {
    if (kind == StudyKind::csf) return orientations_deg[0] == orientations_deg[1] ? "same" : "different";
    return degraded_side == Side::left ? "left" : "right";
}

nlohmann::json to_json(const TrialDescriptor& t, StudyKind kind, const TrialTiming& timing) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : t.rsvp.items)
        items.push_back({{"letter", std::string(1, item.letter)},
                         {"color", to_string(item.color)},
                         {"onset_ms", item.onset_ms},
                         {"offset_ms", item.offset_ms}});
    nlohmann::json j = {
        {"trial_id", t.trial_id},
        {"step", t.step},
        {"issued_at_ms", t.issued_at_ms},
        {"kind", to_string(kind)},
        {"intensity", t.intensity},
        {"timing",
         {{"fixation_ms", timing.fixation_ms},
          {"stimulus_ms", timing.stimulus_ms},
          {"mask_ms", timing.mask_ms},
          {"response_ms", timing.response_ms}}},
        {"rsvp",
         {{"n_letters", t.rsvp_spec.n_letters},
          {"duration_ms", t.rsvp_spec.duration_ms},
          {"letter_size_deg", t.rsvp_spec.letter_size_deg},
          {"target", std::string(1, t.rsvp_spec.target)},
          {"exclude_first_third", t.rsvp_spec.exclude_first_third},
          {"target_index", t.rsvp.target_index},
          {"items", items}}},
        {"asset_url", "/assets/trials/" + t.trial_id + ".png"},
    };
    if (kind == StudyKind::csf) {
        j["stimulus"] = {{"type", "gabor_pair"}, {"contrast", t.intensity}, {"orientations_deg", t.orientations_deg}};
    } else {
        j["stimulus"] = {{"type", "split_screen"},
                         {"slope", t.intensity},
                         {"degraded_side", t.degraded_side == Side::left ? "left" : "right"}};
    }
    return j;
}

TrialDescriptor trial_from_json(const nlohmann::json& j) {
    TrialDescriptor t;
    t.trial_id = j.at("trial_id").get<std::string>();
    t.step = j.at("step").get<std::size_t>();
    t.issued_at_ms = j.at("issued_at_ms").get<std::int64_t>();
    t.intensity = j.at("intensity").get<double>();
    const auto& r = j.at("rsvp");
    t.rsvp_spec.n_letters = r.at("n_letters").get<int>();
    t.rsvp_spec.duration_ms = r.at("duration_ms").get<double>();
    t.rsvp_spec.letter_size_deg = r.at("letter_size_deg").get<double>();
    t.rsvp_spec.target = r.at("target").get<std::string>().at(0);
    t.rsvp_spec.exclude_first_third = r.at("exclude_first_third").get<bool>();
    t.rsvp.target_index = r.at("target_index").get<std::size_t>();
    for (const auto& item : r.at("items")) {
        const auto color = parse_letter_color(item.at("color").get<std::string>());
        if (!color) throw ParseError("unknown letter color");
        t.rsvp.items.push_back({item.at("letter").get<std::string>().at(0), *color, item.at("onset_ms").get<double>(),
                                item.at("offset_ms").get<double>()});
    }
    const auto& s = j.at("stimulus");
    if (s.contains("orientations_deg")) t.orientations_deg = s.at("orientations_deg").get<std::array<double, 2>>();
    if (s.contains("degraded_side")) t.degraded_side = s.at("degraded_side") == "left" ? Side::left : Side::right;
    return t;
}

ResponseSubmission response_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("response must be a JSON object");
    ResponseSubmission r;
    r.trial_id = j.at("trial_id").get<std::string>();
    const auto opt_string = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return j[key].get<std::string>();
    };
    const auto opt_double = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return j[key].get<double>();
    };
    r.rsvp_answer = opt_string("rsvp_answer");
    r.afc_answer = opt_string("afc_answer");
    r.rsvp_latency_ms = opt_double("rsvp_latency_ms");
    r.afc_latency_ms = opt_double("afc_latency_ms");
    if (j.contains("fixation_ok") && !j["fixation_ok"].is_null()) r.fixation_ok = j["fixation_ok"].get<bool>();
    return r;
}

nlohmann::json to_json(const ResponseSubmission& r) {
    const auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"trial_id", r.trial_id},
            {"rsvp_answer", opt(r.rsvp_answer)},
            {"afc_answer", opt(r.afc_answer)},
            {"rsvp_latency_ms", opt(r.rsvp_latency_ms)},
            {"afc_latency_ms", opt(r.afc_latency_ms)},
            {"fixation_ok", opt(r.fixation_ok)}};
}

nlohmann::json to_json(const ResponseResult& r) {
    return {{"outcome", to_string(r.outcome)},
            {"rsvp_correct", r.rsvp_correct},
            {"afc_correct", r.afc_correct},
            {"timed_out", r.timed_out},
            {"duplicate", r.duplicate}};
}

// Session -------------------------------------------------------------------------

Session::Session(std::string session_id, std::string subject_id, StudyKind kind, StudyConfig config,
                 std::uint64_t seed)
    : id_(std::move(session_id)), subject_(std::move(subject_id)), kind_(kind), config_(std::move(config)),
      seed_(seed) {
    if (subject_.empty()) throw DomainError("subject id must not be empty");
    if (id_.empty() || id_.find_first_of("./\\") != std::string::npos)
        throw DomainError("session id must be non-empty and contain no '.', '/' or '\\'");
    config_.validate();
    plan_ = build_plan(kind_, config_, seed_);
    start_step();
}

void Session::start_step() {
    carried_intensity_.reset();
    if (done()) {
        staircase_.reset();
        return;
    }
    staircase_ = make_staircase(kind_ == StudyKind::csf ? config_.csf_quest : config_.foveation_quest);
}

const StaircaseState& Session::staircase() const {
    if (!staircase_) throw SessionDoneError("session is complete");
    return *staircase_;
}

double Session::pending_intensity() const {
    if (carried_intensity_) return *carried_intensity_;
    return next_intensity(staircase());
}

Phase Session::phase(std::int64_t now_ms) const {
    if (done()) return Phase::done;
    if (!active_) return Phase::fixation;
    const auto& t = config_.timing;
    const std::int64_t dt = now_ms - active_->issued_at_ms;
    if (dt < t.fixation_ms) return Phase::fixation;
    if (dt < t.fixation_ms + t.stimulus_ms) return Phase::stimulus;
    if (dt < t.response_opens_ms()) return Phase::mask;
    return Phase::response;
}

TrialDescriptor Session::prepare_trial(std::int64_t now_ms) const {
    if (done()) throw SessionDoneError("session is complete");
    std::seed_seq seq{seed_, trial_counter_};
    std::mt19937_64 rng(seq);
    const ConditionStep& step = plan_[step_];

    TrialDescriptor t;
    t.trial_id = id_ + "." + std::to_string(trial_counter_);
    t.step = step_;
    t.issued_at_ms = now_ms;
    t.intensity = pending_intensity();
    t.rsvp_spec = RsvpSpec::for_attention(step.attention);
    t.rsvp = rsvp_sequence(t.rsvp_spec, rng());
    std::bernoulli_distribution coin(0.5);
    if (kind_ == StudyKind::csf) {
        t.orientations_deg = {coin(rng) ? 45.0 : 135.0, coin(rng) ? 45.0 : 135.0};
    } else {
        t.degraded_side = coin(rng) ? Side::left : Side::right;
    }
    return t;
}

void Session::issue(const TrialDescriptor& trial) {
    if (done()) throw SessionDoneError("session is complete");
    if (trial.step != step_) throw StaleTrialError("trial belongs to another step");
    active_ = trial;
    issued_[trial.trial_id] = trial;
    ++trial_counter_;
}

std::optional<ResponseResult> Session::answered(const std::string& trial_id) const {
    auto it = answered_.find(trial_id);
    if (it == answered_.end()) return std::nullopt;
    return it->second;
}

const TrialDescriptor* Session::issued(const std::string& trial_id) const {
    auto it = issued_.find(trial_id);
    return it == issued_.end() ? nullptr : &it->second;
}

ResponseResult Session::evaluate(const ResponseSubmission& response, std::int64_t received_at_ms) const {
    if (auto previous = answered(response.trial_id)) {
        previous->duplicate = true;
        return *previous;
    }
    if (!active_ || active_->trial_id != response.trial_id)
        throw StaleTrialError("trial '" + response.trial_id + "' is not the active trial");
    const auto& t = config_.timing;
    ResponseResult r;
    const std::int64_t deadline = active_->issued_at_ms + t.response_opens_ms() + t.response_ms + t.grace_ms;
    r.timed_out = !response.afc_answer || received_at_ms > deadline;
    if (response.rsvp_answer) {
        const auto color = parse_letter_color(*response.rsvp_answer);
        r.rsvp_correct = color && *color == active_->rsvp.target_color();
    }
    r.afc_correct = response.afc_answer && *response.afc_answer == active_->afc_correct(kind_);
    if (r.timed_out) r.outcome = Outcome::replay;
    else if (kind_ == StudyKind::foveation && !r.rsvp_correct) r.outcome = Outcome::restart_step;
    else r.outcome = Outcome::accepted;
    return r;
}

void Session::record(const ResponseSubmission& response, const ResponseResult& result) {
    if (result.duplicate) return;
    if (!active_ || active_->trial_id != response.trial_id) throw StaleTrialError("no such active trial");
    answered_[response.trial_id] = result;
    if (result.outcome == Outcome::accepted) {
        apply(*staircase_, active_->intensity, result.afc_correct);
        carried_intensity_.reset();
        if (is_done(*staircase_)) {
            completed_.push_back({plan_[step_], estimate(*staircase_), static_cast<int>(staircase_->history.size())});
            ++step_;
            start_step();
        }
    } else {
        carried_intensity_ = active_->intensity;
    }
    active_.reset();
}

std::vector<ThresholdSample> Session::export_thresholds() const {
    std::map<std::pair<std::string, AttentionTag>, std::vector<double>> groups;
    std::vector<std::pair<std::string, AttentionTag>> order;
    for (const auto& c : completed_) {
        const auto key = std::make_pair(c.step.condition, c.step.attention);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(c.estimate.log_mean);
    }
    std::vector<ThresholdSample> out;
    for (const auto& key : order) {
        const auto& logs = groups[key];
        double sum = 0.0;
        for (double v : logs) sum += v;
        ThresholdSample s;
        s.subject_id = subject_;
        s.attention = key.second;
        s.contrast = std::pow(10.0, sum / static_cast<double>(logs.size()));
        s.repetition = 0;
        s.eccentricity_deg = kind_ == StudyKind::csf ? reference::study_stimulus(std::stoi(key.first)).eccentricity_deg
                                                     : std::nan("");
        out.push_back(s);
    }
    return out;
}

nlohmann::json Session::summary(std::int64_t now_ms) const {
    nlohmann::json plan = nlohmann::json::array();
    for (const auto& s : plan_)
        plan.push_back({{"condition", s.condition}, {"attention", to_string(s.attention)}, {"repetition", s.repetition}});
    nlohmann::json j = {{"session_id", id_},
                        {"subject_id", subject_},
                        {"kind", to_string(kind_)},
                        {"seed", seed_},
                        {"plan", plan},
                        {"current_step", step_},
                        {"completed_staircases", completed_.size()},
                        {"done", done()},
                        {"phase", to_string(phase(now_ms))}};
    if (!done()) {
        j["trials_in_step"] = staircase_->history.size();
        j["active_trial"] = active_ ? nlohmann::json(active_->trial_id) : nlohmann::json(nullptr);
    }
    return j;
}

void write_results_csv(std::ostream& out, const Session& session) {
    const auto rows = session.export_thresholds();
    if (session.kind() == StudyKind::csf) {
        write_threshold_csv(out, rows);
        return;
    }
    out << "subject,image,attention,slope,repetition\n";
    std::size_t i = 0;
    std::vector<std::string> seen;
    for (const auto& c : session.completed())
        if (std::find(seen.begin(), seen.end(), c.step.condition + to_string(c.step.attention).data()) == seen.end()) {
            seen.push_back(c.step.condition + to_string(c.step.attention).data());
            const auto& r = rows.at(i++);
            out << r.subject_id << ',' << c.step.condition << ',' << to_string(r.attention) << ','
                << format_double(r.contrast) << ",0\n";
        }
}

LuminanceImage render_trial(const Session& session, const TrialDescriptor& trial) {
    const StudyConfig& cfg = session.config();
    const ConditionStep& step = session.plan().at(trial.step);
    if (session.kind() == StudyKind::csf) {
        const auto& stim = reference::study_stimulus(std::stoi(step.condition));
        const double mean = cfg.display.background_luminance;
        const double max_contrast =
            std::min((mean - cfg.display.luminance_min) / mean, (cfg.display.luminance_max - mean) / mean);
        const double contrast = std::min(trial.intensity, max_contrast);
        const auto left = GaborSpec::from_study(stim, contrast, trial.orientations_deg[0], Side::left, mean);
        const auto right = GaborSpec::from_study(stim, contrast, trial.orientations_deg[1], Side::right, mean);
        return gabor_pair_image(left, right, cfg.display);
    }
    DisplayGeometry geom = cfg.display;
    if (cfg.foveation_width > 0 && cfg.foveation_height > 0)
        geom = geom.resized(cfg.foveation_width, cfg.foveation_height);
    const auto scene = procedural_scene(step.condition, geom.width, geom.height);
    const auto degraded = foveate_image(scene, geom, MarModel{trial.intensity}, FoveationConfig::for_display(geom));
    return trial.degraded_side == Side::left ? compose_split_screen(degraded, scene, geom)
                                             : compose_split_screen(scene, degraded, geom);
}

// Service -------------------------------------------------------------------------

StudyService::StudyService(std::filesystem::path data_dir, StudyConfig config, std::shared_ptr<const Clock> clock)
    : data_dir_(std::move(data_dir)), config_(std::move(config)), clock_(std::move(clock)) {
    config_.validate();
    if (!clock_) clock_ = std::make_shared<SystemClock>();
    std::filesystem::create_directories(data_dir_);
}

std::filesystem::path StudyService::default_data_dir() {
    if (const char* env = std::getenv("ATTNCSF_DATA_DIR"); env && *env) return env;
    return "study-data";
}

std::filesystem::path StudyService::log_path(const std::string& session_id) const {
    return data_dir_ / (session_id + ".jsonl");
}

void StudyService::append(const std::string& session_id, const nlohmann::json& event) {
    const std::string line = event.dump() + "\n";
    std::FILE* f = std::fopen(log_path(session_id).c_str(), "ab");
    if (!f) throw std::runtime_error("cannot open session log for '" + session_id + "'");
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                    ::fsync(fileno(f)) == 0;
    std::fclose(f);
    if (!ok) throw std::runtime_error("failed to append to session log for '" + session_id + "'");
}

namespace {

std::string random_session_id() {
    std::random_device rd;
    const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

nlohmann::json StudyService::create_session(const CreateRequest& request) {
    const std::string id = request.session_id.value_or(random_session_id());
    const std::uint64_t seed = request.seed.value_or(subject_seed(request.subject_id));
    auto entry = std::make_shared<Entry>();
    entry->session = std::make_unique<Session>(id, request.subject_id, request.kind, config_, seed);
    {
        std::lock_guard lock(mutex_);
        if (sessions_.count(id) || std::filesystem::exists(log_path(id)))
            throw StaleTrialError("session '" + id + "' already exists");
        append(id, {{"event", "created"},
                    {"session_id", id},
                    {"subject_id", request.subject_id},
                    {"kind", to_string(request.kind)},
                    {"seed", seed},
                    {"config", to_key_values(config_).str()},
                    {"at_ms", clock_->now_ms()}});
        sessions_[id] = entry;
    }
    return entry->session->summary(clock_->now_ms());
}

std::shared_ptr<StudyService::Entry> StudyService::find(const std::string& session_id) {
    std::lock_guard lock(mutex_);
    if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second;
    if (session_id.empty() || session_id.find_first_of("./\\") != std::string::npos)
        throw NotFoundError("no session '" + session_id + "'");
    const auto path = log_path(session_id);
    if (!std::filesystem::exists(path)) throw NotFoundError("no session '" + session_id + "'");
    // Drop a partially written final event so later appends start on a fresh line.
    {
        std::ifstream in(path, std::ios::binary);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!text.empty() && text.back() != '\n') std::filesystem::resize_file(path, text.rfind('\n') + 1);
    }
    auto entry = std::make_shared<Entry>();
    entry->session = replay_log(path);
    sessions_[session_id] = entry;
    return entry;
}

nlohmann::json StudyService::next_trial(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    Session& s = *entry->session;
    if (s.done()) throw SessionDoneError("session is complete");
    if (!s.active_trial()) {
        const TrialDescriptor t = s.prepare_trial(clock_->now_ms());
        append(session_id, {{"event", "trial_issued"}, {"trial", to_json(t, s.kind(), s.config().timing)}});
        s.issue(t);
    }
    return to_json(*s.active_trial(), s.kind(), s.config().timing);
}

nlohmann::json StudyService::submit_response(const std::string& session_id, const ResponseSubmission& response) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    Session& s = *entry->session;
    const std::int64_t now = clock_->now_ms();
    const ResponseResult result = s.evaluate(response, now);
    if (!result.duplicate) {
        append(session_id, {{"event", "response"},
                            {"response", to_json(response)},
                            {"received_at_ms", now},
                            {"result", to_json(result)}});
        s.record(response, result);
    }
    nlohmann::json j = to_json(result);
    j["trial_id"] = response.trial_id;
    j["session_done"] = s.done();
    j["current_step"] = s.current_step();
    return j;
}

nlohmann::json StudyService::session_summary(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    return entry->session->summary(clock_->now_ms());
}

std::vector<ThresholdSample> StudyService::export_results(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    return entry->session->export_thresholds();
}

std::string StudyService::results_csv(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    std::ostringstream out;
    write_results_csv(out, *entry->session);
    return out.str();
}

nlohmann::json StudyService::results_json(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    const Session& s = *entry->session;
    nlohmann::json staircases = nlohmann::json::array();
    for (const auto& c : s.completed())
        staircases.push_back({{"condition", c.step.condition},
                              {"attention", to_string(c.step.attention)},
                              {"repetition", c.step.repetition},
                              {"threshold", c.estimate.threshold},
                              {"log_mean", c.estimate.log_mean},
                              {"log_sd", c.estimate.log_sd},
                              {"trials", c.trials}});
    nlohmann::json aggregate = nlohmann::json::array();
    const auto rows = s.export_thresholds();
    for (const auto& r : rows) {
        nlohmann::json row = {{"attention", to_string(r.attention)}, {"value", r.contrast}};
        if (s.kind() == StudyKind::csf) row["eccentricity_deg"] = r.eccentricity_deg;
        aggregate.push_back(row);
    }
    return {{"session_id", s.id()},
            {"subject_id", s.subject()},
            {"kind", to_string(s.kind())},
            {"done", s.done()},
            {"staircases", staircases},
            {"aggregate", aggregate}};
}

std::optional<StaircaseState> StudyService::staircase_state(const std::string& session_id) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    if (entry->session->done()) return std::nullopt;
    return entry->session->staircase();
}

std::vector<std::uint8_t> StudyService::trial_asset(const std::string& trial_id) {
    const auto dot = trial_id.rfind('.');
    if (dot == std::string::npos) throw NotFoundError("no trial '" + trial_id + "'");
    auto entry = find(trial_id.substr(0, dot));
    LuminanceImage img;
    DisplayGeometry geom;
    {
        std::lock_guard lock(entry->mutex);
        const Session& s = *entry->session;
        const TrialDescriptor* t = s.issued(trial_id);
        if (!t) throw NotFoundError("no trial '" + trial_id + "'");
        img = render_trial(s, *t);
        geom = s.config().display;
    }
    geom.width = static_cast<int>(img.cols());
    geom.height = static_cast<int>(img.rows());
    return encode_png(encode_display(img, geom));
}

std::unique_ptr<Session> StudyService::replay_log(const std::filesystem::path& path,
                                                  std::optional<std::size_t> max_events) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open '" + path.string() + "'");
    std::unique_ptr<Session> session;
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        if (max_events && count >= *max_events) break;
        if (line.empty()) continue;
        nlohmann::json ev;
        try {
            ev = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            if (in.peek() == std::char_traits<char>::eof()) break; // torn final write
            throw ParseError("corrupt event in '" + path.string() + "'");
        }
        ++count;
        const std::string type = ev.at("event").get<std::string>();
        if (type == "created") {
            const auto kind = parse_study_kind(ev.at("kind").get<std::string>());
            if (!kind) throw ParseError("unknown study kind in log");
            session = std::make_unique<Session>(ev.at("session_id").get<std::string>(),
                                                ev.at("subject_id").get<std::string>(), *kind,
                                                study_config_from(KeyValues::parse(ev.at("config").get<std::string>())),
                                                ev.at("seed").get<std::uint64_t>());
        } else if (!session) {
            throw ParseError("event log does not start with a creation event");
        } else if (type == "trial_issued") {
            session->issue(trial_from_json(ev.at("trial")));
        } else if (type == "response") {
            const auto response = response_from_json(ev.at("response"));
            session->record(response, session->evaluate(response, ev.at("received_at_ms").get<std::int64_t>()));
        } else {
            throw ParseError("unknown event type '" + type + "'");
        }
    }
    if (!session) throw ParseError("empty event log '" + path.string() + "'");
    return session;
}

} // namespace attncsf
