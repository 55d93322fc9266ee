#pragma once

#include "attncsf/display.hpp"
#include "attncsf/kv_format.hpp"
#include "attncsf/model_fit.hpp"
#include "attncsf/quest.hpp"
#include "attncsf/stimulus.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace attncsf {

enum class StudyKind { csf, foveation };

std::string_view to_string(StudyKind kind);
std::optional<StudyKind> parse_study_kind(std::string_view s);

/// Milliseconds on an arbitrary monotonic axis.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_ms() const = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_ms() const override;
};

/// Clock advanced by hand, for tests and scripted runs.
class ManualClock final : public Clock {
public:
    std::int64_t now_ms() const override { return now_; }
    void set(std::int64_t t) { now_ = t; }
    void advance(std::int64_t dt) { now_ += dt; }

private:
    std::int64_t now_ = 0;
};

struct TrialTiming {
    int fixation_ms = 1200;
    int stimulus_ms = 500;
    int mask_ms = 1000;
    int response_ms = 10000;
    int grace_ms = 250;

    /// Offset of the response window from trial issue.
    int response_opens_ms() const { return fixation_ms + stimulus_ms + mask_ms; }
};

/// Staircase over the MAR slope of the foveation study.
QuestConfig default_foveation_quest();

struct StudyConfig {
    DisplayGeometry display = DisplayGeometry::study_monitor();
    TrialTiming timing;
    std::vector<int> stimuli = {1, 2, 3};
    int csf_repetitions = 2;
    QuestConfig csf_quest;
    std::vector<std::string> images = {"tulips", "city", "mountain", "forest"};
    int images_per_subject = 2;
    int foveation_repetitions = 1;
    QuestConfig foveation_quest = default_foveation_quest();
    /// Raster of the foveation comparison images (the display raster when 0).
    int foveation_width = 0;
    int foveation_height = 0;

    void validate() const;
};

/// Reads `key = value` settings (display.*, timing.*, csf.*, foveation.*); missing keys keep defaults.
StudyConfig study_config_from(const KeyValues& kv);
KeyValues to_key_values(const StudyConfig& cfg);

struct ConditionStep {
    std::string condition; ///< stimulus number ("1".."7") or image name
    AttentionTag attention = AttentionTag::low;
    int repetition = 1;
};

/// Condition order shuffled per repetition; attention always runs low, medium, high
/// within a condition.
std::vector<ConditionStep> build_plan(StudyKind kind, const StudyConfig& cfg, std::uint64_t seed);

/// Seed used when a session is created without one.
std::uint64_t subject_seed(const std::string& subject_id);

enum class Phase { fixation, stimulus, mask, response, done };
std::string_view to_string(Phase phase);

enum class Outcome { accepted, replay, restart_step };
std::string_view to_string(Outcome outcome);

/// Everything a client needs to present one trial.
struct TrialDescriptor {
    std::string trial_id;
    std::size_t step = 0;
    std::int64_t issued_at_ms = 0;
    double intensity = 0.0; ///< Michelson contrast (csf) or MAR slope (foveation)
    RsvpSpec rsvp_spec;
    RsvpSchedule rsvp;
    // csf
    std::array<double, 2> orientations_deg{0.0, 0.0}; ///< left, right patch
    // foveation
    Side degraded_side = Side::left;

    /// Correct 2AFC answer: "same"/"different" or "left"/"right".
    std::string afc_correct(StudyKind kind) const;
};

struct ResponseSubmission {
    std::string trial_id;
    std::optional<std::string> rsvp_answer;
    std::optional<std::string> afc_answer;
    std::optional<double> rsvp_latency_ms;
    std::optional<double> afc_latency_ms;
    std::optional<bool> fixation_ok;
};

struct ResponseResult {
    Outcome outcome = Outcome::accepted;
    bool rsvp_correct = false;
    bool afc_correct = false;
    bool timed_out = false;
    bool duplicate = false;
};

struct CompletedStaircase {
    ConditionStep step;
    ThresholdEstimate estimate;
    int trials = 0;
};

class SessionDoneError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class StaleTrialError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One subject's run through a study. State is derived purely from the event sequence.
class Session {
public:
    Session(std::string session_id, std::string subject_id, StudyKind kind, StudyConfig config, std::uint64_t seed);

    const std::string& id() const { return id_; }
    const std::string& subject() const { return subject_; }
    StudyKind kind() const { return kind_; }
    const StudyConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<ConditionStep>& plan() const { return plan_; }

    bool done() const { return step_ >= plan_.size(); }
    std::size_t current_step() const { return step_; }
    const StaircaseState& staircase() const;
    const std::vector<CompletedStaircase>& completed() const { return completed_; }
    const std::optional<TrialDescriptor>& active_trial() const { return active_; }
    Phase phase(std::int64_t now_ms) const;

    /// Builds the next trial (deterministic in seed and trial counter) without changing state.
    TrialDescriptor prepare_trial(std::int64_t now_ms) const;
    void issue(const TrialDescriptor& trial);

    /// Outcome of a response received at `received_at_ms` for the active trial.
    ResponseResult evaluate(const ResponseSubmission& response, std::int64_t received_at_ms) const;
    void record(const ResponseSubmission& response, const ResponseResult& result);

    /// Result of an earlier submission for this trial id, if any.
    std::optional<ResponseResult> answered(const std::string& trial_id) const;
    /// Any trial issued in this session, or nullptr.
    const TrialDescriptor* issued(const std::string& trial_id) const;

    /// Intensity the next trial of the current staircase will use.
    double pending_intensity() const;

    /// Per (condition, attention): mean log10 estimate over repetitions, as samples.
    std::vector<ThresholdSample> export_thresholds() const;
    nlohmann::json summary(std::int64_t now_ms) const;

private:
    void start_step();

    std::string id_;
    std::string subject_;
    StudyKind kind_;
    StudyConfig config_;
    std::uint64_t seed_;
    std::vector<ConditionStep> plan_;
    std::size_t step_ = 0;
    std::optional<StaircaseState> staircase_;
    std::vector<CompletedStaircase> completed_;
    std::optional<TrialDescriptor> active_;
    /// Intensity held over when a trial has to be shown again.
    std::optional<double> carried_intensity_;
    std::uint64_t trial_counter_ = 0;
    std::map<std::string, ResponseResult> answered_;
    std::map<std::string, TrialDescriptor> issued_;
};

nlohmann::json to_json(const TrialDescriptor& trial, StudyKind kind, const TrialTiming& timing);
TrialDescriptor trial_from_json(const nlohmann::json& j);
ResponseSubmission response_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResponseSubmission& r);
nlohmann::json to_json(const ResponseResult& r);

void write_results_csv(std::ostream& out, const Session& session);

/// Sessions persisted as append-only JSONL event logs under a data directory.
class StudyService {
public:
    StudyService(std::filesystem::path data_dir, StudyConfig config, std::shared_ptr<const Clock> clock);

    /// Data directory from ATTNCSF_DATA_DIR, else ./study-data.
    static std::filesystem::path default_data_dir();

    struct CreateRequest {
        std::string subject_id;
        StudyKind kind = StudyKind::csf;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> session_id;
    };

    nlohmann::json create_session(const CreateRequest& request);
    /// The active trial (issued on first request, then returned unchanged until answered).
    nlohmann::json next_trial(const std::string& session_id);
    nlohmann::json submit_response(const std::string& session_id, const ResponseSubmission& response);
    nlohmann::json session_summary(const std::string& session_id);
    std::vector<ThresholdSample> export_results(const std::string& session_id);
    std::string results_csv(const std::string& session_id);
    nlohmann::json results_json(const std::string& session_id);
    /// Staircase of the running step; empty once the session is complete.
    std::optional<StaircaseState> staircase_state(const std::string& session_id);
    /// PNG of the stimulus of a trial of this session (active or past).
    std::vector<std::uint8_t> trial_asset(const std::string& trial_id);

    const StudyConfig& config() const { return config_; }
    std::filesystem::path log_path(const std::string& session_id) const;

    /// Rebuilds a session from its event log (or the first `max_events` events).
    static std::unique_ptr<Session> replay_log(const std::filesystem::path& path,
                                               std::optional<std::size_t> max_events = std::nullopt);

private:
    struct Entry {
        std::mutex mutex;
        std::unique_ptr<Session> session;
    };

    std::shared_ptr<Entry> find(const std::string& session_id);
    void append(const std::string& session_id, const nlohmann::json& event);

    std::filesystem::path data_dir_;
    StudyConfig config_;
    std::shared_ptr<const Clock> clock_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// Renders the stimulus of a trial as display luminance.
LuminanceImage render_trial(const Session& session, const TrialDescriptor& trial);

} // namespace attncsf
