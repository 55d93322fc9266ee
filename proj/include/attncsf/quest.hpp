#pragma once

#include "attncsf/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace attncsf {

/// Weibull psychometric function on log10 contrast.
struct Psychometric {
    double beta = 3.5;
    double guess = 0.5;  ///< 2AFC
    double lapse = 0.02;

    /// Probability of a correct answer at log10 intensity x for log10 threshold t.
    template <typename Scalar>
    Scalar operator()(const Scalar& x, const Scalar& t) const {
        using std::exp;
        using std::pow;
        return Scalar(guess) + Scalar(1.0 - guess - lapse) * (Scalar(1) - exp(-pow(Scalar(10), Scalar(beta) * (x - t))));
    }
};

struct QuestConfig {
    Psychometric psychometric;
    double prior_mean = -1.5;  ///< log10 contrast
    double prior_sd = 1.0;
    double grid_min = -3.5;
    double grid_max = 0.0;
    double grid_step = 0.01;
    int max_trials = 40;
    /// Early stop once the posterior sd drops below this (log10 units); empty runs all max_trials.
    std::optional<double> sd_stop = 0.08;
    /// Smallest displayable contrast: one 8-bit step refined by 2x2 dithering.
    double min_intensity = 1.0 / (255.0 * 4.0);

    void validate() const;
};

struct TrialOutcome {
    double intensity;
    bool correct;
};

class FinishedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Discretized posterior over the log10 threshold and the trial history that produced it.
struct StaircaseState {
    QuestConfig config;
    Eigen::ArrayXd grid;          ///< log10 thresholds
    Eigen::ArrayXd log_posterior; ///< unnormalized
    std::vector<TrialOutcome> history;

    /// Normalized posterior probabilities on `grid`.
    Eigen::ArrayXd posterior() const;
};

StaircaseState make_staircase(const QuestConfig& config = {});

struct ThresholdEstimate {
    double threshold;  ///< 10^mean
    double log_mean;
    double log_sd;
};

/// Posterior-mean placement mapped to contrast and clamped to [min_intensity, 1].
/// Throws FinishedError once is_done().
double next_intensity(const StaircaseState& state);

/// Bayesian update with one 2AFC answer. Intensity must lie in (0, 1].
StaircaseState update(StaircaseState state, double intensity, bool correct);
void apply(StaircaseState& state, double intensity, bool correct);

ThresholdEstimate estimate(const StaircaseState& state);

bool is_done(const StaircaseState& state);

nlohmann::json to_json(const QuestConfig& config);
QuestConfig quest_config_from_json(const nlohmann::json& j);

/// Config and history; loading replays the history, so the posterior is reproduced exactly.
nlohmann::json snapshot(const StaircaseState& state);
StaircaseState restore_staircase(const nlohmann::json& j);

/// Observer answering with the psychometric function at a known threshold.
class SimulatedObserver {
public:
    SimulatedObserver(double true_threshold, Psychometric psychometric, std::uint64_t seed);

    bool respond(double intensity);
    double probability_correct(double intensity) const;
    double true_threshold() const { return threshold_; }

private:
    double threshold_;
    Psychometric psychometric_;
    std::mt19937_64 rng_;
};

struct SimulationRun {
    ThresholdEstimate estimate;
    std::vector<TrialOutcome> trials;
};

/// Runs one staircase to completion against the observer.
SimulationRun run_staircase(const QuestConfig& config, SimulatedObserver& observer);

} // namespace attncsf
