#include "attncsf/quest.hpp"

#include <algorithm>
#include <cmath>

namespace attncsf {

namespace {

constexpr double kLikelihoodFloor = 1e-300;

} // namespace

void QuestConfig::validate() const {
    if (!(psychometric.beta > 0.0)) throw DomainError("psychometric slope must be > 0");
    if (!(psychometric.guess >= 0.0 && psychometric.lapse >= 0.0 && psychometric.guess + psychometric.lapse < 1.0))
        throw DomainError("guess and lapse rates must be >= 0 and sum to < 1");
    if (!(prior_sd > 0.0)) throw DomainError("prior sd must be > 0");
    if (!(grid_max > grid_min) || !(grid_step > 0.0)) throw DomainError("invalid threshold grid");
    if (max_trials < 1) throw DomainError("max_trials must be >= 1");
    if (sd_stop && !(*sd_stop > 0.0)) throw DomainError("sd stop must be > 0");
    if (!(min_intensity > 0.0 && min_intensity <= 1.0)) throw DomainError("min intensity must lie in (0,1]");
}

Eigen::ArrayXd StaircaseState::posterior() const {
    Eigen::ArrayXd p = (log_posterior - log_posterior.maxCoeff()).exp();
    return p / p.sum();
}

StaircaseState make_staircase(const QuestConfig& config) {
    config.validate();
    StaircaseState state;
    state.config = config;
    const auto n = static_cast<Eigen::Index>(std::llround((config.grid_max - config.grid_min) / config.grid_step)) + 1;
    state.grid = Eigen::ArrayXd::LinSpaced(n, 0, static_cast<double>(n - 1)) * config.grid_step + config.grid_min;
    state.log_posterior = -0.5 * ((state.grid - config.prior_mean) / config.prior_sd).square();
    return state;
}

ThresholdEstimate estimate(const StaircaseState& state) {
    const Eigen::ArrayXd p = state.posterior();
    const double mean = (p * state.grid).sum();
    const double var = (p * (state.grid - mean).square()).sum();
    return {std::pow(10.0, mean), mean, std::sqrt(std::max(var, 0.0))};
}

bool is_done(const StaircaseState& state) {
    if (static_cast<int>(state.history.size()) >= state.config.max_trials) return true;
    return state.config.sd_stop && estimate(state).log_sd < *state.config.sd_stop;
}

double next_intensity(const StaircaseState& state) {
    if (is_done(state)) throw FinishedError("staircase is finished");
    return std::clamp(estimate(state).threshold, state.config.min_intensity, 1.0);
}

void apply(StaircaseState& state, double intensity, bool correct) {
    if (!(intensity > 0.0 && intensity <= 1.0)) throw DomainError("intensity must lie in (0,1]");
    const double x = std::log10(intensity);
    const auto& psi = state.config.psychometric;
    const Eigen::ArrayXd pc = state.grid.unaryExpr([&](double t) { return psi(x, t); });
    const Eigen::ArrayXd likelihood = correct ? pc : Eigen::ArrayXd(1.0 - pc);
    state.log_posterior += likelihood.max(kLikelihoodFloor).log();
    state.history.push_back({intensity, correct});
}

StaircaseState update(StaircaseState state, double intensity, bool correct) {
    apply(state, intensity, correct);
    return state;
}

nlohmann::json to_json(const QuestConfig& c) {
    nlohmann::json j = {{"beta", c.psychometric.beta},
                        {"guess", c.psychometric.guess},
                        {"lapse", c.psychometric.lapse},
                        {"prior_mean", c.prior_mean},
                        {"prior_sd", c.prior_sd},
                        {"grid_min", c.grid_min},
                        {"grid_max", c.grid_max},
                        {"grid_step", c.grid_step},
                        {"max_trials", c.max_trials},
                        {"min_intensity", c.min_intensity}};
    j["sd_stop"] = c.sd_stop ? nlohmann::json(*c.sd_stop) : nlohmann::json(nullptr);
    return j;
}

QuestConfig quest_config_from_json(const nlohmann::json& j) {
    QuestConfig c;
    c.psychometric.beta = j.value("beta", c.psychometric.beta);
    c.psychometric.guess = j.value("guess", c.psychometric.guess);
    c.psychometric.lapse = j.value("lapse", c.psychometric.lapse);
    c.prior_mean = j.value("prior_mean", c.prior_mean);
    c.prior_sd = j.value("prior_sd", c.prior_sd);
    c.grid_min = j.value("grid_min", c.grid_min);
    c.grid_max = j.value("grid_max", c.grid_max);
    c.grid_step = j.value("grid_step", c.grid_step);
    c.max_trials = j.value("max_trials", c.max_trials);
    c.min_intensity = j.value("min_intensity", c.min_intensity);
    if (j.contains("sd_stop") && !j["sd_stop"].is_null()) c.sd_stop = j["sd_stop"].get<double>();
    c.validate();
    return c;
}

nlohmann::json snapshot(const StaircaseState& state) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : state.history) trials.push_back({t.intensity, t.correct});
    return {{"config", to_json(state.config)}, {"trials", trials}};
}

StaircaseState restore_staircase(const nlohmann::json& j) {
    StaircaseState state = make_staircase(quest_config_from_json(j.at("config")));
    for (const auto& t : j.at("trials")) apply(state, t.at(0).get<double>(), t.at(1).get<bool>());
    return state;
}

SimulatedObserver::SimulatedObserver(double true_threshold, Psychometric psychometric, std::uint64_t seed)
    : threshold_(true_threshold), psychometric_(psychometric), rng_(seed) {
    if (!(true_threshold > 0.0)) throw DomainError("observer threshold must be > 0");
}

double SimulatedObserver::probability_correct(double intensity) const {
    return psychometric_(std::log10(intensity), std::log10(threshold_));
}

bool SimulatedObserver::respond(double intensity) {
    std::bernoulli_distribution answer(probability_correct(intensity));
    return answer(rng_);
}

SimulationRun run_staircase(const QuestConfig& config, SimulatedObserver& observer) {
    StaircaseState state = make_staircase(config);
    SimulationRun run;
    while (!is_done(state)) {
        const double x = next_intensity(state);
        const bool correct = observer.respond(x);
        apply(state, x, correct);
    }
    run.trials = state.history;
    run.estimate = estimate(state);
    return run;
}

} // namespace attncsf
