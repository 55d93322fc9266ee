#include "attncsf/quest.hpp"

#include "doctest.h"

#include <cmath>
#include <cstring>

using namespace attncsf;
using doctest::Approx;

namespace {

/// Posterior on the config grid computed from scratch: Gaussian prior times the
/// product of Weibull likelihoods, normalized.
std::vector<double> posterior_oracle(const QuestConfig& c, const std::vector<TrialOutcome>& trials) {
    const int n = static_cast<int>(std::lround((c.grid_max - c.grid_min) / c.grid_step)) + 1;
    std::vector<double> p(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = c.grid_min + i * c.grid_step;
        double v = std::exp(-0.5 * std::pow((t - c.prior_mean) / c.prior_sd, 2));
        for (const auto& trial : trials) {
            const double x = std::log10(trial.intensity);
            const double pc = c.psychometric.guess + (1 - c.psychometric.guess - c.psychometric.lapse) *
                                                         (1 - std::exp(-std::pow(10.0, c.psychometric.beta * (x - t))));
            v *= trial.correct ? pc : 1 - pc;
        }
        p[static_cast<std::size_t>(i)] = v;
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

} // namespace

TEST_CASE("fresh staircase places at the prior mean") {
    const auto s = make_staircase();
    CHECK(s.grid.size() == 351);
    CHECK(s.grid(0) == Approx(-3.5));
    CHECK(s.grid(350) == Approx(0.0).epsilon(1e-12));
    // Prior mean of the grid-truncated Gaussian, below -1.5 since the grid ends 1.5 sd above it.
    const auto prior = posterior_oracle(s.config, {});
    double mean = 0.0;
    for (std::size_t i = 0; i < prior.size(); ++i) mean += prior[i] * (-3.5 + 0.01 * static_cast<double>(i));
    CHECK(mean < -1.5);
    CHECK(next_intensity(s) == Approx(std::pow(10.0, mean)).epsilon(1e-9));
    CHECK(s.posterior().sum() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Bayesian update matches the direct posterior") {
    const QuestConfig c;
    std::vector<TrialOutcome> trials = {{0.05, true}, {0.02, false}, {0.03, true}, {0.01, false}, {0.2, true}};
    auto s = make_staircase(c);
    for (const auto& t : trials) apply(s, t.intensity, t.correct);
    const auto oracle = posterior_oracle(c, trials);
    const Eigen::ArrayXd p = s.posterior();
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == Approx(oracle[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("single correct answer at a low intensity moves mass to lower thresholds") {
    const auto s0 = make_staircase();
    const auto s1 = update(s0, 0.005, true);
    CHECK(estimate(s1).log_mean < estimate(s0).log_mean);
    const auto s2 = update(s0, 0.5, false);
    CHECK(estimate(s2).log_mean > estimate(s0).log_mean);
}

TEST_CASE("update order does not matter") {
    const auto s0 = make_staircase();
    const auto a = update(update(s0, 0.04, true), 0.02, false);
    const auto b = update(update(s0, 0.02, false), 0.04, true);
    const Eigen::ArrayXd pa = a.posterior(), pb = b.posterior();
    CHECK((pa - pb).abs().maxCoeff() < 1e-12);
}

TEST_CASE("posterior stays proper after every update") {
    auto s = make_staircase();
    SimulatedObserver obs(0.05, s.config.psychometric, 9);
    while (!is_done(s)) {
        const double x = next_intensity(s);
        apply(s, x, obs.respond(x));
        CHECK(std::abs(s.posterior().sum() - 1.0) < 1e-9);
    }
}

TEST_CASE("many correct answers lower the placement") {
    auto s = make_staircase();
    const double first = next_intensity(s);
    for (int i = 0; i < 10; ++i) apply(s, next_intensity(s), true);
    CHECK(next_intensity(s) < first);
}

TEST_CASE("a steady 75% correct rate pins the placement near the tested intensity") {
    QuestConfig c;
    c.max_trials = 1000;
    auto s = make_staircase(c);
    std::vector<TrialOutcome> trials;
    for (int i = 0; i < 400; ++i) {
        const bool correct = i % 4 != 3;
        apply(s, 0.05, correct);
        trials.push_back({0.05, correct});
    }
    // 0.5 + 0.48 (1 - exp(-10^(3.5 d))) = 0.75 at d = log10(-ln(1 - 0.25/0.48)) / 3.5
    const double d = std::log10(-std::log(1 - 0.25 / 0.48)) / 3.5;
    const auto oracle = posterior_oracle(c, trials);
    double mean = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) mean += oracle[i] * (c.grid_min + i * c.grid_step);
    CHECK(estimate(s).log_mean == Approx(mean).epsilon(1e-9));
    CHECK(std::abs(estimate(s).log_mean - (std::log10(0.05) - d)) < 0.02);
}

TEST_CASE("zero-likelihood answers are guarded") {
    QuestConfig c;
    c.psychometric.lapse = 0.0;
    auto s = make_staircase(c);
    apply(s, 1.0, false); // impossible for most of the grid
    const Eigen::ArrayXd p = s.posterior();
    CHECK(p.allFinite());
    CHECK(p.sum() == Approx(1.0));
}

TEST_CASE("stopping rules") {
    QuestConfig c;
    c.max_trials = 3;
    auto s = make_staircase(c);
    for (int i = 0; i < 3; ++i) apply(s, next_intensity(s), true);
    CHECK(is_done(s));
    CHECK_THROWS_AS(next_intensity(s), FinishedError);

    QuestConfig sd;
    sd.max_trials = 500;
    sd.sd_stop = 0.08;
    auto t = make_staircase(sd);
    SimulatedObserver obs(0.09, sd.psychometric, 1);
    while (!is_done(t)) apply(t, next_intensity(t), obs.respond(next_intensity(t)));
    CHECK(estimate(t).log_sd < 0.08);
    CHECK(t.history.size() < 500);
}

TEST_CASE("placement is clamped to displayable contrast") {
    QuestConfig c;
    c.max_trials = 100;
    auto s = make_staircase(c);
    for (int i = 0; i < 60; ++i) apply(s, 0.001, true);
    CHECK(next_intensity(s) >= 1.0 / (255.0 * 4.0));
    CHECK_THROWS_AS(apply(s, 0.0, true), DomainError);
    CHECK_THROWS_AS(apply(s, 1.5, true), DomainError);
}

TEST_CASE("snapshot restores a bit-identical posterior") {
    auto s = make_staircase();
    SimulatedObserver obs(0.03, s.config.psychometric, 5);
    for (int i = 0; i < 17; ++i) {
        const double x = next_intensity(s);
        apply(s, x, obs.respond(x));
    }
    const auto r = restore_staircase(nlohmann::json::parse(snapshot(s).dump()));
    REQUIRE(r.log_posterior.size() == s.log_posterior.size());
    CHECK(std::memcmp(r.log_posterior.data(), s.log_posterior.data(), sizeof(double) * s.log_posterior.size()) == 0);
    CHECK(r.history.size() == 17);
}

TEST_CASE("simulated runs are deterministic per seed") {
    const QuestConfig c;
    SimulatedObserver a(0.09, c.psychometric, 77), b(0.09, c.psychometric, 77);
    const auto ra = run_staircase(c, a), rb = run_staircase(c, b);
    REQUIRE(ra.trials.size() == rb.trials.size());
    for (std::size_t i = 0; i < ra.trials.size(); ++i) {
        CHECK(ra.trials[i].intensity == rb.trials[i].intensity);
        CHECK(ra.trials[i].correct == rb.trials[i].correct);
    }
    CHECK(ra.estimate.log_mean == rb.estimate.log_mean);
}

TEST_CASE("observer answers follow the psychometric function") {
    const Psychometric psi;
    SimulatedObserver obs(0.05, psi, 3);
    CHECK(obs.probability_correct(0.05) == Approx(0.5 + 0.48 * (1 - std::exp(-1.0))));
    int correct = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) correct += obs.respond(0.05);
    const double p = obs.probability_correct(0.05);
    CHECK(std::abs(correct / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
    CHECK_THROWS_AS(SimulatedObserver(0.0, psi, 1), DomainError);
}
