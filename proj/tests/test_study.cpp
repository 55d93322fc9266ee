#include "attncsf/study.hpp"
#include "attncsf/study_http.hpp"

#include "support/test_support.hpp"

#include "doctest.h"
#include "httplib.h"

#include <fstream>
#include <set>
#include <sstream>
#include <thread>

using namespace attncsf;
using nlohmann::json;

namespace {

StudyConfig quick_config() {
    StudyConfig cfg;
    cfg.display = testing::small_display(10.0, 500, 200);
    cfg.stimuli = {1, 2};
    cfg.csf_repetitions = 2;
    cfg.csf_quest.max_trials = 3;
    cfg.images_per_subject = 1;
    cfg.foveation_quest.max_trials = 3;
    cfg.foveation_width = 64;
    cfg.foveation_height = 32;
    return cfg;
}

/// Answer a client would give; `afc_right` and `rsvp_right` choose correctness.
ResponseSubmission answer(const json& trial, bool afc_right = true, bool rsvp_right = true) {
    const auto& r = trial.at("rsvp");
    const std::string target = r.at("items").at(r.at("target_index").get<std::size_t>()).at("color");
    const std::string other = target == "red" ? "green" : "red";
    std::string afc;
    const auto& s = trial.at("stimulus");
    if (s.at("type") == "gabor_pair") {
        const auto o = s.at("orientations_deg");
        const bool same = o[0] == o[1];
        afc = (same == afc_right) ? "same" : "different";
    } else {
        const std::string side = s.at("degraded_side");
        afc = afc_right ? side : (side == "left" ? "right" : "left");
    }
    ResponseSubmission sub;
    sub.trial_id = trial.at("trial_id");
    sub.rsvp_answer = rsvp_right ? target : other;
    sub.afc_answer = afc;
    return sub;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("csf plans cover every cell and keep attention order") {
    StudyConfig cfg;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto plan = build_plan(StudyKind::csf, cfg, seed);
        REQUIRE(plan.size() == 3 * 3 * 2);
        std::map<std::pair<std::string, AttentionTag>, int> counts;
        for (std::size_t i = 0; i < plan.size(); ++i) {
            ++counts[{plan[i].condition, plan[i].attention}];
            CHECK(plan[i].attention == kAttentionTags[i % 3]);
            if (i % 3 != 0) CHECK(plan[i].condition == plan[i - 1].condition);
            CHECK(plan[i].repetition == static_cast<int>(i / 9) + 1);
        }
        CHECK(counts.size() == 9);
        for (const auto& [key, n] : counts) CHECK(n == 2);
    }
    CHECK(build_plan(StudyKind::csf, cfg, 42).size() == 18);
    std::set<std::string> first;
    for (std::uint64_t seed = 0; seed < 50; ++seed) first.insert(build_plan(StudyKind::csf, cfg, seed)[0].condition);
    CHECK(first.size() == 3);
}

TEST_CASE("foveation plans use a per-subject subset of images") {
    StudyConfig cfg;
    std::set<std::string> used;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto plan = build_plan(StudyKind::foveation, cfg, seed);
        REQUIRE(plan.size() == 2 * 3);
        CHECK(plan[0].condition != plan[3].condition);
        for (const auto& s : plan) used.insert(s.condition);
    }
    CHECK(used.size() == 4);
    const auto a = build_plan(StudyKind::foveation, cfg, 5), b = build_plan(StudyKind::foveation, cfg, 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].condition == b[i].condition);
    CHECK(subject_seed("S01") == subject_seed("S01"));
    CHECK(subject_seed("S01") != subject_seed("S02"));
}

TEST_CASE("config round trips through key-value text") {
    StudyConfig cfg = quick_config();
    cfg.timing.grace_ms = 300;
    cfg.csf_quest.sd_stop = 0.08;
    const auto back = study_config_from(KeyValues::parse(to_key_values(cfg).str()));
    CHECK(to_key_values(back).str() == to_key_values(cfg).str());
    CHECK(back.timing.grace_ms == 300);
    CHECK(back.csf_quest.sd_stop.value() == doctest::Approx(0.08));
    CHECK(back.display.width == 500);

    StudyConfig bad = quick_config();
    bad.images = {"nowhere"};
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("session trial flow") {
    testing::TempDir dir("flow");
    auto clock = std::make_shared<ManualClock>();
    StudyService svc(dir.path(), quick_config(), clock);
    const json created = svc.create_session({"S01", StudyKind::csf, 11, "sess"});
    CHECK(created.at("plan").size() == 12);
    CHECK(created.at("phase") == "fixation");

    SUBCASE("next-trial is idempotent until answered") {
        const json t1 = svc.next_trial("sess");
        clock->advance(500);
        const json t2 = svc.next_trial("sess");
        CHECK(t1 == t2);
        CHECK(t1.at("trial_id") == "sess.0");
        CHECK(t1.at("intensity").get<double>() == next_intensity(make_staircase(quick_config().csf_quest)));
        CHECK(svc.session_summary("sess").at("phase") == "fixation");
        clock->advance(800);
        CHECK(svc.session_summary("sess").at("phase") == "stimulus");
        clock->advance(500);
        CHECK(svc.session_summary("sess").at("phase") == "mask");
        clock->advance(1000);
        CHECK(svc.session_summary("sess").at("phase") == "response");
    }

    SUBCASE("responses are applied exactly once") {
        const json t = svc.next_trial("sess");
        clock->advance(3000);
        const json r1 = svc.submit_response("sess", answer(t));
        CHECK(r1.at("outcome") == "accepted");
        CHECK(r1.at("afc_correct") == true);
        CHECK(r1.at("duplicate") == false);
        const json r2 = svc.submit_response("sess", answer(t));
        CHECK(r2.at("duplicate") == true);
        CHECK(r2.at("outcome") == "accepted");
        CHECK(svc.session_summary("sess").at("trials_in_step") == 1);
        const json t2 = svc.next_trial("sess");
        CHECK(t2.at("trial_id") == "sess.1");
        CHECK(t2.at("intensity").get<double>() < t.at("intensity").get<double>());
        ResponseSubmission stale = answer(t2);
        stale.trial_id = "sess.7";
        CHECK_THROWS_AS(svc.submit_response("sess", stale), StaleTrialError);
    }

    SUBCASE("timeouts replay the trial at the same intensity") {
        const json t = svc.next_trial("sess");
        clock->advance(2700 + 10000 + 251);
        const json r = svc.submit_response("sess", answer(t));
        CHECK(r.at("outcome") == "replay");
        CHECK(r.at("timed_out") == true);
        CHECK(svc.session_summary("sess").at("trials_in_step") == 0);
        const json again = svc.next_trial("sess");
        CHECK(again.at("trial_id") != t.at("trial_id"));
        CHECK(again.at("intensity") == t.at("intensity"));
    }

    SUBCASE("a response inside the grace period counts") {
        const json t = svc.next_trial("sess");
        clock->advance(2700 + 10000 + 250);
        CHECK(svc.submit_response("sess", answer(t)).at("outcome") == "accepted");
    }

    SUBCASE("a missing 2AFC answer is replayed") {
        const json t = svc.next_trial("sess");
        auto sub = answer(t);
        sub.afc_answer.reset();
        CHECK(svc.submit_response("sess", sub).at("outcome") == "replay");
    }

    SUBCASE("unknown sessions") {
        CHECK_THROWS_AS(svc.next_trial("nope"), NotFoundError);
        CHECK_THROWS_AS(svc.next_trial("../etc"), NotFoundError);
        CHECK_THROWS_AS(svc.create_session({"S01", StudyKind::csf, 1, "sess"}), StaleTrialError);
    }
}

TEST_CASE("foveation trials with a missed letter restart the step") {
    testing::TempDir dir("fov");
    auto clock = std::make_shared<ManualClock>();
    StudyService svc(dir.path(), quick_config(), clock);
    svc.create_session({"S02", StudyKind::foveation, 3, "fov"});
    const json t0 = svc.next_trial("fov");
    CHECK(t0.at("stimulus").at("type") == "split_screen");
    CHECK(t0.at("intensity").get<double>() == next_intensity(make_staircase(default_foveation_quest())));
    CHECK(svc.submit_response("fov", answer(t0)).at("outcome") == "accepted");
    const json t1 = svc.next_trial("fov");
    const json r = svc.submit_response("fov", answer(t1, true, false));
    CHECK(r.at("outcome") == "restart_step");
    CHECK(svc.session_summary("fov").at("trials_in_step") == 1);
    CHECK(svc.next_trial("fov").at("intensity") == t1.at("intensity"));

    const auto png = svc.trial_asset("fov.0");
    REQUIRE(png.size() > 8);
    CHECK(png[1] == 'P');
    CHECK_THROWS_AS(svc.trial_asset("fov.99"), NotFoundError);
}

TEST_CASE("a full session exports thresholds") {
    testing::TempDir dir("full");
    auto clock = std::make_shared<ManualClock>();
    StudyService svc(dir.path(), quick_config(), clock);
    svc.create_session({"S03", StudyKind::csf, 8, "full"});
    int trials = 0;
    while (!svc.session_summary("full").at("done").get<bool>()) {
        const json t = svc.next_trial("full");
        clock->advance(3000);
        svc.submit_response("full", answer(t, trials % 3 != 0));
        ++trials;
    }
    CHECK(trials == 12 * 3);
    CHECK_THROWS_AS(svc.next_trial("full"), SessionDoneError);
    const auto rows = svc.export_results("full");
    CHECK(rows.size() == 6);
    std::istringstream csv(svc.results_csv("full"));
    const auto parsed = read_threshold_csv(csv);
    REQUIRE(parsed.size() == 6);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].contrast == doctest::Approx(rows[i].contrast).epsilon(1e-9));
        CHECK(parsed[i].subject_id == "S03");
        CHECK(parsed[i].repetition == 0);
    }
    const json res = svc.results_json("full");
    CHECK(res.at("staircases").size() == 12);
    // Aggregate is the geometric mean over repetitions.
    std::map<std::pair<std::string, std::string>, std::vector<double>> logs;
    for (const auto& s : res.at("staircases"))
        logs[{s.at("condition"), s.at("attention")}].push_back(s.at("log_mean").get<double>());
    for (const auto& [key, v] : logs) {
        REQUIRE(v.size() == 2);
        const double gm = std::pow(10.0, (v[0] + v[1]) / 2);
        bool found = false;
        for (const auto& r : rows)
            found |= std::abs(r.contrast / gm - 1) < 1e-12 && std::string(to_string(r.attention)) == key.second;
        CHECK(found);
    }
}

TEST_CASE("sessions rebuild from their event log at any cut") {
    testing::TempDir dir("replay");
    auto clock = std::make_shared<ManualClock>();
    StudyService svc(dir.path(), quick_config(), clock);
    svc.create_session({"S04", StudyKind::foveation, 21, "rep"});
    // Live state after each logged event.
    const auto state = [&](json j) {
        j.erase("phase");
        return j;
    };
    std::vector<json> states = {json(), state(svc.session_summary("rep"))};
    std::vector<std::vector<ThresholdSample>> exports = {{}, svc.export_results("rep")};
    const auto record = [&] {
        states.push_back(state(svc.session_summary("rep")));
        exports.push_back(svc.export_results("rep"));
    };
    int i = 0;
    while (!svc.session_summary("rep").at("done").get<bool>()) {
        const json t = svc.next_trial("rep");
        record();
        clock->advance(i % 7 == 6 ? 20000 : 3000);
        svc.submit_response("rep", answer(t, i % 2 == 0, i % 5 != 4));
        record();
        ++i;
    }
    const auto path = svc.log_path("rep");
    std::size_t events = 0;
    for (char c : read_file(path)) events += c == '\n';
    REQUIRE(events + 1 == states.size());

    const auto whole = StudyService::replay_log(path);
    CHECK(whole->done());
    CHECK(whole->completed().size() == 3);

    StudyService again(dir.path(), quick_config(), clock);
    CHECK(again.results_csv("rep") == svc.results_csv("rep"));

    for (std::size_t cut = 1; cut <= events; ++cut) {
        const auto prefix = StudyService::replay_log(path, cut);
        CAPTURE(cut);
        CHECK(state(prefix->summary(clock->now_ms())) == states[cut]);
        const auto rows = prefix->export_thresholds();
        REQUIRE(rows.size() == exports[cut].size());
        for (std::size_t k = 0; k < rows.size(); ++k) CHECK(rows[k].contrast == exports[cut][k].contrast);
    }
    // Torn final line is ignored.
    {
        std::ofstream out(path, std::ios::app);
        out << R"({"event":"respo)";
    }
    CHECK(StudyService::replay_log(path)->completed().size() == 3);
}

TEST_CASE("HTTP API") {
    testing::TempDir dir("http");
    auto clock = std::make_shared<ManualClock>();
    StudyService svc(dir.path(), quick_config(), clock);
    httplib::Server server;
    register_study_routes(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client cli("127.0.0.1", port);

    auto res = cli.Post("/sessions", R"({"subject_id":"S05","kind":"csf","seed":4,"session_id":"web"})",
                        "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(json::parse(res->body).at("session_id") == "web");

    res = cli.Get("/sessions/web/next-trial");
    REQUIRE(res);
    CHECK(res->status == 200);
    const json trial = json::parse(res->body);
    CHECK(trial.at("trial_id") == "web.0");

    res = cli.Get(trial.at("asset_url").get<std::string>().c_str());
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type") == "image/png");

    res = cli.Post("/sessions/web/responses", to_json(answer(trial)).dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body).at("outcome") == "accepted");

    res = cli.Post("/sessions/web/responses", to_json(answer(trial)).dump(), "application/json");
    REQUIRE(res);
    CHECK(json::parse(res->body).at("duplicate") == true);

    res = cli.Post("/sessions/web/responses", R"({"trial_id":"web.5","afc_answer":"same"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 409);

    res = cli.Post("/sessions/web/responses", "not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Post("/sessions", R"({"subject_id":"S05","kind":"other"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Get("/sessions/missing");
    REQUIRE(res);
    CHECK(res->status == 404);
    CHECK(json::parse(res->body).contains("error"));

    res = cli.Get("/sessions/web");
    REQUIRE(res);
    CHECK(json::parse(res->body).at("trials_in_step") == 1);

    res = cli.Get("/sessions/web/results?format=csv");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.rfind("subject,eccentricity_deg,attention,contrast,repetition", 0) == 0);

    res = cli.Get("/sessions/web/results");
    REQUIRE(res);
    CHECK(json::parse(res->body).at("done") == false);

    server.stop();
    th.join();
}
