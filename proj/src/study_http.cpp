#include "attncsf/study_http.hpp"

#include "httplib.h"

namespace attncsf {

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const NotFoundError& e) {
        send_json(res, {{"error", e.what()}}, 404);
    } catch (const SessionDoneError& e) {
        send_json(res, {{"error", e.what()}}, 409);
    } catch (const StaleTrialError& e) {
        send_json(res, {{"error", e.what()}}, 409);
    } catch (const nlohmann::json::exception& e) {
        send_json(res, {{"error", std::string("malformed request: ") + e.what()}}, 400);
    } catch (const ParseError& e) {
        send_json(res, {{"error", e.what()}}, 400);
    } catch (const DomainError& e) {
        send_json(res, {{"error", e.what()}}, 400);
    } catch (const std::exception& e) {
        send_json(res, {{"error", e.what()}}, 500);
    }
}

} // namespace

void register_study_routes(httplib::Server& server, StudyService& service) {
    server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = nlohmann::json::parse(req.body);
            StudyService::CreateRequest create;
            create.subject_id = body.at("subject_id").get<std::string>();
            const auto kind = parse_study_kind(body.value("kind", std::string("csf")));
            if (!kind) throw ParseError("kind must be 'csf' or 'foveation'");
            create.kind = *kind;
            if (body.contains("seed") && !body["seed"].is_null()) create.seed = body["seed"].get<std::uint64_t>();
            if (body.contains("session_id") && !body["session_id"].is_null())
                create.session_id = body["session_id"].get<std::string>();
            send_json(res, service.create_session(create), 201);
        });
    });
    server.Get(R"(/sessions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, service.session_summary(req.matches[1])); });
    });
    server.Get(R"(/sessions/([^/]+)/next-trial)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, service.next_trial(req.matches[1])); });
    });
    server.Post(R"(/sessions/([^/]+)/responses)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto response = response_from_json(nlohmann::json::parse(req.body));
            send_json(res, service.submit_response(req.matches[1], response));
        });
    });
    server.Get(R"(/sessions/([^/]+)/results)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            if (req.get_param_value("format") == "csv") {
                res.set_content(service.results_csv(req.matches[1]), "text/csv");
            } else {
                send_json(res, service.results_json(req.matches[1]));
            }
        });
    });
    server.Get(R"(/assets/trials/([^/]+)\.png)", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto png = service.trial_asset(req.matches[1]);
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        });
    });
}

void serve_study(StudyService& service, const std::string& host, int port) {
    httplib::Server server;
    register_study_routes(server, service);
    if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace attncsf
