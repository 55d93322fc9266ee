#pragma once

#include "attncsf/study.hpp"

namespace httplib {
class Server;
}

namespace attncsf {

/// Routes:
///   POST /sessions                        {"subject_id", "kind", "seed"?, "session_id"?}
///   GET  /sessions/{id}
///   GET  /sessions/{id}/next-trial
///   POST /sessions/{id}/responses         {"trial_id", "rsvp_answer", "afc_answer", ...}
///   GET  /sessions/{id}/results           ?format=csv for the threshold table
///   GET  /assets/trials/{trial_id}.png
/// Errors come back as {"error": message} with 400, 404 or 409.
void register_study_routes(httplib::Server& server, StudyService& service);

/// Blocks serving on host:port until the server is stopped.
void serve_study(StudyService& service, const std::string& host, int port);

} // namespace attncsf
