#pragma once

// HTTP/1.1 routes for TutorService.

#include <simtutor/service.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <string>

namespace simtutor {

namespace detail {

inline void reply(httplib::Response& res, const ApiResponse& api) {
  res.status = api.status;
  res.set_content(api.body.dump(), "application/json; charset=utf-8");
}

inline std::optional<json> parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Registers the API on `server`. `service` must outlive the server.
inline void mount_api(httplib::Server& server, TutorService& service) {
  using httplib::Request;
  using httplib::Response;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const Request&, Response& res) { res.status = 204; });

  auto malformed = [](Response& res) {
    detail::reply(res, api_error(422, "MALFORMED_PAYLOAD", "request body is not valid JSON"));
  };

  server.Post("/api/learners", [&service, malformed](const Request& req, Response& res) {
    auto body = detail::parse_body(req);
    if (!body) return malformed(res);
    detail::reply(res, service.register_learner(*body));
  });

  server.Post("/api/sessions", [&service](const Request& req, Response& res) {
    detail::reply(res, service.create_session(req.get_header_value("Authorization")));
  });

  server.Get(R"(/api/sessions/([A-Za-z0-9_-]+)/step)", [&service](const Request& req, Response& res) {
    detail::reply(res, service.next_step(req.get_header_value("Authorization"), req.matches[1]));
  });

  server.Post(R"(/api/sessions/([A-Za-z0-9_-]+)/submit)",
              [&service, malformed](const Request& req, Response& res) {
                auto body = detail::parse_body(req);
                if (!body) return malformed(res);
                detail::reply(res, service.submit(req.get_header_value("Authorization"),
                                                  req.matches[1], *body));
              });

  server.Get(R"(/api/learners/([a-z0-9_-]+)/model)", [&service](const Request& req, Response& res) {
    detail::reply(res, service.learner_model(req.get_header_value("Authorization"), req.matches[1]));
  });

  server.Get("/api/faq", [&service](const Request&, Response& res) {
    detail::reply(res, service.faq());
  });

  server.set_error_handler([](const Request&, Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404)
      detail::reply(res, api_error(404, "NOT_FOUND", "no such endpoint"));
    else
      detail::reply(res, api_error(res.status, "INTERNAL", "request failed"));
  });

  server.set_exception_handler([](const Request&, Response& res, std::exception_ptr ep) {
    std::string what = "unexpected error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    detail::reply(res, api_error(500, "INTERNAL", what));
  });
}

}  // namespace simtutor
