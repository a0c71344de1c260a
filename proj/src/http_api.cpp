#include "m3pcg/http_api.hpp"

#include <httplib.h>

#include <iostream>

namespace m3pcg {
namespace {

using nlohmann::json;

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message, const json& extra = json::object()) {
  json body = extra;
  body["error"] = message;
  reply(res, status, body);
}

// Maps the service's exceptions onto status codes.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ValidationFailed& e) {
      error(res, 400, "validation failed", {{"reasons", e.reasons()}});
    } catch (const UnknownPlayer& e) {
      error(res, 404, e.what());
    } catch (const EventRejected& e) {
      error(res, 409, e.what());
    } catch (const json::exception& e) {
      error(res, 400, std::string("malformed JSON: ") + e.what());
    } catch (const std::invalid_argument& e) {
      error(res, 400, e.what());
    } catch (const std::exception& e) {
      std::cerr << req.method << ' ' << req.path << ": " << e.what() << '\n';
      error(res, 500, "internal error");
    }
  };
}

}  // namespace

json batch_envelope(const LevelBatch& batch) {
  return {{"levels", level_batch_to_json(batch.levels)},
          {"source", to_string(batch.source)},
          {"generated_at", batch.generated_at}};
}

struct HttpApi::Impl {
  explicit Impl(LevelService& s) : service(s) {}
  LevelService& service;
  httplib::Server server;
};

HttpApi::HttpApi(LevelService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& server = impl_->server;
  LevelService& svc = service;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

  server.Post("/api/players", guarded([&svc](const httplib::Request&, httplib::Response& res) {
                const Onboarding o = svc.onboard_player();
                reply(res, 201, {{"player_id", o.player_id}, {"group", to_string(o.group)}});
              }));

  server.Get("/api/players/:id/levels", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, batch_envelope(svc.get_levels(req.path_params.at("id"))));
             }));

  server.Post("/api/players/:id/complete", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.path_params.at("id");
                const json body = json::parse(req.body);
                if (!body.is_object()) throw std::invalid_argument("body must be a JSON object");
                const json rating = body.contains("user_rating") ? body.at("user_rating") : body.value("rating", json());
                if (!rating.is_number_integer()) {
                  throw ValidationFailed({"user_rating: required integer 1..5"});
                }
                GameplayRecord record;
                try {
                  record = body.get<GameplayRecord>();
                } catch (const json::exception& e) {
                  throw ValidationFailed({std::string("record: ") + e.what()});
                }
                const AckStatus status = svc.complete_level(id, record, rating.get<int>());
                reply(res, 200, {{"status", to_string(status)}});
              }));

  server.Post("/api/players/:id/events", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                const json body = json::parse(req.body);
                if (!body.is_object()) throw std::invalid_argument("body must be a JSON object");
                const auto kind = parse_event_kind(body.at("event").get<std::string>());
                if (!kind) throw std::invalid_argument("unknown event kind");
                LevelRunEvent event;
                event.player_id = req.path_params.at("id");
                event.kind = *kind;
                event.level_in_row = body.value("level_in_row", 0);
                event.screen = body.value("screen", std::string());
                if (body.contains("record")) event.payload = body.at("record").get<GameplayRecord>();
                const AckStatus status = svc.record_event(std::move(event));
                reply(res, 200, {{"status", to_string(status)}});
              }));
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

bool HttpApi::listen() { return impl_->server.listen_after_bind(); }

void HttpApi::stop() { impl_->server.stop(); }

void HttpApi::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace m3pcg
