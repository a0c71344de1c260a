#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "m3pcg/service.hpp"

namespace m3pcg {

// Level batch wire shape: {"levels": [...], "source": ..., "generated_at": ...}.
nlohmann::json batch_envelope(const LevelBatch& batch);

// JSON-over-HTTP front end for a LevelService.
//   POST /api/players                -> 201 {player_id, group}
//   GET  /api/players/{id}/levels    -> 200 batch envelope
//   POST /api/players/{id}/complete  -> 200 {status}; body is a gameplay record with user_rating
//   POST /api/players/{id}/events    -> 200 {status}; body {event, level_in_row, record?, screen?}
//   GET  /healthz
class HttpApi {
 public:
  explicit HttpApi(LevelService& service);
  ~HttpApi();

  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace m3pcg
