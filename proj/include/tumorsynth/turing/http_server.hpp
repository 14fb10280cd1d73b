#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "tumorsynth/turing/turing.hpp"

namespace tumorsynth::turing {

struct HttpOptions {
  std::string host = "127.0.0.1";
  std::filesystem::path static_dir;  // served at "/" when set
  // Partial scores reveal truth for answered trials of an active session, so
  // the HTTP route refuses them unless this is set.
  bool allow_partial_score = false;
};

// JSON routes:
//   POST /sessions                 {n_trials?, ratio?, seed?, level_hu?, width_hu?}
//   GET  /sessions/{id}/trial
//   POST /sessions/{id}/answers    {trial_index, verdict}
//   GET  /sessions/{id}/score[?partial=1]
//   GET  /images/{token}           image/png
// Errors come back as {"error": "..."} with 400, 403, 404 or 409.
class HttpServer {
 public:
  HttpServer(std::shared_ptr<TuringService> service, HttpOptions options = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(int port);
  // Blocks until stop().
  void run();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tumorsynth::turing
