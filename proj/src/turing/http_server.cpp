#include "tumorsynth/turing/http_server.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <thread>

namespace tumorsynth::turing {
using nlohmann::json;

struct HttpServer::Impl {
  std::shared_ptr<TuringService> service;
  HttpOptions options;
  httplib::Server server;
  bool bound = false;
  std::atomic<bool> run_entered{false};
  std::atomic<bool> run_returned{false};
  std::atomic<bool> stop_requested{false};
};

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::State: return 409;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
  send_json(res, status, {{"error", msg}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nullptr;
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::InvalidArgument, "request body is not valid JSON");
  return j;
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<TuringService> service, HttpOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  impl_->options = std::move(options);
  auto& srv = impl_->server;
  // Headers and body go out in separate writes; without NODELAY each response
  // stalls on the peer's delayed ACK.
  srv.set_tcp_nodelay(true);
  srv.set_keep_alive_max_count(1000);
  TuringService* svc = impl_->service.get();
  const bool allow_partial = impl_->options.allow_partial_score;

  srv.Post("/sessions", guarded([svc](const httplib::Request& req, httplib::Response& res) {
             const auto cfg = session_config_from_json(parse_body(req));
             const auto id = svc->create_session(cfg);
             json body = to_json(svc->progress(id));
             send_json(res, 201, body);
           }));
  srv.Get(R"(/sessions/([A-Za-z0-9]+)/trial)",
          guarded([svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(svc->next_trial(req.matches[1])));
          }));
  srv.Post(R"(/sessions/([A-Za-z0-9]+)/answers)",
           guarded([svc](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             if (!body.is_object() || !body.contains("trial_index") || !body.contains("verdict")) {
               fail(ErrorCode::InvalidArgument, "expected {\"trial_index\": n, \"verdict\": \"real\"|\"synthetic\"}");
             }
             const auto& ti = body["trial_index"];
             const auto& v = body["verdict"];
             if (!ti.is_number_unsigned() || !v.is_string()) {
               fail(ErrorCode::InvalidArgument, "trial_index must be a non-negative integer, verdict a string");
             }
             send_json(res, 200, to_json(svc->submit_answer(req.matches[1], ti.get<std::size_t>(),
                                                            v.get<std::string>())));
           }));
  srv.Get(R"(/sessions/([A-Za-z0-9]+)/score)",
          guarded([svc, allow_partial](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const std::string flag = req.get_param_value("partial");
            const bool partial = flag == "1" || flag == "true";
            if (partial && !allow_partial && !svc->progress(id).complete) {
              send_error(res, 403, "partial scoring is disabled on this server");
              return;
            }
            send_json(res, 200, to_json(svc->score(id, partial)));
          }));
  srv.Get(R"(/sessions/([A-Za-z0-9]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(svc->progress(req.matches[1])));
          }));
  srv.Get(R"(/images/([A-Za-z0-9]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
            const auto png = svc->image(req.matches[1]);
            res.set_header("Cache-Control", "no-store");
            res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
          }));
  if (!impl_->options.static_dir.empty()) {
    if (!srv.set_mount_point("/", impl_->options.static_dir.string())) {
      fail(ErrorCode::NotFound, "static directory not found: " + impl_->options.static_dir.string());
    }
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          "<!doctype html><title>Turing test service</title>"
          "<p>No UI bundle mounted. Start the server with a static directory, or use the JSON API "
          "under /sessions.</p>",
          "text/html");
    });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(int port) {
  if (impl_->bound) fail(ErrorCode::State, "server already bound");
  int bound;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(impl_->options.host);
  } else {
    bound = impl_->server.bind_to_port(impl_->options.host, port) ? port : -1;
  }
  if (bound <= 0) fail(ErrorCode::Io, "cannot bind " + impl_->options.host + ":" + std::to_string(port));
  impl_->bound = true;
  return bound;
}

void HttpServer::run() {
  if (!impl_->bound) fail(ErrorCode::State, "server not bound");
  impl_->run_entered = true;
  if (!impl_->stop_requested) impl_->server.listen_after_bind();
  impl_->run_returned = true;
}

// stop() may race with run() starting up on another thread; wait until the
// listener is actually up (or run gave up) before shutting it down.
void HttpServer::stop() {
  if (!impl_) return;
  impl_->stop_requested = true;
  if (!impl_->run_entered) return;
  while (!impl_->run_returned && !impl_->server.is_running()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  if (impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace tumorsynth::turing
