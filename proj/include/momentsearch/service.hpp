#pragma once

// HTTP front end over an Engine.
//
//   POST /v1/search          SearchRequest            -> SearchResponse
//   POST /v1/temporal        {query | events, config} -> {sequences, ...}
//   POST /v1/ingest          {"manifest": path}       -> {corpus}
//   GET  /v1/health                                   -> {status, corpus, config}
//   GET  /v1/keyframes/{id}                           -> Keyframe
//
// Status codes: 400 invalid request, 404 not found (including no valid
// sequence), 409 no corpus loaded, 422 corpus error on ingest, 502 planner
// outage with fallback=fail, 500 only for internal faults.

#include <filesystem>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "momentsearch/config.hpp"
#include "momentsearch/corpus.hpp"
#include "momentsearch/engine.hpp"
#include "momentsearch/serialize.hpp"

namespace momentsearch {

class Service {
 public:
  explicit Service(Engine& engine, std::optional<std::filesystem::path> static_dir = std::nullopt)
      : engine_(engine), static_dir_(std::move(static_dir)) {
    routes();
  }
  ~Service() { stop(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      port = server_.bind_to_any_port(host);
    } else if (!server_.bind_to_port(host, port)) {
      port = -1;
    }
    if (port < 0) {
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
  }

  /// Serves on the calling thread until stop().
  void run() { server_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { run(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) {
      thread_.join();
    }
  }

 private:
  using json = nlohmann::json;

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view msg) {
    send(res, status, serialize::error_body(kind, msg));
  }

  static json parse_body(const httplib::Request& req) {
    try {
      return json::parse(req.body);
    } catch (const json::exception& e) {
      throw EngineError(EngineError::Kind::InvalidRequest, std::string("malformed JSON: ") + e.what());
    }
  }

  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const EngineError& e) {
      switch (e.kind()) {
        case EngineError::Kind::InvalidRequest:
          return send_error(res, 400, "InvalidRequest", e.what());
        case EngineError::Kind::NoCorpus:
          return send_error(res, 409, "NoCorpus", e.what());
        case EngineError::Kind::NotFound:
          return send_error(res, 404, "NotFound", e.what());
        case EngineError::Kind::Upstream:
          return send_error(res, 502, "Upstream", e.what());
      }
    } catch (const CorpusError& e) {
      send_error(res, 422, CorpusError::kind_name(e.kind()), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  }

  json corpus_summary() const {
    auto snap = engine_.snapshot();
    if (!snap) {
      return nullptr;
    }
    return {{"videos", snap->store->videos().size()}, {"keyframes", snap->store->keyframes().size()}};
  }

  void routes() {
    server_.Post("/v1/search", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto sr = serialize::search_request(parse_body(req));
        send(res, 200, serialize::to_json(engine_.search(sr)));
      });
    });
    server_.Post("/v1/temporal", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto tr = serialize::temporal_request(parse_body(req));
        send(res, 200, serialize::to_json(engine_.temporal(tr)));
      });
    });
    server_.Post("/v1/ingest", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = parse_body(req);
        if (!body.is_object() || !body.contains("manifest") || !body.at("manifest").is_string()) {
          throw EngineError(EngineError::Kind::InvalidRequest, "ingest needs {\"manifest\": path}");
        }
        engine_.load(ingest_manifest(body.at("manifest").get<std::string>()));
        send(res, 200, {{"status", "ok"}, {"corpus", corpus_summary()}});
      });
    });
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        send(res, 200,
             {{"status", engine_.snapshot() ? "ok" : "no_corpus"},
              {"corpus", corpus_summary()},
              {"config", config_to_json(engine_.config())}});
      });
    });
    server_.Get(R"(/v1/keyframes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto snap = engine_.snapshot();
        if (!snap) {
          throw EngineError(EngineError::Kind::NoCorpus, "no corpus loaded");
        }
        const Keyframe* kf = snap->store->find_keyframe(req.matches[1].str());
        if (!kf) {
          throw EngineError(EngineError::Kind::NotFound, "unknown keyframe " + req.matches[1].str());
        }
        send(res, 200, serialize::to_json(*kf));
      });
    });
    if (static_dir_ && std::filesystem::is_directory(*static_dir_)) {
      server_.set_mount_point("/", static_dir_->string());
    }
  }

  Engine& engine_;
  std::optional<std::filesystem::path> static_dir_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace momentsearch
