#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "momentsearch/corpus.hpp"

namespace fixtures {

using momentsearch::CorpusData;

/// One video "v1" with one shot per keyframe, each keyframe at the given time.
inline CorpusData toy_corpus(const std::vector<std::pair<std::string, std::string>>& id_caption,
                             double spacing = 10.0) {
  CorpusData d;
  d.videos.push_back({"v1", "toy", spacing * static_cast<double>(id_caption.size() + 1)});
  for (std::size_t i = 0; i < id_caption.size(); ++i) {
    const double t = spacing * static_cast<double>(i + 1);
    const std::string shot = "v1_s" + std::to_string(i);
    d.shots.push_back({shot, "v1", t - 1.0, t + 1.0});
    d.keyframes.push_back({id_caption[i].first, shot, "v1", t, id_caption[i].second, std::nullopt});
  }
  return d;
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("momentsearch_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Minimal JSON POST server on 127.0.0.1 with a random port.
class StubServer {
 public:
  using Handler = std::function<void(const nlohmann::json&, httplib::Response&)>;

  explicit StubServer(Handler h) : handler_(std::move(h)) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      last_body_ = req.body;
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (...) {
        res.status = 400;
        return;
      }
      handler_(body, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path = "/") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  int calls() const { return calls_; }
  std::string last_body() const { return last_body_; }

  static void reply(httplib::Response& res, const nlohmann::json& j) {
    res.set_content(j.dump(), "application/json");
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_body_;
};

// Port 1 on loopback: nothing listens, connections are refused at once.
inline const std::string kUnreachable = "http://127.0.0.1:1/";

}  // namespace fixtures
