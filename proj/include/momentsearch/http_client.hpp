#pragma once

// Minimal JSON-over-HTTP POST helper used by the remote scorer and the LLM
// planner clients.

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <json.hpp>

namespace momentsearch::http {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // starts with '/'
};

inline Endpoint parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

class RequestError : public std::runtime_error {
 public:
  enum class Kind { Unreachable, Timeout, BadStatus, BadBody };
  RequestError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// POSTs `body` and parses the JSON reply. Throws RequestError.
inline nlohmann::json post_json(const std::string& url, const nlohmann::json& body, double timeout_s) {
  const Endpoint ep = parse_url(url);
  httplib::Client cli(ep.base);
  const auto usec = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(usec));
  cli.set_read_timeout(usec);
  cli.set_write_timeout(usec);
  auto res = cli.Post(ep.path, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                          ? RequestError::Kind::Timeout
                          : RequestError::Kind::Unreachable;
    throw RequestError(kind, "POST " + url + " failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw RequestError(RequestError::Kind::BadStatus, "POST " + url + " returned " + std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw RequestError(RequestError::Kind::BadBody, "POST " + url + ": invalid JSON: " + e.what());
  }
}

}  // namespace momentsearch::http
