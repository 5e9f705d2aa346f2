// Copyright 2026 The ISACL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "isacl/service.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "isacl/error.hpp"
#include "json.hpp"

namespace isacl {
namespace {

using nlohmann::json;

constexpr int kPollMillis = 100;

std::vector<float> float_array(const json& obj, const char* key) {
  const auto& arr = obj.at(key);
  if (!arr.is_array()) {
    throw DataError(std::string("'") + key + "' must be an array of numbers");
  }
  std::vector<float> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) {
      throw DataError(std::string("'") + key + "' must contain only numbers");
    }
    const double d = v.get<double>();
    const auto f = static_cast<float>(d);
    if (!std::isfinite(d) || !std::isfinite(f)) {
      throw DataError(std::string("'") + key + "' contains a non-finite value");
    }
    out.push_back(f);
  }
  if (out.empty()) throw DataError(std::string("'") + key + "' is empty");
  return out;
}

// Best-effort id extraction for error responses.
std::string salvage_request_id(std::string_view line) {
  try {
    auto j = json::parse(line);
    if (j.is_object() && j.contains("request_id")) {
      const auto& id = j["request_id"];
      return id.is_string() ? id.get<std::string>() : id.dump();
    }
  } catch (const std::exception&) {
  }
  return "";
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

GateRequest parse_gate_request(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error&) {
    throw DataError("malformed JSON request");
  }
  if (!obj.is_object()) throw DataError("request must be a JSON object");
  GateRequest req;
  if (auto it = obj.find("request_id"); it != obj.end()) {
    req.request_id = it->is_string() ? it->get<std::string>() : it->dump();
  } else {
    throw DataError("missing 'request_id'");
  }
  if (!obj.contains("state_vector")) throw DataError("missing 'state_vector'");
  req.state_vector = float_array(obj, "state_vector");
  if (obj.contains("ref_embedding") && !obj["ref_embedding"].is_null()) {
    req.ref_embedding = float_array(obj, "ref_embedding");
  }
  if (obj.contains("retrieve") && !obj["retrieve"].is_null()) {
    if (!obj["retrieve"].is_boolean()) {
      throw DataError("'retrieve' must be a boolean");
    }
    req.retrieve = obj["retrieve"].get<bool>();
  }
  if (obj.contains("query_embedding") && !obj["query_embedding"].is_null()) {
    req.query_embedding = float_array(obj, "query_embedding");
  }
  if (req.retrieve && !req.query_embedding) {
    throw DataError("'retrieve' requires 'query_embedding'");
  }
  return req;
}

std::string gate_response_to_json(const GateResponse& r) {
  json j = {{"request_id", r.request_id},
            {"probability", r.probability},
            {"decision", r.decision},
            {"action", r.decision == 1 ? "block" : "allow"},
            {"latency_seconds", r.latency_seconds}};
  if (r.retrieved_entry_id) j["retrieved_entry_id"] = *r.retrieved_entry_id;
  return j.dump();
}

std::string gate_error_to_json(std::string_view request_id,
                               std::string_view reason) {
  return json{{"request_id", request_id}, {"error", reason}}.dump();
}

GateHandler::GateHandler(JudgeModel model,
                         std::optional<ReferenceDatabase> refdb,
                         std::optional<float> tau_override)
    : model_(std::move(model)), refdb_(std::move(refdb)) {
  if (tau_override) {
    if (!(*tau_override > 0.0f && *tau_override < 1.0f)) {
      throw InvalidArgument("tau override must lie in (0, 1)");
    }
    model_.tau = *tau_override;
  }
  if (refdb_ && model_.provenance.with_reference &&
      refdb_->embedding_dim() != model_.provenance.reference_dim) {
    throw InvalidArgument(
        "reference database embedding dim " +
        std::to_string(refdb_->embedding_dim()) +
        " does not match the model's reference dim " +
        std::to_string(model_.provenance.reference_dim));
  }
}

GateResponse GateHandler::handle(const GateRequest& req) const {
  const auto start = std::chrono::steady_clock::now();
  GateResponse resp;
  resp.request_id = req.request_id;

  std::optional<std::span<const float>> reference;
  if (req.ref_embedding) reference = std::span<const float>(*req.ref_embedding);
  if (req.retrieve && !req.ref_embedding) {
    if (!refdb_) throw DataError("retrieval requested but no refdb is loaded");
    const auto hit = refdb_->search(*req.query_embedding);
    resp.retrieved_entry_id = hit.entry->id;
    reference = std::span<const float>(hit.entry->embedding);
  }
  if (model_.provenance.with_reference && !reference) {
    throw DataError("model needs a reference: send ref_embedding or "
                    "retrieve with query_embedding");
  }
  if (req.state_vector.size() != model_.state_dim()) {
    throw DimensionError("state_vector has " +
                         std::to_string(req.state_vector.size()) +
                         " values, model expects " +
                         std::to_string(model_.state_dim()));
  }
  const auto p = predict(model_, req.state_vector, reference);
  resp.probability = p.probability;
  resp.decision = p.decision;
  resp.latency_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return resp;
}

std::string GateHandler::handle_line(std::string_view line) const {
  std::string id;
  try {
    auto req = parse_gate_request(line);
    id = req.request_id;
    return gate_response_to_json(handle(req));
  } catch (const std::exception& e) {
    if (id.empty()) id = salvage_request_id(line);
    return gate_error_to_json(id, e.what());
  }
}

GateServer::GateServer(const GateHandler& handler, std::string bind_address)
    : handler_(handler), bind_address_(std::move(bind_address)) {}

GateServer::~GateServer() {
  stop();
  reap(true);
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void GateServer::start() {
  const auto colon = bind_address_.rfind(':');
  if (colon == std::string::npos) {
    throw InvalidArgument("bind address must be host:port, got '" +
                          bind_address_ + "'");
  }
  std::string host = bind_address_.substr(0, colon);
  const std::string port = bind_address_.substr(colon + 1);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  }

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(),
                             port.c_str(), &hints, &res);
      rc != 0) {
    throw IoError("cannot resolve " + bind_address_ + ": " + gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);

  int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd, 512) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw IoError("cannot listen on " + bind_address_ + ": " + err);
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  } else if (addr.ss_family == AF_INET6) {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  }
  listen_fd_ = fd;
}

void GateServer::run() {
  if (listen_fd_ < 0) start();
  while (!stop_.load()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, kPollMillis);
    reap(false);
    if (rc <= 0 || !(pfd.revents & POLLIN)) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(mu_);
    auto& conn = connections_.emplace_back();
    conn.fd = fd;
    conn.worker = std::thread([this, &conn] { serve_connection(conn); });
  }
  ::close(listen_fd_);
  listen_fd_ = -1;
  reap(true);
}

void GateServer::serve_connection(Connection& conn) {
  std::string buffer;
  char chunk[8192];
  bool open = true;
  auto flush_lines = [&]() -> bool {
    std::size_t pos;
    while ((pos = buffer.find('\n')) != std::string::npos) {
      std::string_view line(buffer.data(), pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.find_first_not_of(" \t") != std::string_view::npos) {
        if (!send_all(conn.fd, handler_.handle_line(line) + "\n")) return false;
      }
      buffer.erase(0, pos + 1);
    }
    return true;
  };
  while (open && !stop_.load()) {
    pollfd pfd{conn.fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, kPollMillis);
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    ssize_t n = ::recv(conn.fd, chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) {
      // Peer closed; answer a final unterminated line if present.
      if (buffer.find_first_not_of(" \t\r") != std::string::npos) buffer += '\n';
      flush_lines();
      break;
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
    if (!flush_lines()) break;
    if (buffer.size() > kMaxLineBytes) {
      send_all(conn.fd, gate_error_to_json("", "request line too long") + "\n");
      open = false;
    }
  }
  ::shutdown(conn.fd, SHUT_RDWR);
  ::close(conn.fd);
  conn.done.store(true);
}

void GateServer::reap(bool all) {
  std::lock_guard lock(mu_);
  for (auto it = connections_.begin(); it != connections_.end();) {
    if (all || it->done.load()) {
      if (it->worker.joinable()) it->worker.join();
      it = connections_.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace isacl
