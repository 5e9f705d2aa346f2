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

// Pre-decoding gate: answers "should this prompt be allowed to decode?"
// from its prefill state, over newline-delimited JSON on a TCP socket.
//
// Request (one JSON object per line):
//   {"request_id": "r1", "state_vector": [...],
//    "ref_embedding": [...]?, "retrieve": true?, "query_embedding": [...]?}
// Response (one line per request, same order as the requests):
//   {"request_id": "r1", "probability": 0.93, "decision": 1,
//    "action": "block", "retrieved_entry_id": "...", "latency_seconds": ...}
// or {"request_id": "r1", "error": "..."}.

#ifndef ISACL_SERVICE_HPP_
#define ISACL_SERVICE_HPP_

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "isacl/judge.hpp"
#include "isacl/refdb.hpp"

namespace isacl {

struct GateRequest {
  std::string request_id;
  std::vector<float> state_vector;
  std::optional<std::vector<float>> ref_embedding;
  bool retrieve = false;
  std::optional<std::vector<float>> query_embedding;
};

struct GateResponse {
  std::string request_id;
  double probability = 0.0;
  int decision = 0;
  std::optional<std::string> retrieved_entry_id;
  double latency_seconds = 0.0;
};

// Throws DataError on malformed JSON, missing/invalid fields or non-finite
// values. The message is suitable for an error response.
GateRequest parse_gate_request(std::string_view line);

std::string gate_response_to_json(const GateResponse& response);
std::string gate_error_to_json(std::string_view request_id,
                               std::string_view reason);

// Immutable after construction; safe to call from many threads.
class GateHandler {
 public:
  // Throws InvalidArgument when a reference database is supplied whose
  // embedding dim disagrees with a reference-augmented model.
  GateHandler(JudgeModel model, std::optional<ReferenceDatabase> refdb = {},
              std::optional<float> tau_override = {});

  GateResponse handle(const GateRequest& request) const;

  // Parses, handles and serializes one request line. Never throws: every
  // failure becomes an error response.
  std::string handle_line(std::string_view line) const;

  const JudgeModel& model() const { return model_; }
  const ReferenceDatabase* refdb() const {
    return refdb_ ? &*refdb_ : nullptr;
  }

 private:
  JudgeModel model_;
  std::optional<ReferenceDatabase> refdb_;
};

// Thread-per-connection TCP server. bind_address is "host:port"; port 0
// picks a free port (see port()).
class GateServer {
 public:
  GateServer(const GateHandler& handler, std::string bind_address);
  ~GateServer();
  GateServer(const GateServer&) = delete;
  GateServer& operator=(const GateServer&) = delete;

  // Binds and listens. Throws IoError.
  void start();
  std::uint16_t port() const { return port_; }

  // Accept loop; returns after stop() once every connection has closed.
  void run();

  // Async-signal-safe.
  void stop() { stop_.store(true); }
  bool stopping() const { return stop_.load(); }

  static constexpr std::size_t kMaxLineBytes = 16u << 20;

 private:
  struct Connection {
    int fd = -1;
    std::thread worker;
    std::atomic<bool> done{false};
  };

  void serve_connection(Connection& conn);
  void reap(bool all);

  const GateHandler& handler_;
  std::string bind_address_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::mutex mu_;
  std::list<Connection> connections_;
};

}  // namespace isacl

#endif  // ISACL_SERVICE_HPP_
