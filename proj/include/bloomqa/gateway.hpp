#ifndef BLOOMQA_GATEWAY_HPP
#define BLOOMQA_GATEWAY_HPP

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include <json.hpp>

#include "bloomqa/text.hpp"

namespace bloomqa {

struct GatewayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FixtureMissError : GatewayError {
  explicit FixtureMissError(const std::string& digest)
      : GatewayError("no fixture recorded for request digest " + digest),
        digest_(digest) {}
  const std::string& digest() const { return digest_; }

private:
  std::string digest_;
};

enum class TaskTag { Generation, Dialogue, Evaluation };

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.7;
  double top_p = 1.0;
  int max_tokens = 512;
  TaskTag task_tag = TaskTag::Generation;

  // Sampling presets per task. Generation: (0.7, 1.0, 512); dialogue:
  // (0.9, 1.0, 1024); evaluation: (0.0, 1.0, 32).
  static ChatRequest for_task(TaskTag tag, std::string system_prompt,
                              std::string user_prompt) {
    ChatRequest r;
    r.system_prompt = std::move(system_prompt);
    r.user_prompt = std::move(user_prompt);
    r.task_tag = tag;
    switch (tag) {
      case TaskTag::Generation:
        r.temperature = 0.7;
        r.top_p = 1.0;
        r.max_tokens = 512;
        break;
      case TaskTag::Dialogue:
        r.temperature = 0.9;
        r.top_p = 1.0;
        r.max_tokens = 1024;
        break;
      case TaskTag::Evaluation:
        r.temperature = 0.0;
        r.top_p = 1.0;
        r.max_tokens = 32;
        break;
    }
    return r;
  }

  // Fixture key: digest over everything that can change the response.
  std::string digest() const {
    nlohmann::ordered_json j;
    j["system_prompt"] = system_prompt;
    j["user_prompt"] = user_prompt;
    j["temperature"] = temperature;
    j["top_p"] = top_p;
    j["max_tokens"] = max_tokens;
    return hex64(fnv1a64(j.dump()));
  }
};

struct ChatResponse {
  std::string text;
  int attempt_count = 1;
  bool fixture_hit = false;
};

// Transport boundary: the only place that may touch the network. Live mode
// plugs in an HTTP transport; tests plug in scripted ones.
class Transport {
public:
  virtual ~Transport() = default;
  // Returns the raw completion text. Throws GatewayError on failure;
  // transient failures are retried by the gateway.
  virtual std::string send(const ChatRequest& request,
                           const std::string& model_id) = 0;
};

// Keyed line-delimited fixture store: one {"key", "response"} object per
// line. Read-concurrent, write-exclusive.
class FixtureStore {
public:
  FixtureStore() = default;

  static FixtureStore load(const std::string& path) {
    FixtureStore store;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GatewayError("cannot open fixture store: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::ordered_json j;
      try {
        j = nlohmann::ordered_json::parse(line);
      } catch (const std::exception& e) {
        throw GatewayError(path + ":" + std::to_string(lineno) +
                           ": malformed fixture: " + e.what());
      }
      store.put(j.at("key"), j.at("response"));
    }
    return store;
  }

  void save(const std::string& path) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GatewayError("cannot open fixture store for write: " + path);
    for (const auto& [key, response] : entries_) {
      nlohmann::ordered_json j;
      j["key"] = key;
      j["response"] = response;
      out << j.dump() << '\n';
    }
  }

  void put(const std::string& key, const std::string& response) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it != entries_.end() && it->second != response)
      throw GatewayError("fixture key collision with differing payloads: " + key);
    entries_[key] = response;
  }

  std::optional<std::string> get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;

public:
  FixtureStore(FixtureStore&& o) noexcept : entries_(std::move(o.entries_)) {}
  FixtureStore& operator=(FixtureStore&& o) noexcept {
    entries_ = std::move(o.entries_);
    return *this;
  }
};

enum class GatewayMode { Live, Replay };

struct GatewayOptions {
  GatewayMode mode = GatewayMode::Replay;
  int max_attempts = 3;
  // Backoff: base 1 s, factor 4 (1 s, 4 s). Disabled for tests/replay.
  std::chrono::milliseconds backoff_base{1000};
  double backoff_factor = 4.0;
  bool sleep_on_retry = true;
  // When set in live mode, every response is also recorded.
  FixtureStore* record_store = nullptr;
};

class Gateway {
public:
  // Replay gateway: all responses come from the store.
  explicit Gateway(const FixtureStore& store)
      : fixtures_(&store) {
    options_.mode = GatewayMode::Replay;
  }

  // Live gateway.
  Gateway(Transport& transport, GatewayOptions options)
      : transport_(&transport), options_(options) {
    options_.mode = GatewayMode::Live;
  }

  ChatResponse complete(const ChatRequest& request,
                        const std::string& model_id = "") {
    if (options_.mode == GatewayMode::Replay) {
      std::string key = request.digest();
      auto hit = fixtures_->get(key);
      if (!hit) throw FixtureMissError(key);
      return ChatResponse{*hit, 1, true};
    }
    std::string last_error;
    for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
      try {
        std::string text = transport_->send(request, model_id);
        if (options_.record_store)
          options_.record_store->put(request.digest(), text);
        return ChatResponse{text, attempt, false};
      } catch (const GatewayError& e) {
        last_error = e.what();
        if (attempt < options_.max_attempts && options_.sleep_on_retry) {
          auto delay = std::chrono::duration_cast<std::chrono::milliseconds>(
              options_.backoff_base *
              std::pow(options_.backoff_factor, attempt - 1));
          std::this_thread::sleep_for(delay);
        }
      }
    }
    throw GatewayError("all " + std::to_string(options_.max_attempts) +
                       " attempts failed: " + last_error);
  }

private:
  Transport* transport_ = nullptr;
  const FixtureStore* fixtures_ = nullptr;
  GatewayOptions options_;
};

}  // namespace bloomqa

#endif  // BLOOMQA_GATEWAY_HPP
