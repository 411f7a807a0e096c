#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hopbench/error.hpp"

namespace hopbench {

enum class ClientErrc { Transport, BadResponse, SameClientConfigured, Config, UnsupportedMode };

inline const char* to_string(ClientErrc c) {
  switch (c) {
    case ClientErrc::Transport: return "ClientError";
    case ClientErrc::BadResponse: return "BadResponse";
    case ClientErrc::SameClientConfigured: return "SameClientConfigured";
    case ClientErrc::Config: return "ClientConfig";
    case ClientErrc::UnsupportedMode: return "UnsupportedMode";
  }
  return "ClientError";
}

using ClientError = CodedError<ClientErrc>;

struct TextRequest {
  std::string request_id;
  std::string instruction;
  std::string content;
};

// Single-turn text endpoint: instruction plus content in, text out.
class TextModelClient {
 public:
  virtual ~TextModelClient() = default;
  virtual std::string endpoint_id() const = 0;
  virtual std::string complete(const TextRequest& request) = 0;
};

struct PromptPart {
  enum class Type { Text, Image };
  Type type = Type::Text;
  std::string text;
  std::string bytes;
  std::string media_type;

  static PromptPart make_text(std::string t) { return {Type::Text, std::move(t), {}, {}}; }
  static PromptPart make_image(std::string b, std::string media) { return {Type::Image, {}, std::move(b), std::move(media)}; }
};

struct Prompt {
  std::string instance_id;
  std::string mode;
  std::vector<PromptPart> parts;

  std::size_t image_count() const {
    return static_cast<std::size_t>(
        std::count_if(parts.begin(), parts.end(), [](const PromptPart& p) { return p.type == PromptPart::Type::Image; }));
  }
  std::string text() const {
    std::string out;
    for (const auto& p : parts) {
      if (p.type == PromptPart::Type::Text) out += p.text;
    }
    return out;
  }
};

// Ordered text/image parts in, text out.
class MultimodalModelClient {
 public:
  virtual ~MultimodalModelClient() = default;
  virtual std::string endpoint_id() const = 0;
  virtual bool accepts_images() const { return true; }
  virtual std::string complete(const Prompt& prompt) = 0;
};

// Minimum spacing between calls to one endpoint, shared across threads.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds min_interval = std::chrono::milliseconds(0)) : interval_(min_interval) {}

  void acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard<std::mutex> lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::chrono::milliseconds interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

// One limiter per endpoint id.
class RateLimiterRegistry {
 public:
  RateLimiter& get(const std::string& endpoint, std::chrono::milliseconds interval) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& slot = limiters_[endpoint];
    if (!slot) slot = std::make_unique<RateLimiter>(interval);
    return *slot;
  }
  static RateLimiterRegistry& global() {
    static RateLimiterRegistry r;
    return r;
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};
};

// Calls fn until it succeeds or the policy is exhausted; the delay doubles
// after each failure. Only ClientError(Transport) is retried.
template <typename Fn>
auto with_retries(Fn&& fn, const RetryPolicy& policy, int* attempts_used = nullptr) -> decltype(fn()) {
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    if (attempts_used) *attempts_used = attempt;
    try {
      return fn();
    } catch (const ClientError& e) {
      if (e.code() != ClientErrc::Transport || attempt >= policy.attempts) throw;
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

// Runs fn(i) for i in [0, n) on at most `concurrency` threads and returns the
// results in index order. The first exception is rethrown after all workers
// have stopped.
template <typename T>
std::vector<T> parallel_map(std::size_t n, std::size_t concurrency, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  if (n == 0) return out;
  concurrency = std::max<std::size_t>(1, std::min(concurrency, n));
  if (concurrency == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < concurrency; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace hopbench
