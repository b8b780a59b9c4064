#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nbr/prompt.hpp"
#include "nbr/types.hpp"

namespace nbr {

struct LlmRequest {
  std::string model_name;
  std::vector<ChatTurn> turns;  // non-empty
  double temperature = 0.0;     // deterministic default
  int max_tokens = 512;
  std::string request_tag;  // utterance id, optionally "#suffix"-qualified
};

enum class FinishReason { stop, length, error };
enum class ErrorKind { none, transport, http_status, timeout, bad_request };

struct LlmResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  ErrorKind error_kind = ErrorKind::none;
  std::string error;  // set when finish_reason == error
  int attempts = 1;
  std::chrono::milliseconds latency{0};
  std::string raw_payload;  // original bytes, retained for audit

  bool ok() const { return finish_reason != FinishReason::error; }
};

// Shareable read-only handle; complete() / complete_batch() own all retry and
// parallelism logic around it.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  // One attempt; throws RetryableBackendError on transport/5xx/timeout and
  // BackendError on failures that must surface immediately.
  virtual LlmResponse complete_once(const LlmRequest& req) = 0;
  virtual std::string name() const = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  double jitter_frac = 0.1;  // delay scaled by 1 + jitter_frac * u
  uint64_t jitter_seed = 0;
  // Test seam; defaults to a real sleep.
  std::function<void(std::chrono::milliseconds)> sleeper;
};

// Completes with retries on retryable failures only; parseable 4xx surfaces
// immediately. Failures come back as finish_reason=error responses carrying
// the attempt count rather than exceptions, so batch slots stay independent.
LlmResponse complete(const LlmRequest& req, LlmBackend& backend,
                     const RetryPolicy& retry = {});

struct ConcurrencyPolicy {
  int max_in_flight = 1;
  bool fail_fast = false;
  RetryPolicy retry;
};

// Output order equals input order regardless of completion order; at most
// max_in_flight requests are outstanding at any time.
std::vector<LlmResponse> complete_batch(std::span<const LlmRequest> reqs,
                                        LlmBackend& backend,
                                        const ConcurrencyPolicy& policy);

// ---------------------------------------------------------------------------
// Deterministic in-process mock backend.

struct MockBehavior {
  enum class Mode {
    echo_oracle,  // returns the utterance's reference (requires references)
    scripted,     // fixture map request_tag -> response text
    rank_k,       // returns hypothesis k's text
    score_list,   // emits "1. v" .. "N. v" from score_fn
  };
  Mode mode = Mode::echo_oracle;
  int k = 1;
  std::map<std::string, std::string> script;
  std::function<double(const Hypothesis&, const NBestList&)> score_fn;
  uint64_t seed = 0;
  // When positive, each request sleeps a seeded pseudo-random 0..N-1 ms;
  // content never depends on timing.
  int latency_jitter_ms = 0;
};

// Snapshots the lists it needs (references, hypothesis texts) keyed by
// utterance id. A "#suffix" on the request tag is ignored for lookup.
std::unique_ptr<LlmBackend> make_mock_backend(MockBehavior behavior,
                                              std::span<const NBestList> lists);

// ---------------------------------------------------------------------------
// HTTP chat-completions backend.

struct HttpBackendConfig {
  std::string base_url;  // POST <base_url>/v1/chat/completions
  std::string api_key;   // sent as "Authorization: Bearer <key>" when set
  std::chrono::seconds timeout{60};
};

std::unique_ptr<LlmBackend> make_http_backend(HttpBackendConfig config);

}  // namespace nbr
