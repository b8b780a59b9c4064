#include "nbr/llm_client.hpp"

#include <atomic>
#include <charconv>
#include <thread>

#include "nbr/error.hpp"
#include "nbr/rng.hpp"

namespace nbr {

namespace {

uint64_t hash_str(const std::string& s) {
  // FNV-1a
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_score(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

LlmResponse complete(const LlmRequest& req, LlmBackend& backend, const RetryPolicy& retry) {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
  };
  const int max_attempts = retry.max_attempts < 1 ? 1 : retry.max_attempts;
  for (int attempt = 1;; ++attempt) {
    try {
      LlmResponse resp = backend.complete_once(req);
      resp.attempts = attempt;
      resp.latency = elapsed();
      return resp;
    } catch (const RetryableBackendError& e) {
      if (attempt >= max_attempts) {
        LlmResponse resp;
        resp.finish_reason = FinishReason::error;
        switch (e.kind()) {
          case RetryableBackendError::Kind::timeout:
            resp.error_kind = ErrorKind::timeout;
            break;
          case RetryableBackendError::Kind::http_status:
            resp.error_kind = ErrorKind::http_status;
            break;
          default:
            resp.error_kind = ErrorKind::transport;
        }
        resp.error = std::string(e.what()) + " (after " + std::to_string(attempt) +
                     " attempts)";
        resp.attempts = attempt;
        resp.latency = elapsed();
        return resp;
      }
      double delay_ms = static_cast<double>(retry.base_delay.count());
      for (int i = 1; i < attempt; ++i) delay_ms *= retry.factor;
      Rng jitter(mix_seed(retry.jitter_seed,
                          hash_str(req.request_tag) ^ static_cast<uint64_t>(attempt)));
      delay_ms *= 1.0 + retry.jitter_frac * jitter.uniform01();
      const auto delay = std::chrono::milliseconds(static_cast<long>(delay_ms));
      if (retry.sleeper)
        retry.sleeper(delay);
      else
        std::this_thread::sleep_for(delay);
    } catch (const BackendError& e) {
      LlmResponse resp;
      resp.finish_reason = FinishReason::error;
      resp.error_kind = ErrorKind::bad_request;
      resp.error = e.what();
      resp.attempts = attempt;
      resp.latency = elapsed();
      return resp;
    }
  }
}

std::vector<LlmResponse> complete_batch(std::span<const LlmRequest> reqs,
                                        LlmBackend& backend,
                                        const ConcurrencyPolicy& policy) {
  if (policy.max_in_flight < 1) throw Error("max_in_flight must be >= 1");
  std::vector<LlmResponse> results(reqs.size());
  if (reqs.empty()) return results;

  std::atomic<bool> aborted{false};
  auto run_slot = [&](std::size_t i) {
    if (aborted.load()) {
      results[i].finish_reason = FinishReason::error;
      results[i].error_kind = ErrorKind::transport;
      results[i].error = "aborted by fail-fast policy";
      return;
    }
    results[i] = complete(reqs[i], backend, policy.retry);
    if (!results[i].ok() && policy.fail_fast) aborted.store(true);
  };

  if (policy.max_in_flight == 1) {
    for (std::size_t i = 0; i < reqs.size(); ++i) run_slot(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::min(static_cast<std::size_t>(policy.max_in_flight), reqs.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= reqs.size()) return;
        run_slot(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
  return results;
}

// ---------------------------------------------------------------------------

namespace {

class MockBackend final : public LlmBackend {
 public:
  MockBackend(MockBehavior behavior, std::span<const NBestList> lists)
      : behavior_(std::move(behavior)) {
    for (const NBestList& list : lists) lists_.emplace(list.utterance_id, list);
  }

  std::string name() const override { return "mock"; }

  LlmResponse complete_once(const LlmRequest& req) override {
    if (req.turns.empty()) throw BackendError("mock: empty request");
    if (behavior_.latency_jitter_ms > 0) {
      Rng rng(mix_seed(behavior_.seed, hash_str(req.request_tag)));
      const auto ms = static_cast<long>(
          rng.below(static_cast<uint64_t>(behavior_.latency_jitter_ms)));
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
    LlmResponse resp;
    resp.text = respond(req);
    resp.finish_reason = FinishReason::stop;
    resp.raw_payload = resp.text;
    return resp;
  }

 private:
  const NBestList& list_for(const std::string& tag) const {
    const std::string id = tag.substr(0, tag.find('#'));
    const auto it = lists_.find(id);
    if (it == lists_.end())
      throw BackendError("mock: unknown utterance '" + id + "'");
    return it->second;
  }

  std::string respond(const LlmRequest& req) const {
    switch (behavior_.mode) {
      case MockBehavior::Mode::echo_oracle: {
        const NBestList& list = list_for(req.request_tag);
        if (!list.reference)
          throw BackendError("mock echo-oracle: utterance '" + list.utterance_id +
                             "' has no reference");
        return join_words(*list.reference);
      }
      case MockBehavior::Mode::scripted: {
        const auto it = behavior_.script.find(req.request_tag);
        if (it == behavior_.script.end())
          throw BackendError("mock scripted: no fixture for tag '" + req.request_tag + "'");
        return it->second;
      }
      case MockBehavior::Mode::rank_k: {
        const NBestList& list = list_for(req.request_tag);
        if (behavior_.k < 1 ||
            behavior_.k > static_cast<int>(list.hypotheses.size()))
          throw BackendError("mock rank-k: k=" + std::to_string(behavior_.k) +
                             " out of range for utterance '" + list.utterance_id + "'");
        return join_words(list.hypotheses[static_cast<std::size_t>(behavior_.k) - 1].text);
      }
      case MockBehavior::Mode::score_list: {
        const NBestList& list = list_for(req.request_tag);
        if (!behavior_.score_fn)
          throw BackendError("mock score-list: no score function configured");
        std::string out;
        for (std::size_t i = 0; i < list.hypotheses.size(); ++i) {
          if (i > 0) out += '\n';
          out += std::to_string(i + 1);
          out += ". ";
          out += format_score(behavior_.score_fn(list.hypotheses[i], list));
        }
        return out;
      }
    }
    throw BackendError("mock: unknown mode");
  }

  MockBehavior behavior_;
  std::map<std::string, NBestList> lists_;
};

}  // namespace

std::unique_ptr<LlmBackend> make_mock_backend(MockBehavior behavior,
                                              std::span<const NBestList> lists) {
  return std::make_unique<MockBackend>(std::move(behavior), lists);
}

}  // namespace nbr
