#include "nbr/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "nbr/align.hpp"
#include "nbr/error.hpp"

namespace nbr {

double fuse(double acoustic, double lm, const FusionConfig& cfg) {
  if (!std::isfinite(acoustic) || !std::isfinite(lm))
    throw Error("fuse: non-finite score");
  return (cfg.use_acoustic ? acoustic : 0.0) + cfg.lambda_lm * lm;
}

std::size_t select_by_fused_scores(const NBestList& list, std::span<const double> lm_scores,
                                   const FusionConfig& cfg,
                                   std::optional<std::size_t> prefer_index) {
  list.validate();
  if (lm_scores.size() != list.hypotheses.size())
    throw Error("select_by_fused_scores: LM score count mismatch for utterance '" +
                list.utterance_id + "'");
  std::size_t best = 0;
  double best_score = fuse(list.hypotheses[0].first_pass_score, lm_scores[0], cfg);
  for (std::size_t i = 1; i < list.hypotheses.size(); ++i) {
    const double s = fuse(list.hypotheses[i].first_pass_score, lm_scores[i], cfg);
    if (s > best_score || (prefer_index && i == *prefer_index && s == best_score)) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

namespace {

constexpr double kLn10 = 2.302585092994046;

std::vector<double> lm_scores_nat(const NBestList& list, const NgramModel& model,
                                  const ScoreOptions& opts) {
  std::vector<double> scores;
  scores.reserve(list.hypotheses.size());
  for (const Hypothesis& hyp : list.hypotheses)
    scores.push_back(score_sequence(model, hyp.text, opts) * kLn10);
  return scores;
}

}  // namespace

std::map<std::string, std::size_t> ngram_rescore(std::span<const NBestList> lists,
                                                 const NgramModel& model,
                                                 const FusionConfig& fusion,
                                                 const ScoreOptions& score_opts) {
  std::map<std::string, std::size_t> selector;
  for (const NBestList& list : lists)
    selector[list.utterance_id] =
        select_by_fused_scores(list, lm_scores_nat(list, model, score_opts), fusion);
  return selector;
}

void check_demo_disjoint(const PromptStrategy& strategy, std::span<const NBestList> lists) {
  std::set<std::string> test_ids;
  for (const NBestList& list : lists) test_ids.insert(list.utterance_id);
  for (const Demonstration& demo : strategy.demos)
    if (test_ids.count(demo.nbest.utterance_id))
      throw Error("demonstration utterance '" + demo.nbest.utterance_id +
                  "' appears in the test set");
}

std::vector<Demonstration> pick_demonstrations(std::span<const NBestList> training,
                                               std::size_t k) {
  std::vector<const NBestList*> with_ref;
  for (const NBestList& list : training)
    if (list.reference && !list.reference->empty()) with_ref.push_back(&list);
  std::stable_sort(with_ref.begin(), with_ref.end(),
                   [](const NBestList* a, const NBestList* b) {
                     return a->reference->size() > b->reference->size();
                   });
  std::vector<Demonstration> demos;
  for (std::size_t i = 0; i < with_ref.size() && i < k; ++i)
    demos.push_back({*with_ref[i], *with_ref[i]->reference});
  if (demos.size() < k)
    throw Error("requested " + std::to_string(k) + " demonstrations but only " +
                std::to_string(demos.size()) + " training utterances carry references");
  return demos;
}

namespace {

bool all_have_references(std::span<const NBestList> lists) {
  return std::all_of(lists.begin(), lists.end(), [](const NBestList& l) {
    return l.reference && !l.reference->empty();
  });
}

WerReport wer_of_choices(std::span<const NBestList> lists,
                         const std::map<std::string, RunChoice>& choices) {
  WerReport report;
  long total_errors = 0;
  for (const NBestList& list : lists) {
    const Words& ref = *list.reference;
    const RunChoice& choice = choices.at(list.utterance_id);
    UtteranceScore score;
    score.alignment = align(ref, choice.text);
    score.wer = utterance_wer(score.alignment);
    total_errors += score.alignment.errors();
    report.total_ref_words += score.alignment.ref_len;
    report.per_utterance.emplace(list.utterance_id, score);
  }
  report.corpus_wer = report.total_ref_words > 0
                          ? static_cast<double>(total_errors) / report.total_ref_words
                          : 0.0;
  return report;
}

// Sequential conversation drive for accumulating history or live
// task-activating sessions; returns raw responses in list order.
std::vector<LlmResponse> drive_sequential(std::span<const NBestList> lists,
                                          LlmBackend& backend,
                                          const PromptStrategy& strategy,
                                          const TemplateSet& templates,
                                          const std::string& model_name,
                                          double temperature, int max_tokens,
                                          const RetryPolicy& retry, long& call_count) {
  std::vector<LlmResponse> responses;
  responses.reserve(lists.size());
  ConversationState session = init_session(strategy, templates);
  const bool tap_live =
      strategy.kind == StrategyKind::tap && strategy.tap_mode == TapMode::live;
  for (const NBestList& list : lists) {
    LlmRequest req;
    req.model_name = model_name;
    req.temperature = temperature;
    req.max_tokens = max_tokens;
    if (tap_live) {
      // Three leading queries, each answered by the live model, then the
      // final query with the demonstration and inference list.
      std::vector<ChatTurn> turns = session.history;
      const auto queries = render_tap(strategy.demos.front(), list, templates,
                                      TapMode::live, strategy.domain);
      LlmResponse last;
      for (std::size_t q = 0; q < queries.size(); ++q) {
        turns.push_back(queries[q]);
        req.turns = turns;
        req.request_tag = list.utterance_id +
                          (q + 1 < queries.size() ? "#tap" + std::to_string(q + 1) : "");
        last = complete(req, backend, retry);
        ++call_count;
        if (!last.ok()) break;
        turns.push_back({Role::assistant, last.text});
      }
      responses.push_back(last);
      if (last.ok())
        session = advance_history(std::move(session), strategy, list, last.text, templates);
    } else {
      req.turns = render(strategy, list, session, templates);
      req.request_tag = list.utterance_id;
      LlmResponse resp = complete(req, backend, retry);
      ++call_count;
      if (resp.ok())
        session = advance_history(std::move(session), strategy, list, resp.text, templates);
      responses.push_back(std::move(resp));
    }
  }
  return responses;
}

std::vector<LlmResponse> gather_responses(std::span<const NBestList> lists,
                                          LlmBackend& backend,
                                          const PromptStrategy& strategy,
                                          const TemplateSet& templates,
                                          const std::string& model_name,
                                          double temperature, int max_tokens,
                                          const ConcurrencyPolicy& concurrency,
                                          long& call_count) {
  const bool sequential =
      strategy.history_mode == HistoryMode::accumulating ||
      (strategy.kind == StrategyKind::tap && strategy.tap_mode == TapMode::live);
  if (sequential)
    return drive_sequential(lists, backend, strategy, templates, model_name, temperature,
                            max_tokens, concurrency.retry, call_count);

  const ConversationState session = init_session(strategy, templates);
  std::vector<LlmRequest> reqs;
  reqs.reserve(lists.size());
  for (const NBestList& list : lists) {
    LlmRequest req;
    req.model_name = model_name;
    req.temperature = temperature;
    req.max_tokens = max_tokens;
    req.turns = render(strategy, list, session, templates);
    req.request_tag = list.utterance_id;
    reqs.push_back(std::move(req));
  }
  auto responses = complete_batch(reqs, backend, concurrency);
  call_count += static_cast<long>(responses.size());
  return responses;
}

}  // namespace

RunResult run_p1(std::span<const NBestList> lists, LlmBackend& backend,
                 const PromptStrategy& strategy, const TemplateSet& templates,
                 const NgramModel& lm, const P1Config& cfg) {
  strategy.validate();
  check_demo_disjoint(strategy, lists);
  if (default_output_mode(strategy.kind) != OutputMode::correction)
    throw Error("run_p1 requires a correction-producing strategy");

  RunResult result;
  result.pipeline = "p1";

  const auto responses =
      gather_responses(lists, backend, strategy, templates, cfg.model_name,
                       cfg.temperature, cfg.max_tokens, cfg.concurrency,
                       result.llm_call_count);

  // Post-correction lists; parse failures and backend errors keep the
  // original list and count as fallbacks.
  std::vector<NBestList> consumed;
  std::vector<std::optional<std::size_t>> corrected_index(lists.size());
  std::vector<ParseNote> notes(lists.size(), ParseNote::fallback);
  consumed.reserve(lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) {
    const NBestList& original = lists[i];
    ParsedLlmOutput parsed;
    if (responses[i].ok()) parsed = parse_correction(responses[i].text, cfg.norm);
    if (parsed.is_fallback()) {
      ++result.parser_stats.fallback;
      consumed.push_back(original);
      continue;
    }
    const Words corrected = std::get<Correction>(*parsed.payload).text;
    notes[i] = parsed.note;
    if (parsed.note == ParseNote::clean)
      ++result.parser_stats.clean;
    else
      ++result.parser_stats.recovered;

    NBestList copy = original;
    double best_score = copy.hypotheses.front().first_pass_score;
    for (const Hypothesis& h : copy.hypotheses)
      best_score = std::max(best_score, h.first_pass_score);
    if (cfg.placement == CorrectionPlacement::replace) {
      copy.hypotheses = {{corrected, best_score, 1}};
      corrected_index[i] = 0;
    } else {
      copy.hypotheses.push_back(
          {corrected, best_score, static_cast<int>(copy.hypotheses.size()) + 1});
      corrected_index[i] = copy.hypotheses.size() - 1;
    }
    consumed.push_back(std::move(copy));
  }

  for (std::size_t i = 0; i < consumed.size(); ++i) {
    const NBestList& list = consumed[i];
    const std::size_t idx = select_by_fused_scores(
        list, lm_scores_nat(list, lm, cfg.lm_score), cfg.fusion, corrected_index[i]);
    RunChoice choice;
    choice.rank = static_cast<int>(idx) + 1;
    choice.text = list.hypotheses[idx].text;
    choice.corrected = corrected_index[i] && idx == *corrected_index[i];
    choice.note = notes[i];
    result.selections.emplace(list.utterance_id, std::move(choice));
  }

  if (all_have_references(lists)) {
    result.first_pass_corpus_wer = first_pass_wer(lists).corpus_wer;
    result.oracle_corpus_wer = oracle_wer(consumed).corpus_wer;
    result.wer_report = wer_of_choices(lists, result.selections);
  }
  return result;
}

RunResult run_p2(std::span<const NBestList> lists, LlmBackend& backend,
                 const PromptStrategy& strategy, const TemplateSet& templates,
                 const P2Config& cfg) {
  strategy.validate();
  check_demo_disjoint(strategy, lists);
  const OutputMode mode = cfg.output_mode.value_or(default_output_mode(strategy.kind));

  RunResult result;
  result.pipeline = "p2";

  const auto responses =
      gather_responses(lists, backend, strategy, templates, cfg.model_name,
                       cfg.temperature, cfg.max_tokens, cfg.concurrency,
                       result.llm_call_count);

  for (std::size_t i = 0; i < lists.size(); ++i) {
    const NBestList& list = lists[i];
    RunChoice choice;
    ParsedLlmOutput parsed;
    if (responses[i].ok()) {
      switch (mode) {
        case OutputMode::scores:
          parsed = parse_scores(responses[i].text, list.hypotheses.size());
          break;
        case OutputMode::selection: {
          std::vector<Words> texts;
          texts.reserve(list.hypotheses.size());
          for (const Hypothesis& h : list.hypotheses) texts.push_back(h.text);
          parsed = parse_selection(responses[i].text, texts);
          break;
        }
        case OutputMode::correction:
          parsed = parse_correction(responses[i].text, cfg.norm);
          break;
      }
    }

    if (parsed.is_fallback()) {
      ++result.parser_stats.fallback;
      choice.rank = 1;
      choice.text = list.hypotheses.front().text;
      choice.note = ParseNote::fallback;
    } else {
      if (parsed.note == ParseNote::clean)
        ++result.parser_stats.clean;
      else
        ++result.parser_stats.recovered;
      choice.note = parsed.note;
      if (const auto* scores = std::get_if<Scores>(&*parsed.payload)) {
        const std::size_t idx = select_by_fused_scores(list, scores->values, cfg.fusion);
        choice.rank = static_cast<int>(idx) + 1;
        choice.text = list.hypotheses[idx].text;
      } else if (const auto* selection = std::get_if<Selection>(&*parsed.payload)) {
        const auto idx = static_cast<std::size_t>(selection->index - 1);
        choice.rank = selection->index;
        choice.text = list.hypotheses[idx].text;
      } else {
        choice.text = std::get<Correction>(*parsed.payload).text;
        choice.corrected = true;
      }
    }
    result.selections.emplace(list.utterance_id, std::move(choice));
  }

  if (all_have_references(lists)) {
    result.first_pass_corpus_wer = first_pass_wer(lists).corpus_wer;
    result.oracle_corpus_wer = oracle_wer(lists).corpus_wer;
    result.wer_report = wer_of_choices(lists, result.selections);
  }
  return result;
}

// ---------------------------------------------------------------------------

double h2t_loss_terms(std::span<const double> probs, std::span<const double> posteriors,
                      double lambda_mse) {
  if (probs.size() != posteriors.size())
    throw Error("h2t_loss: probability and posterior counts differ");
  if (probs.empty()) throw Error("h2t_loss: empty hypothesis list");
  if (lambda_mse < 0) throw Error("h2t_loss: lambda must be >= 0");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p > 0.0) || p > 1.0)
      throw Error("h2t_loss: probability " + std::to_string(p) + " outside (0, 1]");
    const double diff = posteriors[i] - p;
    total += -std::log(p) + lambda_mse * diff * diff;
  }
  return total;
}

std::vector<double> hypothesis_posteriors(const NBestList& list) {
  list.validate();
  double max_score = list.hypotheses.front().first_pass_score;
  for (const Hypothesis& h : list.hypotheses)
    max_score = std::max(max_score, h.first_pass_score);
  std::vector<double> post;
  post.reserve(list.hypotheses.size());
  double z = 0.0;
  for (const Hypothesis& h : list.hypotheses) {
    const double e = std::exp(h.first_pass_score - max_score);
    post.push_back(e);
    z += e;
  }
  for (double& p : post) p /= z;
  return post;
}

double h2t_loss(const NBestList& list, const H2TConfig& cfg) {
  if (!list.reference || list.reference->empty())
    throw Error("h2t_loss: utterance '" + list.utterance_id + "' has no reference");
  if (!cfg.prob_source) throw Error("h2t_loss: no probability source configured");
  std::vector<double> probs;
  probs.reserve(list.hypotheses.size());
  for (const Hypothesis& h : list.hypotheses)
    probs.push_back(cfg.prob_source(*list.reference, h));
  return h2t_loss_terms(probs, hypothesis_posteriors(list), cfg.lambda_mse);
}

SequenceProbSource ngram_prob_source(const NgramModel& model, const ScoreOptions& opts) {
  return [&model, opts](const Words& reference, const Hypothesis&) {
    return std::pow(10.0, score_sequence(model, reference, opts));
  };
}

double expected_wer(const NBestList& list, std::span<const double> posterior) {
  if (!list.reference || list.reference->empty())
    throw Error("expected_wer: utterance '" + list.utterance_id + "' has no reference");
  list.validate();
  if (posterior.size() != list.hypotheses.size())
    throw Error("expected_wer: posterior size mismatch");
  double sum = 0.0;
  for (double p : posterior) sum += p;
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error("expected_wer: posterior sums to " + std::to_string(sum) + ", not 1");
  const auto ref_len = static_cast<double>(list.reference->size());
  double expected = 0.0;
  for (std::size_t i = 0; i < list.hypotheses.size(); ++i)
    expected += posterior[i] *
                align(*list.reference, list.hypotheses[i].text).errors() / ref_len;
  return expected;
}

// ---------------------------------------------------------------------------

std::string run_result_to_json(const RunResult& result, const std::string& run_name,
                               const std::string& config_echo_json) {
  nlohmann::ordered_json doc;
  doc["run_name"] = run_name;
  doc["pipeline"] = result.pipeline;
  doc["config"] = config_echo_json.empty()
                      ? nlohmann::ordered_json::object()
                      : nlohmann::ordered_json::parse(config_echo_json);
  doc["llm_call_count"] = result.llm_call_count;
  doc["parser_stats"] = {{"clean", result.parser_stats.clean},
                         {"recovered", result.parser_stats.recovered},
                         {"fallback", result.parser_stats.fallback}};
  doc["fallback_rate"] = result.fallback_rate();

  auto& selections = doc["selections"] = nlohmann::ordered_json::object();
  for (const auto& [id, choice] : result.selections) {
    nlohmann::ordered_json entry;
    entry["rank"] = choice.rank ? nlohmann::ordered_json(*choice.rank)
                                : nlohmann::ordered_json(nullptr);
    entry["text"] = join_words(choice.text);
    entry["note"] = parse_note_name(choice.note);
    entry["corrected"] = choice.corrected;
    selections[id] = std::move(entry);
  }

  if (result.wer_report) {
    auto& wer = doc["wer"];
    wer["corpus_wer"] = result.wer_report->corpus_wer;
    wer["total_ref_words"] = result.wer_report->total_ref_words;
    wer["first_pass_corpus_wer"] = result.first_pass_corpus_wer
                                       ? nlohmann::ordered_json(*result.first_pass_corpus_wer)
                                       : nlohmann::ordered_json(nullptr);
    wer["oracle_corpus_wer"] = result.oracle_corpus_wer
                                   ? nlohmann::ordered_json(*result.oracle_corpus_wer)
                                   : nlohmann::ordered_json(nullptr);
    auto& per = wer["per_utterance"] = nlohmann::ordered_json::object();
    for (const auto& [id, score] : result.wer_report->per_utterance) {
      per[id] = {{"substitutions", score.alignment.substitutions},
                 {"insertions", score.alignment.insertions},
                 {"deletions", score.alignment.deletions},
                 {"ref_len", score.alignment.ref_len},
                 {"wer", score.wer}};
    }
  } else {
    doc["wer"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

}  // namespace nbr
