#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbr/llm_client.hpp"
#include "nbr/ngram.hpp"
#include "nbr/prompt.hpp"
#include "nbr/response_parser.hpp"
#include "nbr/types.hpp"
#include "nbr/wer.hpp"

namespace nbr {

// Shallow fusion of first-pass and LM scores, both natural-log scale.
struct FusionConfig {
  double lambda_lm = 0.0;
  bool use_acoustic = true;
};

// (acoustic if use_acoustic else 0) + lambda_lm * lm
double fuse(double acoustic, double lm, const FusionConfig& cfg);

// Fused argmax over one list given per-hypothesis natural-log LM scores.
// Ties go to the lowest rank, unless prefer_index is set and ties with the
// best score, in which case it wins (used to keep an appended correction).
std::size_t select_by_fused_scores(const NBestList& list, std::span<const double> lm_scores,
                                   const FusionConfig& cfg,
                                   std::optional<std::size_t> prefer_index = {});

// Rescoring selector backed by an ARPA model: ARPA log10 scores are converted
// to natural log at this boundary. Returns utterance_id -> 0-based index.
std::map<std::string, std::size_t> ngram_rescore(std::span<const NBestList> lists,
                                                 const NgramModel& model,
                                                 const FusionConfig& fusion,
                                                 const ScoreOptions& score_opts = {});

struct ParserStats {
  long clean = 0;
  long recovered = 0;
  long fallback = 0;

  long total() const { return clean + recovered + fallback; }
};

// One utterance's final decision.
struct RunChoice {
  std::optional<int> rank;  // 1-based rank in the post-processing list, when in-list
  Words text;               // the emitted transcription
  ParseNote note = ParseNote::clean;
  bool corrected = false;  // text came from the model, not the original list
};

struct RunResult {
  std::string pipeline;  // "p1" | "p2" | "ngram" | "first-pass"
  std::map<std::string, RunChoice> selections;
  std::optional<WerReport> wer_report;         // when every list has a reference
  std::optional<double> first_pass_corpus_wer;
  std::optional<double> oracle_corpus_wer;     // oracle of the lists as consumed
  ParserStats parser_stats;
  long llm_call_count = 0;

  double fallback_rate() const {
    return parser_stats.total() > 0
               ? static_cast<double>(parser_stats.fallback) / parser_stats.total()
               : 0.0;
  }
};

enum class CorrectionPlacement { augment, replace };

struct P1Config {
  // augment appends the corrected text as rank N+1 with the list's best
  // first-pass score, so oracle WER can only improve; replace substitutes the
  // whole list.
  CorrectionPlacement placement = CorrectionPlacement::augment;
  FusionConfig fusion;
  ScoreOptions lm_score;
  NormConfig norm;
  ConcurrencyPolicy concurrency;
  std::string model_name = "mock";
  double temperature = 0.0;
  int max_tokens = 512;
};

// Correction then local LM rescoring: one correction request per utterance
// over the whole N-best; backend failures fall back to the uncorrected list.
RunResult run_p1(std::span<const NBestList> lists, LlmBackend& backend,
                 const PromptStrategy& strategy, const TemplateSet& templates,
                 const NgramModel& lm, const P1Config& cfg);

struct P2Config {
  std::optional<OutputMode> output_mode;  // default: strategy's natural mode
  FusionConfig fusion;
  NormConfig norm;
  ConcurrencyPolicy concurrency;
  std::string model_name = "mock";
  double temperature = 0.0;
  int max_tokens = 512;
};

// Direct prompt-driven rescoring: scores are fused with the acoustic score,
// selections apply directly, corrections replace the output text; fallback
// keeps rank 1. Accumulating history and live task-activating sessions run
// strictly sequentially.
RunResult run_p2(std::span<const NBestList> lists, LlmBackend& backend,
                 const PromptStrategy& strategy, const TemplateSet& templates,
                 const P2Config& cfg);

// Demonstration ids must be disjoint from test ids; throws otherwise.
void check_demo_disjoint(const PromptStrategy& strategy, std::span<const NBestList> lists);

// Helper mirroring the demonstration pick used for few-shot runs: the k
// longest-reference training utterances, longest first.
std::vector<Demonstration> pick_demonstrations(std::span<const NBestList> training,
                                               std::size_t k);

// ---------------------------------------------------------------------------
// Hypotheses-to-transcription loss.

// P(reference | hypothesis context) in (0, 1].
using SequenceProbSource = std::function<double(const Words& reference, const Hypothesis&)>;

struct H2TConfig {
  double lambda_mse = 0.01;
  SequenceProbSource prob_source;
};

// Numeric core: sum_i [ -ln P_i + lambda * (s_i - P_i)^2 ], a non-negative
// penalty. P_i outside (0, 1] raises.
double h2t_loss_terms(std::span<const double> probs, std::span<const double> posteriors,
                      double lambda_mse);

// List-level wrapper: s_i is the softmax of first_pass_score over the list,
// P_i comes from cfg.prob_source against the reference.
double h2t_loss(const NBestList& list, const H2TConfig& cfg);

// An n-gram-backed probability source: P(reference) under the model,
// independent of the hypothesis context.
SequenceProbSource ngram_prob_source(const NgramModel& model, const ScoreOptions& opts = {});

// Softmax of first-pass scores within the list.
std::vector<double> hypothesis_posteriors(const NBestList& list);

// Expected word error under a posterior over the hypotheses:
// sum_i posterior_i * errors(ref, hyp_i) / ref_len. Posterior must sum to 1
// within 1e-9.
double expected_wer(const NBestList& list, std::span<const double> posterior);

// ---------------------------------------------------------------------------
// Stable serialization of run results (selections, per-utterance WER, parser
// stats, config echo). Identical runs serialize byte-identically.
std::string run_result_to_json(const RunResult& result, const std::string& run_name,
                               const std::string& config_echo_json);

}  // namespace nbr
