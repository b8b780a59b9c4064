#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nbr/types.hpp"

namespace nbr {

enum class Role { system, user, assistant };

std::string role_name(Role role);

struct ChatTurn {
  Role role;
  std::string content;  // non-empty

  bool operator==(const ChatTurn&) const = default;
};

// A training-split example pair shown to the model. Its utterance_id must be
// disjoint from every test utterance (checked at run assembly).
struct Demonstration {
  NBestList nbest;
  Words transcription;
};

enum class StrategyKind {
  zero_shot_scoring,
  zero_shot_reasoning,  // appends the canonical step-by-step instruction
  domain_hint,
  one_shot,
  few_shot,
  tap,  // multi-turn task-activating script
};

enum class HistoryMode { one_by_one, accumulating };

// Replay injects the canned assistant turns of the task-activating script so
// one request carries the whole conversation; live leaves them for the model
// to fill across sequential calls.
enum class TapMode { replay, live };

struct PromptStrategy {
  StrategyKind kind = StrategyKind::zero_shot_scoring;
  std::string domain;                // domain_hint and tap
  std::vector<Demonstration> demos;  // one_shot: 1, few_shot: >=1, tap: exactly 1
  HistoryMode history_mode = HistoryMode::one_by_one;
  TapMode tap_mode = TapMode::replay;

  void validate() const;  // demo-count invariants per kind
};

// What the strategy's responses are parsed as.
enum class OutputMode { scores, selection, correction };
OutputMode default_output_mode(StrategyKind kind);

// Prompt wording lives in template files ({{placeholder}} markers), loaded
// once per run so wording changes are diffable, not hard-coded. Placeholders:
// nbest_block, domain, demo_nbest_block, demo_transcription, n. Substitution
// is single-pass: values are emitted literally, never re-expanded.
class TemplateSet {
 public:
  static TemplateSet load_dir(const std::string& dir);

  // NBR_TEMPLATE_DIR from the environment, else the build-time default.
  static std::string default_dir();

  const std::string& get(const std::string& name) const;
  std::string render(const std::string& name,
                     const std::map<std::string, std::string>& values) const;

 private:
  std::map<std::string, std::string> files_;
};

// Hypotheses as the numbered block "1. <text>" .. "N. <text>" in rank order.
std::string nbest_block(const NBestList& list);

// Conversation context for one session: the strategy's fixed prefix plus any
// accumulated turns. Passed linearly; accumulating sessions must be driven
// sequentially.
struct ConversationState {
  HistoryMode mode = HistoryMode::one_by_one;
  std::vector<ChatTurn> base;     // strategy prefix
  std::vector<ChatTurn> history;  // accumulated (user, assistant) pairs

  std::size_t turn_count() const { return base.size() + history.size(); }
};

ConversationState init_session(const PromptStrategy& strategy, const TemplateSet& templates);

// Full turn sequence for one utterance: prefix + history + final user turn.
// Pure and byte-stable for identical inputs.
std::vector<ChatTurn> render(const PromptStrategy& strategy, const NBestList& list,
                             const ConversationState& session,
                             const TemplateSet& templates);

// The task-activating script: three fixed leading queries with replay-mode
// assistant turns, then the final query with the demonstration pair and the
// inference list substituted.
std::vector<ChatTurn> render_tap(const Demonstration& demo, const NBestList& list,
                                 const TemplateSet& templates, TapMode mode,
                                 const std::string& domain);

// The final user turn alone (what render() appends after the prefix).
ChatTurn final_user_turn(const PromptStrategy& strategy, const NBestList& list,
                         const TemplateSet& templates);

// one_by_one discards history; accumulating appends the utterance's user turn
// and the model reply.
ConversationState advance_history(ConversationState session, const PromptStrategy& strategy,
                                  const NBestList& list, const std::string& model_reply,
                                  const TemplateSet& templates);

}  // namespace nbr
