#include "nbr/prompt.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nbr/error.hpp"

#ifndef NBR_DEFAULT_TEMPLATE_DIR
#define NBR_DEFAULT_TEMPLATE_DIR "templates"
#endif

namespace nbr {

std::string role_name(Role role) {
  switch (role) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

void PromptStrategy::validate() const {
  switch (kind) {
    case StrategyKind::one_shot:
      if (demos.size() != 1)
        throw Error("one-shot strategy requires exactly one demonstration");
      break;
    case StrategyKind::few_shot:
      if (demos.empty())
        throw Error("few-shot strategy requires at least one demonstration");
      break;
    case StrategyKind::tap:
      if (demos.size() != 1)
        throw Error("task-activating strategy requires exactly one in-domain demonstration");
      break;
    case StrategyKind::domain_hint:
      if (domain.empty()) throw Error("domain-hint strategy requires a domain label");
      break;
    default:
      break;
  }
}

OutputMode default_output_mode(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::zero_shot_scoring:
    case StrategyKind::zero_shot_reasoning:
    case StrategyKind::domain_hint:
      return OutputMode::scores;
    case StrategyKind::one_shot:
    case StrategyKind::few_shot:
    case StrategyKind::tap:
      return OutputMode::correction;
  }
  return OutputMode::scores;
}

TemplateSet TemplateSet::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  TemplateSet set;
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw FormatError("template directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    std::string text = body.str();
    // One trailing newline (LF or CRLF) is layout, not content.
    if (!text.empty() && text.back() == '\n') text.pop_back();
    if (!text.empty() && text.back() == '\r') text.pop_back();
    set.files_[entry.path().stem().string()] = std::move(text);
  }
  if (set.files_.empty())
    throw FormatError("template directory has no .txt files: " + dir);
  return set;
}

std::string TemplateSet::default_dir() {
  if (const char* env = std::getenv("NBR_TEMPLATE_DIR"); env && *env) return env;
  return NBR_DEFAULT_TEMPLATE_DIR;
}

const std::string& TemplateSet::get(const std::string& name) const {
  const auto it = files_.find(name);
  if (it == files_.end()) throw FormatError("missing template: " + name + ".txt");
  return it->second;
}

std::string TemplateSet::render(const std::string& name,
                                const std::map<std::string, std::string>& values) const {
  const std::string& tpl = get(name);
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const std::size_t open = tpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tpl, pos, std::string::npos);
      break;
    }
    const std::size_t close = tpl.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(tpl, pos, std::string::npos);
      break;
    }
    out.append(tpl, pos, open - pos);
    const std::string key = tpl.substr(open + 2, close - open - 2);
    const auto it = values.find(key);
    if (it == values.end())
      throw FormatError("template '" + name + "': unknown placeholder {{" + key + "}}");
    out += it->second;  // emitted literally, never re-scanned
    pos = close + 2;
  }
  return out;
}

std::string nbest_block(const NBestList& list) {
  std::string block;
  for (std::size_t i = 0; i < list.hypotheses.size(); ++i) {
    if (i > 0) block += '\n';
    block += std::to_string(i + 1);
    block += ". ";
    block += join_words(list.hypotheses[i].text);
  }
  return block;
}

namespace {

std::string tap_domain(const PromptStrategy& strategy) {
  return strategy.domain.empty() ? "the target domain" : strategy.domain;
}

std::vector<ChatTurn> demo_turns(const Demonstration& demo, const TemplateSet& templates) {
  return {
      {Role::user,
       templates.render("demo_user",
                        {{"n", std::to_string(demo.nbest.hypotheses.size())},
                         {"demo_nbest_block", nbest_block(demo.nbest)}})},
      {Role::assistant,
       templates.render("demo_assistant",
                        {{"demo_transcription", join_words(demo.transcription)}})},
  };
}

}  // namespace

ConversationState init_session(const PromptStrategy& strategy, const TemplateSet& templates) {
  strategy.validate();
  ConversationState session;
  session.mode = strategy.history_mode;
  switch (strategy.kind) {
    case StrategyKind::zero_shot_scoring:
    case StrategyKind::zero_shot_reasoning:
      session.base.push_back({Role::system, templates.get("system_scoring")});
      break;
    case StrategyKind::domain_hint:
      session.base.push_back(
          {Role::system,
           templates.render("system_domain_hint", {{"domain", strategy.domain}})});
      break;
    case StrategyKind::one_shot:
    case StrategyKind::few_shot:
      session.base.push_back({Role::system, templates.get("system_correction")});
      for (const Demonstration& demo : strategy.demos)
        for (ChatTurn& turn : demo_turns(demo, templates))
          session.base.push_back(std::move(turn));
      break;
    case StrategyKind::tap:
      if (strategy.tap_mode == TapMode::replay) {
        session.base.push_back({Role::user, templates.get("tap_query_1")});
        session.base.push_back({Role::assistant, templates.get("tap_reply_1")});
        session.base.push_back({Role::user, templates.get("tap_query_2")});
        session.base.push_back({Role::assistant, templates.get("tap_reply_2")});
        session.base.push_back({Role::user, templates.get("tap_query_3")});
        session.base.push_back({Role::assistant, templates.get("tap_reply_3")});
      }
      // live mode: the pipeline interleaves real replies between the queries
      break;
  }
  return session;
}

ChatTurn final_user_turn(const PromptStrategy& strategy, const NBestList& list,
                         const TemplateSet& templates) {
  list.validate();
  const std::string n = std::to_string(list.hypotheses.size());
  const std::string block = nbest_block(list);
  switch (strategy.kind) {
    case StrategyKind::zero_shot_scoring:
    case StrategyKind::domain_hint:
      return {Role::user,
              templates.render("user_scoring", {{"n", n}, {"nbest_block", block}})};
    case StrategyKind::zero_shot_reasoning:
      return {Role::user,
              templates.render("user_scoring_cot", {{"n", n}, {"nbest_block", block}})};
    case StrategyKind::one_shot:
    case StrategyKind::few_shot:
      return {Role::user,
              templates.render("user_correction", {{"n", n}, {"nbest_block", block}})};
    case StrategyKind::tap: {
      if (strategy.demos.empty())
        throw Error("task-activating prompt rendered without a demonstration");
      const Demonstration& demo = strategy.demos.front();
      return {Role::user,
              templates.render(
                  "tap_query_final",
                  {{"domain", tap_domain(strategy)},
                   {"demo_nbest_block", nbest_block(demo.nbest)},
                   {"demo_transcription", join_words(demo.transcription)},
                   {"nbest_block", block}})};
    }
  }
  throw Error("unknown prompt strategy");
}

std::vector<ChatTurn> render(const PromptStrategy& strategy, const NBestList& list,
                             const ConversationState& session,
                             const TemplateSet& templates) {
  strategy.validate();
  std::vector<ChatTurn> turns = session.base;
  turns.insert(turns.end(), session.history.begin(), session.history.end());
  turns.push_back(final_user_turn(strategy, list, templates));
  return turns;
}

std::vector<ChatTurn> render_tap(const Demonstration& demo, const NBestList& list,
                                 const TemplateSet& templates, TapMode mode,
                                 const std::string& domain) {
  PromptStrategy strategy;
  strategy.kind = StrategyKind::tap;
  strategy.demos = {demo};
  strategy.domain = domain;
  strategy.tap_mode = mode;
  if (mode == TapMode::replay)
    return render(strategy, list, init_session(strategy, templates), templates);
  return {{Role::user, templates.get("tap_query_1")},
          {Role::user, templates.get("tap_query_2")},
          {Role::user, templates.get("tap_query_3")},
          final_user_turn(strategy, list, templates)};
}

ConversationState advance_history(ConversationState session, const PromptStrategy& strategy,
                                  const NBestList& list, const std::string& model_reply,
                                  const TemplateSet& templates) {
  if (session.mode == HistoryMode::one_by_one) {
    session.history.clear();
    return session;
  }
  session.history.push_back(final_user_turn(strategy, list, templates));
  session.history.push_back({Role::assistant, model_reply});
  return session;
}

}  // namespace nbr
