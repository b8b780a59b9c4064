#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nbr/error.hpp"
#include "nbr/prompt.hpp"
#include "support/testutil.hpp"

using namespace nbr;
using nbr::test::read_file;
using nbr::test::read_golden;
using nbr::test::turns_to_text;
using nbr::test::words;

namespace {

const TemplateSet& templates() {
  static const TemplateSet set = TemplateSet::load_dir(nbr::test::template_dir());
  return set;
}

NBestList test_list() {
  NBestList list;
  list.utterance_id = "test-1";
  list.reference = words("list all fares from denver to boston");
  list.hypotheses = {
      {words("list all fares from denver to boston"), -1.0, 1},
      {words("list all fare from denver to boston"), -2.0, 2},
  };
  return list;
}

Demonstration demo() {
  Demonstration d;
  d.nbest.utterance_id = "train-1";
  d.nbest.hypotheses = {
      {words("show flights from boston to denver"), -1.0, 1},
      {words("show flight from boston to denver"), -1.5, 2},
      {words("show flights from austin to denver"), -2.0, 3},
  };
  d.nbest.reference = words("show flights from boston to denver");
  d.transcription = words("show flights from boston to denver");
  return d;
}

PromptStrategy strategy_of(StrategyKind kind) {
  PromptStrategy s;
  s.kind = kind;
  if (kind == StrategyKind::domain_hint || kind == StrategyKind::tap)
    s.domain = "airline information";
  if (kind == StrategyKind::one_shot || kind == StrategyKind::few_shot ||
      kind == StrategyKind::tap)
    s.demos = {demo()};
  return s;
}

std::vector<ChatTurn> render_for(StrategyKind kind) {
  const PromptStrategy s = strategy_of(kind);
  return render(s, test_list(), init_session(s, templates()), templates());
}

std::string golden(const std::string& name) {
  return read_golden(nbr::test::fixture_dir() + "/goldens/" + name);
}

}  // namespace

TEST_CASE("zero-shot scoring renders one system and one user turn") {
  const auto turns = render_for(StrategyKind::zero_shot_scoring);
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].role == Role::system);
  CHECK(turns[1].role == Role::user);
  CHECK(turns[1].content.find("1. list all fares from denver to boston") !=
        std::string::npos);
  CHECK(turns[1].content.find("2. list all fare from denver to boston") !=
        std::string::npos);
}

TEST_CASE("zero-shot reasoning ends with the canonical instruction") {
  const auto turns = render_for(StrategyKind::zero_shot_reasoning);
  const std::string& content = turns.back().content;
  const std::string suffix = "Let's think step by step";
  REQUIRE(content.size() >= suffix.size());
  CHECK(content.substr(content.size() - suffix.size()) == suffix);
  CHECK(content == golden("zero_cot_user.txt"));
}

TEST_CASE("domain hint lands in the system turn") {
  const auto turns = render_for(StrategyKind::domain_hint);
  CHECK(turns.front().role == Role::system);
  CHECK(turns.front().content.find("airline information") != std::string::npos);
}

TEST_CASE("few-shot demonstrations precede the task turn") {
  PromptStrategy s = strategy_of(StrategyKind::few_shot);
  s.demos = {demo(), demo(), demo()};
  const auto turns = render(s, test_list(), init_session(s, templates()), templates());
  // system + 3 * (user, assistant) + final user
  REQUIRE(turns.size() == 8);
  CHECK(turns[1].role == Role::user);
  CHECK(turns[2].role == Role::assistant);
  CHECK(turns[2].content.find("show flights from boston to denver") != std::string::npos);
  CHECK(turns.back().role == Role::user);
}

TEST_CASE("task-activating script matches the goldens byte for byte") {
  const auto turns = render_tap(demo(), test_list(), templates(), TapMode::replay,
                                "airline information");
  REQUIRE(turns.size() == 7);
  CHECK(turns[0].content == golden("tap_query_1.txt"));
  CHECK(turns[2].content == golden("tap_query_2.txt"));
  CHECK(turns[4].content == golden("tap_query_3.txt"));
  CHECK(turns[6].content == golden("tap_query_final.txt"));
  CHECK(turns_to_text(turns) == read_file(nbr::test::fixture_dir() +
                                          "/goldens/tap_conversation.txt"));

  SUBCASE("placeholder substitution shows the demo transcription") {
    CHECK(turns[6].content.find("I would expect your output is: show flights from boston "
                                "to denver") != std::string::npos);
    CHECK(turns[6].content.find("could you report the true transcription from the "
                                "following 10-best hypotheses") != std::string::npos);
  }
  SUBCASE("live mode emits the four queries without canned replies") {
    const auto live = render_tap(demo(), test_list(), templates(), TapMode::live,
                                 "airline information");
    REQUIRE(live.size() == 4);
    for (const ChatTurn& t : live) CHECK(t.role == Role::user);
    CHECK(live[0].content == golden("tap_query_1.txt"));
    CHECK(live[3].content == golden("tap_query_final.txt"));
  }
  SUBCASE("tap requires a demonstration") {
    PromptStrategy s = strategy_of(StrategyKind::tap);
    s.demos.clear();
    CHECK_THROWS_AS(init_session(s, templates()), Error);
  }
}

TEST_CASE("tap prefix is invariant across utterances") {
  const PromptStrategy s = strategy_of(StrategyKind::tap);
  const ConversationState session = init_session(s, templates());
  NBestList other = test_list();
  other.utterance_id = "test-2";
  other.hypotheses[0].text = words("completely different words");
  const auto a = render(s, test_list(), session, templates());
  const auto b = render(s, other, session, templates());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i + 1 < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(a.back() != b.back());
}

TEST_CASE("render is deterministic") {
  for (const StrategyKind kind :
       {StrategyKind::zero_shot_scoring, StrategyKind::zero_shot_reasoning,
        StrategyKind::domain_hint, StrategyKind::one_shot, StrategyKind::few_shot,
        StrategyKind::tap}) {
    const auto a = render_for(kind);
    const auto b = render_for(kind);
    CHECK(turns_to_text(a) == turns_to_text(b));
  }
}

TEST_CASE("hypothesis text is emitted literally, never re-expanded") {
  NBestList list = test_list();
  list.hypotheses[0].text = words("say {{nbest_block}} literally");
  list.hypotheses[1].text = words("braces { and } stay put");
  const PromptStrategy s = strategy_of(StrategyKind::zero_shot_scoring);
  const auto turns = render(s, list, init_session(s, templates()), templates());
  CHECK(turns.back().content.find("1. say {{nbest_block}} literally") !=
        std::string::npos);
  CHECK(turns.back().content.find("2. braces { and } stay put") != std::string::npos);
}

TEST_CASE("history modes") {
  const TemplateSet& set = templates();
  SUBCASE("one-by-one resets to the base prefix") {
    PromptStrategy s = strategy_of(StrategyKind::few_shot);
    s.history_mode = HistoryMode::one_by_one;
    ConversationState session = init_session(s, set);
    const std::size_t base = session.turn_count();
    for (int i = 0; i < 5; ++i)
      session = advance_history(std::move(session), s, test_list(), "reply", set);
    CHECK(session.turn_count() == base);
  }
  SUBCASE("accumulating grows by two turns per utterance") {
    PromptStrategy s = strategy_of(StrategyKind::few_shot);
    s.history_mode = HistoryMode::accumulating;
    ConversationState session = init_session(s, set);
    const std::size_t base = session.turn_count();
    std::size_t last = base;
    for (int k = 1; k <= 4; ++k) {
      session = advance_history(std::move(session), s, test_list(), "reply " +
                                std::to_string(k), set);
      CHECK(session.turn_count() == base + 2 * static_cast<std::size_t>(k));
      CHECK(session.turn_count() > last);  // strictly increasing
      last = session.turn_count();
    }
    const auto turns = render(s, test_list(), session, set);
    CHECK(turns.size() == base + 8 + 1);
  }
  SUBCASE("twelve demonstrations all precede the first test turn") {
    PromptStrategy s = strategy_of(StrategyKind::few_shot);
    s.history_mode = HistoryMode::accumulating;
    s.demos = std::vector<Demonstration>(12, demo());
    const ConversationState session = init_session(s, set);
    CHECK(session.base.size() == 1 + 24);
    const auto turns = render(s, test_list(), session, set);
    for (std::size_t i = 1; i < 25; ++i)
      CHECK(turns[i].content.find("denver") != std::string::npos);
    CHECK(turns.back().content.find("list all fares") != std::string::npos);
  }
}

TEST_CASE("strategy validation") {
  PromptStrategy s;
  s.kind = StrategyKind::one_shot;
  CHECK_THROWS_AS(s.validate(), Error);
  s.kind = StrategyKind::few_shot;
  CHECK_THROWS_AS(s.validate(), Error);
  s.kind = StrategyKind::domain_hint;
  CHECK_THROWS_AS(s.validate(), Error);
  s.kind = StrategyKind::tap;
  s.demos = {demo(), demo()};
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("missing template directory raises") {
  CHECK_THROWS_AS(TemplateSet::load_dir("/nonexistent/dir"), FormatError);
}
