#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "nbr/error.hpp"
#include "nbr/nbest_io.hpp"
#include "nbr/synth.hpp"
#include "nbr/wer.hpp"
#include "support/testutil.hpp"

using namespace nbr;
using nbr::test::words;

namespace {

ChannelConfig base_config() {
  ChannelConfig cfg;
  cfg.sub_rate = 0.2;
  cfg.ins_rate = 0.05;
  cfg.del_rate = 0.05;
  cfg.n = 5;
  cfg.seed = 42;
  cfg.score_noise_sigma = 0.1;
  cfg.confusion_table = {
      {"speech", {{"peach", 1.0}, {"beach", 0.5}}},
      {"recognize", {{"wreck", 1.0}}},
      {"with", {{"whiff", 1.0}}},
      {"artificial", {{"artful", 1.0}}},
      {"intelligence", {{"intelligent", 1.0}}},
  };
  return cfg;
}

}  // namespace

TEST_CASE("generate honors rate and rank contracts") {
  SUBCASE("all rates zero with the reference pinned at rank 1") {
    ChannelConfig cfg = base_config();
    cfg.sub_rate = cfg.ins_rate = cfg.del_rate = 0.0;
    cfg.score_noise_sigma = 0.0;
    cfg.include_reference_rank = 1;
    const NBestList list = generate(words("recognize speech"), "u1", cfg);
    REQUIRE(list.hypotheses.size() == 5);
    CHECK(list.hypotheses.front().text == words("recognize speech"));
    CHECK(oracle_wer(std::span(&list, 1)).corpus_wer == 0.0);
    list.validate();
  }
  SUBCASE("certain substitution through a singleton confusion table") {
    ChannelConfig cfg;
    cfg.sub_rate = 1.0;
    cfg.n = 4;
    cfg.seed = 7;
    cfg.include_reference_rank = 2;
    cfg.confusion_table = {{"speech", {{"peach", 1.0}}}};
    const NBestList list = generate(words("speech"), "u1", cfg);
    for (const Hypothesis& h : list.hypotheses) {
      if (h.rank == 2)
        CHECK(h.text == words("speech"));
      else
        CHECK(h.text == words("peach"));
    }
  }
  SUBCASE("scores are non-increasing in rank") {
    const NBestList list = generate(words("recognize speech with artificial intelligence"),
                                    "u1", base_config());
    for (std::size_t i = 1; i < list.hypotheses.size(); ++i)
      CHECK(list.hypotheses[i - 1].first_pass_score >=
            list.hypotheses[i].first_pass_score);
  }
  SUBCASE("empty reference rejected") {
    CHECK_THROWS_AS(generate({}, "u1", base_config()), Error);
  }
  SUBCASE("rate bounds validated") {
    ChannelConfig cfg = base_config();
    cfg.sub_rate = 0.8;
    cfg.del_rate = 0.4;
    CHECK_THROWS_AS(generate(words("a"), "u1", cfg), Error);
  }
}

TEST_CASE("generation is deterministic per seed") {
  const Words ref = words("recognize speech with artificial intelligence");
  const NBestList a = generate(ref, "u1", base_config());
  const NBestList b = generate(ref, "u1", base_config());
  REQUIRE(a.hypotheses.size() == b.hypotheses.size());
  for (std::size_t i = 0; i < a.hypotheses.size(); ++i) {
    CHECK(a.hypotheses[i].text == b.hypotheses[i].text);
    CHECK(a.hypotheses[i].first_pass_score == b.hypotheses[i].first_pass_score);
  }
  ChannelConfig other = base_config();
  other.seed = 43;
  const NBestList c = generate(ref, "u1", other);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.hypotheses.size(); ++i)
    any_difference = any_difference || a.hypotheses[i].text != c.hypotheses[i].text ||
                     a.hypotheses[i].first_pass_score != c.hypotheses[i].first_pass_score;
  CHECK(any_difference);
}

TEST_CASE("generate_corpus is stable and reorder-proof") {
  std::vector<Words> refs{words("show flights from boston to denver"),
                          words("list fares for the morning flight"),
                          words("what is the earliest arrival")};
  const ChannelConfig cfg = base_config();
  const SynthCorpus one = generate_corpus(refs, cfg);
  const SynthCorpus two = generate_corpus(refs, cfg);
  REQUIRE(one.lists.size() == 3);
  CHECK(one.manifest_json == two.manifest_json);
  for (std::size_t i = 0; i < one.lists.size(); ++i) {
    CHECK(one.lists[i].utterance_id == two.lists[i].utterance_id);
    for (std::size_t h = 0; h < one.lists[i].hypotheses.size(); ++h)
      CHECK(one.lists[i].hypotheses[h].text == two.lists[i].hypotheses[h].text);
  }

  SUBCASE("jsonl round trip preserves the corpus") {
    std::ostringstream out;
    write_nbest_jsonl(out, one.lists);
    std::istringstream in(out.str());
    const auto back = read_nbest_jsonl(in);
    REQUIRE(back.size() == one.lists.size());
    CHECK(back[1].hypotheses[0].text == one.lists[1].hypotheses[0].text);
  }
  SUBCASE("oracle dominance on a corrupted corpus") {
    CHECK(oracle_wer(one.lists).corpus_wer <= first_pass_wer(one.lists).corpus_wer);
  }
  SUBCASE("reference pinned corpus-wide yields oracle zero") {
    ChannelConfig pinned = base_config();
    pinned.include_reference_rank = 3;
    const SynthCorpus corpus = generate_corpus(refs, pinned);
    CHECK(oracle_wer(corpus.lists).corpus_wer == 0.0);
  }
}

TEST_CASE("substitution rate matches its statistical target") {
  // sub_rate p, no insertions or deletions, full confusion coverage.
  const double p = 0.3;
  ChannelConfig cfg;
  cfg.sub_rate = p;
  cfg.n = 2;
  cfg.seed = 1234;
  const Words ref{"alpha", "bravo", "charlie", "delta", "echo",
                  "foxtrot", "golf", "hotel", "india", "juliet"};
  for (const std::string& w : ref) cfg.confusion_table[w] = {{w + "x", 1.0}};

  long substituted = 0;
  long total = 0;
  std::vector<Words> refs(700, ref);  // 700 * 2 * 10 = 14000 word draws
  const SynthCorpus corpus = generate_corpus(refs, cfg);
  for (const NBestList& list : corpus.lists)
    for (const Hypothesis& h : list.hypotheses) {
      REQUIRE(h.text.size() == ref.size());  // no ins/del
      for (std::size_t i = 0; i < ref.size(); ++i) {
        total += 1;
        if (h.text[i] != ref[i]) substituted += 1;
      }
    }
  const double observed = static_cast<double>(substituted) / total;
  const double bound = 3.0 * std::sqrt(p * (1 - p) / 10000.0);
  CHECK(std::abs(observed - p) < bound);
}
