#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "nbr/align.hpp"
#include "nbr/error.hpp"
#include "nbr/nbest_io.hpp"
#include "nbr/normalize.hpp"
#include "nbr/rng.hpp"
#include "nbr/wer.hpp"
#include "support/edit_oracle.hpp"
#include "support/testutil.hpp"

using namespace nbr;
using nbr::test::edit_oracle;
using nbr::test::words;

TEST_CASE("normalize applies case, punctuation and whitespace rules") {
  CHECK(normalize("Recognize Speech.") == Words{"recognize", "speech"});
  CHECK(normalize("") == Words{});
  CHECK(normalize("a  b\tc") == Words{"a", "b", "c"});
  CHECK(normalize("  Hello,   WORLD!! ") == Words{"hello", "world"});

  NormConfig keep_case;
  keep_case.lowercase = false;
  CHECK(normalize("Recognize Speech.", keep_case) == Words{"Recognize", "Speech"});

  SUBCASE("idempotent") {
    for (const char* raw : {"Recognize Speech.", "a  b\tc", "don't stop!", "{braces} stay"}) {
      const Words once = normalize(raw);
      CHECK(normalize(join_words(once)) == once);
    }
  }
  SUBCASE("tokens that dissolve into punctuation are dropped") {
    CHECK(normalize("well ... fine") == Words{"well", "fine"});
  }
}

TEST_CASE("align counts the minimum-error decomposition") {
  const Words ref = words("recognize speech with artificial intelligence");
  const Words hyp = words("recognize peach with artificial intelligence");
  const AlignmentResult a = align(ref, hyp);
  CHECK(a.substitutions == 1);
  CHECK(a.insertions == 0);
  CHECK(a.deletions == 0);
  CHECK(a.ref_len == 5);

  SUBCASE("identity") {
    const AlignmentResult id = align(ref, ref);
    CHECK(id.errors() == 0);
    CHECK(id.ref_len == 5);
  }
  SUBCASE("empty hypothesis forces deletions") {
    const AlignmentResult d = align(words("a b c"), {});
    CHECK(d.substitutions == 0);
    CHECK(d.insertions == 0);
    CHECK(d.deletions == 3);
    CHECK(d.ref_len == 3);
  }
  SUBCASE("empty reference forces insertions") {
    const AlignmentResult i = align({}, words("a b"));
    CHECK(i.insertions == 2);
    CHECK(i.ref_len == 0);
  }
}

TEST_CASE("align matches the brute-force oracle") {
  const std::vector<std::string> alphabet{"a", "b", "c", "d"};

  SUBCASE("exhaustive over short pairs") {
    // Every pair with len(ref) + len(hyp) <= 6 over the 4-symbol alphabet.
    std::vector<Words> all;
    all.push_back({});
    std::size_t level_start = 0;
    for (int len = 1; len <= 6; ++len) {
      const std::size_t level_end = all.size();
      for (std::size_t i = level_start; i < level_end; ++i)
        for (const auto& s : alphabet) {
          Words w = all[i];
          w.push_back(s);
          all.push_back(std::move(w));
        }
      level_start = level_end;
    }
    long checked = 0;
    for (const Words& a : all)
      for (const Words& b : all) {
        if (a.size() + b.size() > 6) continue;
        const AlignmentResult r = align(a, b);
        REQUIRE(r.errors() == edit_oracle(a, b));
        REQUIRE(r.substitutions + r.deletions <= r.ref_len);
        ++checked;
      }
    CHECK(checked > 10000);
  }

  SUBCASE("random longer pairs") {
    Rng rng(20240811);
    for (int trial = 0; trial < 300; ++trial) {
      Words a, b;
      const auto la = rng.below(41);
      const auto lb = rng.below(41);
      for (uint64_t i = 0; i < la; ++i) a.push_back(alphabet[rng.below(4)]);
      for (uint64_t i = 0; i < lb; ++i) b.push_back(alphabet[rng.below(4)]);
      REQUIRE(align(a, b).errors() == edit_oracle(a, b));
    }
  }
}

TEST_CASE("align duality and triangle properties") {
  const std::vector<std::string> alphabet{"x", "y", "z", "w"};
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto draw = [&] {
      Words w;
      const auto len = rng.below(12);
      for (uint64_t i = 0; i < len; ++i) w.push_back(alphabet[rng.below(4)]);
      return w;
    };
    const Words a = draw(), b = draw(), c = draw();
    const AlignmentResult ab = align(a, b);
    const AlignmentResult ba = align(b, a);
    CHECK(ab.insertions == ba.deletions);
    CHECK(ab.deletions == ba.insertions);
    CHECK(ab.substitutions == ba.substitutions);
    CHECK(align(a, c).errors() <= ab.errors() + align(b, c).errors());
  }
}

TEST_CASE("utterance_wer") {
  CHECK(utterance_wer({1, 0, 0, 5}) == doctest::Approx(0.2));
  CHECK(utterance_wer({0, 0, 0, 7}) == 0.0);
  CHECK(utterance_wer({0, 3, 0, 3}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(utterance_wer({0, 0, 0, 0}), Error);
}

namespace {

NBestList make_list(const std::string& id, const std::string& reference,
                    std::vector<std::string> hyps) {
  NBestList list;
  list.utterance_id = id;
  if (!reference.empty()) list.reference = words(reference);
  int rank = 1;
  for (const std::string& h : hyps) {
    list.hypotheses.push_back({words(h), -static_cast<double>(rank), rank});
    ++rank;
  }
  return list;
}

NBestList fig_list(const std::string& id = "u1") {
  return make_list(id, "recognize speech with artificial intelligence",
                   {"recognize speech with artificial intelligence",
                    "recognized speech with artificial intelligence",
                    "recognize speech with artificial intelligent",
                    "reckon eyes speech with artificial intelligence",
                    "recognize peach with artificial intelligence"});
}

}  // namespace

TEST_CASE("oracle_wer picks the best hypothesis per utterance") {
  SUBCASE("exact match at rank 3") {
    const NBestList list = make_list("u1", "a b c", {"a b d", "x b c", "a b c"});
    CHECK(oracle_index(list) == 2);
    const WerReport report = oracle_wer(std::span(&list, 1));
    CHECK(report.corpus_wer == 0.0);
    CHECK(report.per_utterance.at("u1").wer == 0.0);
  }
  SUBCASE("5-best list with the reference at rank 1") {
    const NBestList list = fig_list();
    CHECK(oracle_index(list) == 0);
    CHECK(oracle_wer(std::span(&list, 1)).corpus_wer == 0.0);
  }
  SUBCASE("corpus aggregation is error-weighted") {
    const std::vector<NBestList> lists{
        make_list("u1", "a b c d e", {"a b c d x"}),   // 1 error of 5
        make_list("u2", "f g h i j", {"f g h i j"}),   // 0 of 5
    };
    CHECK(oracle_wer(lists).corpus_wer == doctest::Approx(0.1));
  }
  SUBCASE("ties break toward the lowest rank") {
    const NBestList list = make_list("u1", "a b", {"a x", "b x", "x b"});
    CHECK(oracle_index(list) == 0);
  }
  SUBCASE("missing reference names the utterance") {
    const NBestList list = make_list("bad-utt", "", {"a"});
    CHECK_THROWS_WITH_AS(oracle_wer(std::span(&list, 1)),
                         doctest::Contains("bad-utt"), FormatError);
  }
}

TEST_CASE("corpus_wer under explicit selectors") {
  const std::vector<NBestList> lists{
      make_list("u1", "a b c", {"a b c", "a b x"}),
      make_list("u2", "d e", {"d x", "d e"}),
  };
  SUBCASE("rank-1 selector equals first-pass WER") {
    const WerReport rank1 = corpus_wer(lists, [](const NBestList&) { return 0; });
    CHECK(rank1.corpus_wer == first_pass_wer(lists).corpus_wer);
    CHECK(rank1.corpus_wer == doctest::Approx(1.0 / 5));
  }
  SUBCASE("oracle selector equals oracle_wer") {
    const WerReport via_selector =
        corpus_wer(lists, [](const NBestList& l) { return oracle_index(l); });
    CHECK(via_selector.corpus_wer == oracle_wer(lists).corpus_wer);
    CHECK(via_selector.corpus_wer == 0.0);
  }
  SUBCASE("exact-match pick yields zero") {
    const NBestList one = make_list("u", "a b", {"a x", "a b"});
    CHECK(corpus_wer(std::span(&one, 1), [](const NBestList&) { return 1; }).corpus_wer ==
          0.0);
  }
  SUBCASE("out-of-range index raises") {
    CHECK_THROWS_AS(corpus_wer(lists, [](const NBestList&) { return 99; }), Error);
  }
  SUBCASE("permutation invariance") {
    std::vector<NBestList> reversed(lists.rbegin(), lists.rend());
    CHECK(first_pass_wer(reversed).corpus_wer == first_pass_wer(lists).corpus_wer);
  }
}

TEST_CASE("oracle dominance over arbitrary selectors") {
  Rng rng(99);
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<NBestList> lists;
    const auto n_utts = 1 + rng.below(8);
    for (uint64_t u = 0; u < n_utts; ++u) {
      Words ref;
      const auto len = 1 + rng.below(8);
      for (uint64_t i = 0; i < len; ++i) ref.push_back(alphabet[rng.below(5)]);
      NBestList list;
      list.utterance_id = "u" + std::to_string(u);
      list.reference = ref;
      const auto n_hyps = 1 + rng.below(5);
      for (uint64_t h = 0; h < n_hyps; ++h) {
        Words hyp = ref;
        for (auto& w : hyp)
          if (rng.uniform01() < 0.3) w = alphabet[rng.below(5)];
        list.hypotheses.push_back(
            {hyp, -static_cast<double>(h), static_cast<int>(h) + 1});
      }
      lists.push_back(std::move(list));
    }
    const double oracle = oracle_wer(lists).corpus_wer;
    for (int s = 0; s < 5; ++s) {
      const auto pick = rng.below(1000);
      const double selected =
          corpus_wer(lists, [&](const NBestList& l) {
            return static_cast<std::size_t>(pick % l.hypotheses.size());
          }).corpus_wer;
      CHECK(oracle <= selected);
    }
  }
}

TEST_CASE("nbest jsonl round trip and errors") {
  const char* text =
      "{\"id\": \"u1\", \"reference\": \"Recognize Speech.\", \"hypotheses\": "
      "[{\"text\": \"recognize speech\", \"score\": -1.5}, "
      "{\"text\": \"wreck a nice beach\", \"score\": -2.5}]}\n"
      "\n"
      "{\"id\": \"u2\", \"reference\": null, \"hypotheses\": "
      "[{\"text\": \"hello\", \"score\": 0}]}\n";
  std::istringstream in(text);
  const auto lists = read_nbest_jsonl(in);
  REQUIRE(lists.size() == 2);
  CHECK(lists[0].utterance_id == "u1");
  CHECK(*lists[0].reference == words("recognize speech"));
  CHECK(lists[0].hypotheses.size() == 2);
  CHECK(lists[0].hypotheses[1].rank == 2);
  CHECK(lists[0].hypotheses[1].first_pass_score == doctest::Approx(-2.5));
  CHECK_FALSE(lists[1].reference.has_value());

  SUBCASE("writer emits one object per line, reader reproduces it") {
    std::ostringstream out;
    write_nbest_jsonl(out, lists);
    std::istringstream back(out.str());
    const auto again = read_nbest_jsonl(back);
    REQUIRE(again.size() == lists.size());
    CHECK(again[0].hypotheses[1].text == lists[0].hypotheses[1].text);
    std::ostringstream out2;
    write_nbest_jsonl(out2, again);
    CHECK(out.str() == out2.str());
  }
  SUBCASE("missing id is reported with its line number") {
    std::istringstream bad("{\"hypotheses\": [{\"text\": \"a\", \"score\": 0}]}\n");
    CHECK_THROWS_WITH_AS(read_nbest_jsonl(bad), doctest::Contains("line 1"), FormatError);
  }
  SUBCASE("empty hypotheses rejected") {
    std::istringstream bad("{\"id\": \"u\", \"hypotheses\": []}\n");
    CHECK_THROWS_AS(read_nbest_jsonl(bad), FormatError);
  }
  SUBCASE("validate rejects rank gaps") {
    NBestList broken = lists[0];
    broken.hypotheses[1].rank = 3;
    CHECK_THROWS_AS(broken.validate(), FormatError);
  }
}
