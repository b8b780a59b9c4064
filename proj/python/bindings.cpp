#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nbr/align.hpp"
#include "nbr/error.hpp"
#include "nbr/llm_client.hpp"
#include "nbr/nbest_io.hpp"
#include "nbr/ngram.hpp"
#include "nbr/pipelines.hpp"
#include "nbr/prompt.hpp"
#include "nbr/response_parser.hpp"
#include "nbr/synth.hpp"
#include "nbr/wer.hpp"

namespace py = pybind11;
using namespace nbr;

namespace {

ScoreOptions make_score_options(bool add_markers, const std::string& oov) {
  ScoreOptions opts;
  opts.add_markers = add_markers;
  opts.oov = oov == "unk" ? OovPolicy::map_to_unk : OovPolicy::hard_error;
  return opts;
}

MockBehavior make_behavior(const std::string& mode, int k,
                           const std::map<std::string, std::string>& script,
                           uint64_t seed) {
  MockBehavior behavior;
  behavior.seed = seed;
  if (mode == "echo-oracle") {
    behavior.mode = MockBehavior::Mode::echo_oracle;
  } else if (mode == "scripted") {
    behavior.mode = MockBehavior::Mode::scripted;
    behavior.script = script;
  } else if (mode == "rank") {
    behavior.mode = MockBehavior::Mode::rank_k;
    behavior.k = k;
  } else if (mode == "scorelist-neg-edit") {
    behavior.mode = MockBehavior::Mode::score_list;
    behavior.score_fn = [](const Hypothesis& h, const NBestList& l) {
      if (!l.reference) throw BackendError("scorelist mock needs references");
      return -static_cast<double>(align(*l.reference, h.text).errors());
    };
  } else {
    throw Error("unknown mock mode: " + mode);
  }
  return behavior;
}

py::object payload_to_python(const ParsedLlmOutput& out) {
  if (out.is_fallback()) return py::none();
  if (const auto* c = std::get_if<Correction>(&*out.payload))
    return py::cast(c->text);
  if (const auto* s = std::get_if<Scores>(&*out.payload)) return py::cast(s->values);
  return py::cast(std::get<Selection>(*out.payload).index);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "N-best rescoring toolkit: WER evaluation, ARPA n-gram scoring, prompt "
            "rendering, LLM response parsing, and the P1/P2 rescoring pipelines";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  // -- nbest core ----------------------------------------------------------
  py::class_<Hypothesis>(m, "Hypothesis")
      .def(py::init<>())
      .def(py::init([](Words text, double score, int rank) {
             return Hypothesis{std::move(text), score, rank};
           }),
           py::arg("text"), py::arg("first_pass_score") = 0.0, py::arg("rank") = 1)
      .def_readwrite("text", &Hypothesis::text)
      .def_readwrite("first_pass_score", &Hypothesis::first_pass_score)
      .def_readwrite("rank", &Hypothesis::rank)
      .def("__repr__", [](const Hypothesis& h) {
        return "Hypothesis(rank=" + std::to_string(h.rank) + ", text='" +
               join_words(h.text) + "')";
      });

  py::class_<NBestList>(m, "NBestList")
      .def(py::init<>())
      .def(py::init([](std::string id, std::vector<Hypothesis> hyps,
                       std::optional<Words> reference) {
             return NBestList{std::move(id), std::move(hyps), std::move(reference)};
           }),
           py::arg("utterance_id"), py::arg("hypotheses"),
           py::arg("reference") = py::none())
      .def_readwrite("utterance_id", &NBestList::utterance_id)
      .def_readwrite("hypotheses", &NBestList::hypotheses)
      .def_readwrite("reference", &NBestList::reference)
      .def("validate", &NBestList::validate);

  py::class_<AlignmentResult>(m, "AlignmentResult")
      .def(py::init<>())
      .def_readwrite("substitutions", &AlignmentResult::substitutions)
      .def_readwrite("insertions", &AlignmentResult::insertions)
      .def_readwrite("deletions", &AlignmentResult::deletions)
      .def_readwrite("ref_len", &AlignmentResult::ref_len)
      .def("errors", &AlignmentResult::errors)
      .def("__repr__", [](const AlignmentResult& a) {
        return "AlignmentResult(sub=" + std::to_string(a.substitutions) +
               ", ins=" + std::to_string(a.insertions) +
               ", del=" + std::to_string(a.deletions) +
               ", ref_len=" + std::to_string(a.ref_len) + ")";
      });

  py::class_<UtteranceScore>(m, "UtteranceScore")
      .def_readonly("alignment", &UtteranceScore::alignment)
      .def_readonly("wer", &UtteranceScore::wer);

  py::class_<WerReport>(m, "WerReport")
      .def_readonly("per_utterance", &WerReport::per_utterance)
      .def_readonly("corpus_wer", &WerReport::corpus_wer)
      .def_readonly("total_ref_words", &WerReport::total_ref_words);

  m.def(
      "normalize",
      [](const std::string& raw, bool lowercase, const std::string& strip_chars) {
        return normalize(raw, {lowercase, strip_chars});
      },
      py::arg("raw"), py::arg("lowercase") = true,
      py::arg("strip_chars") = ".,?!;:\"");
  m.def("join_words", &join_words);
  m.def("align", &align, py::arg("reference"), py::arg("hypothesis"));
  m.def("utterance_wer", &utterance_wer);
  m.def("oracle_index", &oracle_index);
  m.def("oracle_wer",
        [](const std::vector<NBestList>& lists) { return oracle_wer(lists); });
  m.def("first_pass_wer",
        [](const std::vector<NBestList>& lists) { return first_pass_wer(lists); });
  m.def("corpus_wer", [](const std::vector<NBestList>& lists, const Selector& select) {
    return corpus_wer(lists, select);
  });
  m.def("read_nbest_jsonl", [](const std::string& path) {
    return read_nbest_jsonl_file(path);
  });
  m.def("write_nbest_jsonl", [](const std::string& path,
                                const std::vector<NBestList>& lists) {
    write_nbest_jsonl_file(path, lists);
  });

  // -- ngram ---------------------------------------------------------------
  py::class_<NgramModel>(m, "NgramModel")
      .def_property_readonly("max_order", &NgramModel::max_order)
      .def("vocab", &NgramModel::vocab)
      .def("size", &NgramModel::size, py::arg("order"))
      .def("cond_log10",
           [](const NgramModel& model, const Words& history, const std::string& word) {
             return model.cond_log10(history, word);
           });

  m.def("load_arpa", &load_arpa_file, py::arg("path"));
  m.def("load_arpa_text", &load_arpa_text, py::arg("text"));
  m.def("arpa_to_string", &arpa_to_string);
  m.def(
      "score_sequence",
      [](const NgramModel& model, const Words& sentence, bool add_markers,
         const std::string& oov) {
        return score_sequence(model, sentence, make_score_options(add_markers, oov));
      },
      py::arg("model"), py::arg("words"), py::arg("add_markers") = false,
      py::arg("oov") = "error");
  m.def(
      "ngram_rescore",
      [](const std::vector<NBestList>& lists, const NgramModel& model, double lambda_lm,
         bool use_acoustic, bool add_markers, const std::string& oov) {
        return ngram_rescore(lists, model, {lambda_lm, use_acoustic},
                             make_score_options(add_markers, oov));
      },
      py::arg("lists"), py::arg("model"), py::arg("lambda_lm") = 1.0,
      py::arg("use_acoustic") = true, py::arg("add_markers") = false,
      py::arg("oov") = "unk");

  // -- prompts -------------------------------------------------------------
  py::enum_<Role>(m, "Role")
      .value("system", Role::system)
      .value("user", Role::user)
      .value("assistant", Role::assistant);
  py::class_<ChatTurn>(m, "ChatTurn")
      .def(py::init([](Role role, std::string content) {
             return ChatTurn{role, std::move(content)};
           }),
           py::arg("role"), py::arg("content"))
      .def_readwrite("role", &ChatTurn::role)
      .def_readwrite("content", &ChatTurn::content)
      .def("__repr__", [](const ChatTurn& t) {
        return "ChatTurn(" + role_name(t.role) + ", '" + t.content.substr(0, 40) + "')";
      });

  py::enum_<StrategyKind>(m, "StrategyKind")
      .value("zero_shot_scoring", StrategyKind::zero_shot_scoring)
      .value("zero_shot_reasoning", StrategyKind::zero_shot_reasoning)
      .value("domain_hint", StrategyKind::domain_hint)
      .value("one_shot", StrategyKind::one_shot)
      .value("few_shot", StrategyKind::few_shot)
      .value("tap", StrategyKind::tap);
  py::enum_<HistoryMode>(m, "HistoryMode")
      .value("one_by_one", HistoryMode::one_by_one)
      .value("accumulating", HistoryMode::accumulating);
  py::enum_<TapMode>(m, "TapMode").value("replay", TapMode::replay).value("live", TapMode::live);
  py::enum_<OutputMode>(m, "OutputMode")
      .value("scores", OutputMode::scores)
      .value("selection", OutputMode::selection)
      .value("correction", OutputMode::correction);

  py::class_<Demonstration>(m, "Demonstration")
      .def(py::init([](NBestList nbest, Words transcription) {
             return Demonstration{std::move(nbest), std::move(transcription)};
           }),
           py::arg("nbest"), py::arg("transcription"))
      .def_readwrite("nbest", &Demonstration::nbest)
      .def_readwrite("transcription", &Demonstration::transcription);

  py::class_<PromptStrategy>(m, "PromptStrategy")
      .def(py::init<>())
      .def_readwrite("kind", &PromptStrategy::kind)
      .def_readwrite("domain", &PromptStrategy::domain)
      .def_readwrite("demos", &PromptStrategy::demos)
      .def_readwrite("history_mode", &PromptStrategy::history_mode)
      .def_readwrite("tap_mode", &PromptStrategy::tap_mode)
      .def("validate", &PromptStrategy::validate);

  py::class_<TemplateSet>(m, "TemplateSet")
      .def_static("load_dir", &TemplateSet::load_dir, py::arg("dir"))
      .def_static("default_dir", &TemplateSet::default_dir)
      .def("get", &TemplateSet::get, py::return_value_policy::copy);

  py::class_<ConversationState>(m, "ConversationState")
      .def_readonly("base", &ConversationState::base)
      .def_readonly("history", &ConversationState::history)
      .def("turn_count", &ConversationState::turn_count);

  m.def("default_output_mode", &default_output_mode);
  m.def("nbest_block", &nbest_block);
  m.def("init_session", &init_session);
  m.def("render", &render, py::arg("strategy"), py::arg("list"), py::arg("session"),
        py::arg("templates"));
  m.def("render_tap", &render_tap, py::arg("demo"), py::arg("list"),
        py::arg("templates"), py::arg("mode") = TapMode::replay,
        py::arg("domain") = std::string());
  m.def("advance_history", &advance_history);
  m.def("pick_demonstrations",
        [](const std::vector<NBestList>& training, std::size_t k) {
          return pick_demonstrations(training, k);
        });

  // -- response parsing ------------------------------------------------------
  py::enum_<ParseNote>(m, "ParseNote")
      .value("clean", ParseNote::clean)
      .value("recovered", ParseNote::recovered)
      .value("fallback", ParseNote::fallback);

  auto parse_result = [](const ParsedLlmOutput& out) {
    py::dict d;
    d["note"] = parse_note_name(out.note);
    d["payload"] = payload_to_python(out);
    return d;
  };
  m.def("parse_correction",
        [parse_result](const std::string& text) { return parse_result(parse_correction(text)); });
  m.def("parse_scores", [parse_result](const std::string& text, std::size_t n) {
    return parse_result(parse_scores(text, n));
  });
  m.def("parse_selection",
        [parse_result](const std::string& text, const std::vector<Words>& hypotheses) {
          return parse_result(parse_selection(text, hypotheses));
        });

  // -- llm client ------------------------------------------------------------
  py::class_<LlmBackend, std::unique_ptr<LlmBackend>>(m, "LlmBackend")
      .def("name", &LlmBackend::name);
  m.def(
      "make_mock_backend",
      [](const std::string& mode, const std::vector<NBestList>& lists, int k,
         const std::map<std::string, std::string>& script, uint64_t seed) {
        return make_mock_backend(make_behavior(mode, k, script, seed), lists);
      },
      py::arg("mode"), py::arg("lists"), py::arg("k") = 1,
      py::arg("script") = std::map<std::string, std::string>{}, py::arg("seed") = 0);
  m.def(
      "make_http_backend",
      [](const std::string& base_url, const std::string& api_key, int timeout_s) {
        HttpBackendConfig config;
        config.base_url = base_url;
        config.api_key = api_key;
        config.timeout = std::chrono::seconds(timeout_s);
        return make_http_backend(std::move(config));
      },
      py::arg("base_url"), py::arg("api_key") = std::string(),
      py::arg("timeout_s") = 60);
  m.def(
      "complete_text",
      [](LlmBackend& backend, const std::vector<ChatTurn>& turns,
         const std::string& model, const std::string& tag, double temperature,
         int max_tokens) {
        LlmRequest req{model, turns, temperature, max_tokens, tag};
        RetryPolicy retry;
        retry.base_delay = std::chrono::milliseconds(10);
        const LlmResponse resp = complete(req, backend, retry);
        if (!resp.ok()) throw BackendError(resp.error);
        return resp.text;
      },
      py::arg("backend"), py::arg("turns"), py::arg("model") = "mock",
      py::arg("tag") = std::string(), py::arg("temperature") = 0.0,
      py::arg("max_tokens") = 512);

  // -- pipelines ---------------------------------------------------------------
  py::class_<FusionConfig>(m, "FusionConfig")
      .def(py::init([](double lambda_lm, bool use_acoustic) {
             return FusionConfig{lambda_lm, use_acoustic};
           }),
           py::arg("lambda_lm") = 0.0, py::arg("use_acoustic") = true)
      .def_readwrite("lambda_lm", &FusionConfig::lambda_lm)
      .def_readwrite("use_acoustic", &FusionConfig::use_acoustic);

  py::class_<ParserStats>(m, "ParserStats")
      .def_readonly("clean", &ParserStats::clean)
      .def_readonly("recovered", &ParserStats::recovered)
      .def_readonly("fallback", &ParserStats::fallback)
      .def("total", &ParserStats::total);

  py::class_<RunChoice>(m, "RunChoice")
      .def_readonly("rank", &RunChoice::rank)
      .def_readonly("text", &RunChoice::text)
      .def_readonly("corrected", &RunChoice::corrected)
      .def_property_readonly("note",
                             [](const RunChoice& c) { return parse_note_name(c.note); });

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("pipeline", &RunResult::pipeline)
      .def_readonly("selections", &RunResult::selections)
      .def_readonly("wer_report", &RunResult::wer_report)
      .def_readonly("first_pass_corpus_wer", &RunResult::first_pass_corpus_wer)
      .def_readonly("oracle_corpus_wer", &RunResult::oracle_corpus_wer)
      .def_readonly("parser_stats", &RunResult::parser_stats)
      .def_readonly("llm_call_count", &RunResult::llm_call_count)
      .def("fallback_rate", &RunResult::fallback_rate)
      .def("to_json", [](const RunResult& result, const std::string& name) {
        return run_result_to_json(result, name, "{}");
      }, py::arg("run_name") = "run");

  m.def("fuse", [](double acoustic, double lm, const FusionConfig& cfg) {
    return fuse(acoustic, lm, cfg);
  });
  m.def(
      "run_p1",
      [](const std::vector<NBestList>& lists, LlmBackend& backend,
         const PromptStrategy& strategy, const TemplateSet& templates,
         const NgramModel& lm, const FusionConfig& fusion, bool add_markers,
         const std::string& oov, bool replace, int max_in_flight) {
        P1Config cfg;
        cfg.placement =
            replace ? CorrectionPlacement::replace : CorrectionPlacement::augment;
        cfg.fusion = fusion;
        cfg.lm_score = make_score_options(add_markers, oov);
        cfg.concurrency.max_in_flight = max_in_flight;
        cfg.concurrency.retry.base_delay = std::chrono::milliseconds(10);
        return run_p1(lists, backend, strategy, templates, lm, cfg);
      },
      py::arg("lists"), py::arg("backend"), py::arg("strategy"), py::arg("templates"),
      py::arg("lm"), py::arg("fusion") = FusionConfig{0.0, true},
      py::arg("add_markers") = true, py::arg("oov") = "unk",
      py::arg("replace") = false, py::arg("max_in_flight") = 1);
  m.def(
      "run_p2",
      [](const std::vector<NBestList>& lists, LlmBackend& backend,
         const PromptStrategy& strategy, const TemplateSet& templates,
         std::optional<OutputMode> output_mode, const FusionConfig& fusion,
         int max_in_flight) {
        P2Config cfg;
        cfg.output_mode = output_mode;
        cfg.fusion = fusion;
        cfg.concurrency.max_in_flight = max_in_flight;
        cfg.concurrency.retry.base_delay = std::chrono::milliseconds(10);
        return run_p2(lists, backend, strategy, templates, cfg);
      },
      py::arg("lists"), py::arg("backend"), py::arg("strategy"), py::arg("templates"),
      py::arg("output_mode") = py::none(),
      py::arg("fusion") = FusionConfig{0.0, true}, py::arg("max_in_flight") = 1);

  m.def("h2t_loss_terms",
        [](const std::vector<double>& probs, const std::vector<double>& posteriors,
           double lambda_mse) { return h2t_loss_terms(probs, posteriors, lambda_mse); },
        py::arg("probs"), py::arg("posteriors"), py::arg("lambda_mse") = 0.01);
  m.def(
      "h2t_loss",
      [](const NBestList& list, const SequenceProbSource& prob_source, double lambda_mse) {
        H2TConfig cfg;
        cfg.lambda_mse = lambda_mse;
        cfg.prob_source = prob_source;
        return h2t_loss(list, cfg);
      },
      py::arg("list"), py::arg("prob_source"), py::arg("lambda_mse") = 0.01);
  m.def(
      "h2t_loss_ngram",
      [](const NBestList& list, const NgramModel& model, double lambda_mse,
         bool add_markers, const std::string& oov) {
        H2TConfig cfg;
        cfg.lambda_mse = lambda_mse;
        cfg.prob_source = ngram_prob_source(model, make_score_options(add_markers, oov));
        return h2t_loss(list, cfg);
      },
      py::arg("list"), py::arg("model"), py::arg("lambda_mse") = 0.01,
      py::arg("add_markers") = false, py::arg("oov") = "unk");
  m.def("hypothesis_posteriors", &hypothesis_posteriors);
  m.def("expected_wer", [](const NBestList& list, const std::vector<double>& posterior) {
    return expected_wer(list, posterior);
  });

  // -- synth ---------------------------------------------------------------
  py::class_<ChannelConfig>(m, "ChannelConfig")
      .def(py::init<>())
      .def_readwrite("sub_rate", &ChannelConfig::sub_rate)
      .def_readwrite("ins_rate", &ChannelConfig::ins_rate)
      .def_readwrite("del_rate", &ChannelConfig::del_rate)
      .def_readwrite("confusion_table", &ChannelConfig::confusion_table)
      .def_readwrite("n", &ChannelConfig::n)
      .def_readwrite("include_reference_rank", &ChannelConfig::include_reference_rank)
      .def_readwrite("seed", &ChannelConfig::seed)
      .def_readwrite("score_noise_sigma", &ChannelConfig::score_noise_sigma);

  m.def(
      "generate",
      [](const Words& reference, const std::string& utterance_id,
         const ChannelConfig& cfg) { return generate(reference, utterance_id, cfg); },
      py::arg("reference"), py::arg("utterance_id"), py::arg("config"));
  m.def(
      "generate_corpus",
      [](const std::vector<Words>& references, const ChannelConfig& cfg) {
        SynthCorpus corpus = generate_corpus(references, cfg);
        return py::make_tuple(corpus.lists, corpus.manifest_json);
      },
      py::arg("references"), py::arg("config"));
}
