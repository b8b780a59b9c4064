// nbr: N-best rescoring toolkit CLI.
//
// Subcommands: wer, rescore-ngram, correct (P1), icl (P2), synth, report.
// Exit codes: 0 success, 1 usage, 2 input format error, 3 backend failure
// (per-utterance fallbacks above --max-fallback-rate).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nbr/align.hpp"
#include "nbr/error.hpp"
#include "nbr/llm_client.hpp"
#include "nbr/nbest_io.hpp"
#include "nbr/ngram.hpp"
#include "nbr/pipelines.hpp"
#include "nbr/prompt.hpp"
#include "nbr/synth.hpp"
#include "nbr/wer.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFormat = 2;
constexpr int kExitBackend = 3;

// Options whose value may come from a --config JSON file or the environment;
// precedence is flags > config file > environment.
struct SharedOptions {
  std::string config_path;
  std::string endpoint;
  std::string model = "gpt-3.5-turbo";
  std::string templates_dir;
  double temperature = 0.0;
  int max_tokens = 512;
  int max_in_flight = 4;
  uint64_t seed = 0;

  CLI::Option* endpoint_opt = nullptr;
  CLI::Option* model_opt = nullptr;
  CLI::Option* templates_opt = nullptr;
  CLI::Option* temperature_opt = nullptr;
  CLI::Option* max_tokens_opt = nullptr;
  CLI::Option* max_in_flight_opt = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file with defaults");
    endpoint_opt = cmd->add_option("--endpoint", endpoint, "chat-completions base URL");
    model_opt = cmd->add_option("--model", model, "model name sent to the endpoint");
    templates_opt = cmd->add_option("--templates", templates_dir, "prompt template directory");
    temperature_opt = cmd->add_option("--temperature", temperature, "sampling temperature");
    max_tokens_opt = cmd->add_option("--max-tokens", max_tokens, "completion token cap");
    max_in_flight_opt =
        cmd->add_option("--max-in-flight", max_in_flight, "bounded request concurrency");
    cmd->add_option("--seed", seed, "seed for mock backends and retry jitter");
  }

  void resolve() {
    nlohmann::json config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw nbr::FormatError("cannot open config file: " + config_path);
      try {
        config = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw nbr::FormatError("config file " + config_path + ": " + e.what());
      }
    }
    auto fill_string = [&](CLI::Option* opt, std::string& target, const char* key,
                           const char* env) {
      if (opt && opt->count() > 0) return;
      if (config.contains(key) && config[key].is_string()) {
        target = config[key].get<std::string>();
        return;
      }
      if (env) {
        if (const char* value = std::getenv(env); value && *value) target = value;
      }
    };
    fill_string(endpoint_opt, endpoint, "endpoint", "LLM_ENDPOINT");
    fill_string(model_opt, model, "model", nullptr);
    fill_string(templates_opt, templates_dir, "templates", "NBR_TEMPLATE_DIR");
    auto fill_number = [&](CLI::Option* opt, auto& target, const char* key) {
      if (opt && opt->count() > 0) return;
      if (config.contains(key) && config[key].is_number())
        target = config[key].get<std::decay_t<decltype(target)>>();
    };
    fill_number(temperature_opt, temperature, "temperature");
    fill_number(max_tokens_opt, max_tokens, "max_tokens");
    fill_number(max_in_flight_opt, max_in_flight, "max_in_flight");
    if (templates_dir.empty()) templates_dir = nbr::TemplateSet::default_dir();
  }
};

std::string format_pct(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", ratio * 100.0);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nbr::Error("cannot write file: " + path);
  out << content;
}

// Writes every raw response payload for audit when --dump-raw is set.
class DumpingBackend final : public nbr::LlmBackend {
 public:
  DumpingBackend(nbr::LlmBackend& inner, std::string dir)
      : inner_(inner), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }
  std::string name() const override { return inner_.name(); }
  nbr::LlmResponse complete_once(const nbr::LlmRequest& req) override {
    nbr::LlmResponse resp = inner_.complete_once(req);
    std::string tag = req.request_tag;
    for (char& c : tag)
      if (c == '/' || c == '\\' || c == '#') c = '_';
    write_text_file(dir_ + "/" + tag + ".raw.txt", resp.raw_payload);
    return resp;
  }

 private:
  nbr::LlmBackend& inner_;
  std::string dir_;
};

struct BackendChoice {
  std::unique_ptr<nbr::LlmBackend> backend;
  std::string description;
};

BackendChoice make_backend(const std::string& spec, const SharedOptions& shared,
                           const std::string& script_path,
                           std::span<const nbr::NBestList> lists) {
  BackendChoice choice;
  choice.description = spec;
  if (spec == "http") {
    nbr::HttpBackendConfig config;
    config.base_url = shared.endpoint;
    if (config.base_url.empty())
      throw nbr::Error("http backend requires --endpoint or LLM_ENDPOINT");
    if (const char* key = std::getenv("LLM_API_KEY"); key && *key) config.api_key = key;
    choice.backend = nbr::make_http_backend(std::move(config));
    return choice;
  }
  if (spec.rfind("mock:", 0) != 0)
    throw CLI::ValidationError("--backend", "expected 'http' or 'mock:<mode>'");
  const std::string mode = spec.substr(5);
  nbr::MockBehavior behavior;
  behavior.seed = shared.seed;
  if (mode == "echo-oracle") {
    behavior.mode = nbr::MockBehavior::Mode::echo_oracle;
  } else if (mode == "scripted") {
    behavior.mode = nbr::MockBehavior::Mode::scripted;
    if (script_path.empty())
      throw CLI::ValidationError("--script", "mock:scripted requires --script <json>");
    std::ifstream in(script_path);
    if (!in) throw nbr::FormatError("cannot open script file: " + script_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw nbr::FormatError("script file " + script_path + ": " + e.what());
    }
    for (const auto& [tag, text] : doc.items()) {
      if (!text.is_string())
        throw nbr::FormatError("script file entries must be strings: " + tag);
      behavior.script[tag] = text.get<std::string>();
    }
  } else if (mode.rfind("rank", 0) == 0) {
    behavior.mode = nbr::MockBehavior::Mode::rank_k;
    behavior.k = std::stoi(mode.substr(4));
  } else if (mode == "scorelist") {
    behavior.mode = nbr::MockBehavior::Mode::score_list;
    behavior.score_fn = [](const nbr::Hypothesis& h, const nbr::NBestList& l) {
      if (!l.reference) throw nbr::BackendError("mock scorelist needs references");
      return -static_cast<double>(nbr::align(*l.reference, h.text).errors());
    };
  } else {
    throw CLI::ValidationError("--backend", "unknown mock mode '" + mode + "'");
  }
  choice.backend = nbr::make_mock_backend(std::move(behavior), lists);
  return choice;
}

nbr::PromptStrategy make_strategy(const std::string& name, const std::string& domain,
                                  const std::string& history, const std::string& tap_mode,
                                  const std::string& demos_path, std::size_t shots,
                                  std::span<const nbr::NBestList> lists) {
  nbr::PromptStrategy strategy;
  if (name == "zero") {
    strategy.kind = nbr::StrategyKind::zero_shot_scoring;
  } else if (name == "zero-cot") {
    strategy.kind = nbr::StrategyKind::zero_shot_reasoning;
  } else if (name == "domain-hint") {
    strategy.kind = nbr::StrategyKind::domain_hint;
  } else if (name == "one-shot") {
    strategy.kind = nbr::StrategyKind::one_shot;
  } else if (name == "few-shot") {
    strategy.kind = nbr::StrategyKind::few_shot;
  } else if (name == "tap") {
    strategy.kind = nbr::StrategyKind::tap;
  } else {
    throw CLI::ValidationError("--strategy", "unknown strategy '" + name + "'");
  }
  strategy.domain = domain;
  strategy.history_mode = history == "accumulate" ? nbr::HistoryMode::accumulating
                                                  : nbr::HistoryMode::one_by_one;
  strategy.tap_mode = tap_mode == "live" ? nbr::TapMode::live : nbr::TapMode::replay;

  const bool needs_demos = strategy.kind == nbr::StrategyKind::one_shot ||
                           strategy.kind == nbr::StrategyKind::few_shot ||
                           strategy.kind == nbr::StrategyKind::tap;
  if (needs_demos) {
    if (demos_path.empty())
      throw CLI::ValidationError("--demos",
                                 "strategy '" + name + "' requires --demos <train.jsonl>");
    const auto training = nbr::read_nbest_jsonl_file(demos_path);
    std::size_t k = shots;
    if (strategy.kind != nbr::StrategyKind::few_shot) k = 1;
    if (k == 0) k = 1;
    strategy.demos = nbr::pick_demonstrations(training, k);
  }
  strategy.validate();
  nbr::check_demo_disjoint(strategy, lists);
  return strategy;
}

ordered_json fusion_echo(const nbr::FusionConfig& fusion) {
  return {{"lambda_lm", fusion.lambda_lm}, {"use_acoustic", fusion.use_acoustic}};
}

void emit_run(const nbr::RunResult& result, const std::string& name,
              const ordered_json& config_echo, const std::string& out_path) {
  const std::string json =
      nbr::run_result_to_json(result, name, config_echo.dump());
  if (out_path.empty())
    std::cout << json;
  else
    write_text_file(out_path, json);
  if (result.wer_report) {
    std::cerr << "corpus_wer_pct: " << format_pct(result.wer_report->corpus_wer) << "\n";
    if (result.oracle_corpus_wer)
      std::cerr << "oracle_wer_pct: " << format_pct(*result.oracle_corpus_wer) << "\n";
  }
}

int check_fallback_rate(const nbr::RunResult& result, double max_rate) {
  if (result.fallback_rate() > max_rate) {
    std::cerr << "backend failure: fallback rate " << result.fallback_rate()
              << " exceeds --max-fallback-rate " << max_rate << "\n";
    return kExitBackend;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_wer(const std::string& input, const std::string& json_out) {
  const auto lists = nbr::read_nbest_jsonl_file(input);
  const nbr::WerReport first = nbr::first_pass_wer(lists);
  const nbr::WerReport oracle = nbr::oracle_wer(lists);
  std::cout << "utterances: " << lists.size() << "\n"
            << "total_ref_words: " << first.total_ref_words << "\n"
            << "first_pass_wer_pct: " << format_pct(first.corpus_wer) << "\n"
            << "oracle_wer_pct: " << format_pct(oracle.corpus_wer) << "\n";
  if (!json_out.empty()) {
    ordered_json doc;
    doc["utterances"] = lists.size();
    doc["total_ref_words"] = first.total_ref_words;
    doc["first_pass_corpus_wer"] = first.corpus_wer;
    doc["oracle_corpus_wer"] = oracle.corpus_wer;
    auto& per = doc["per_utterance"] = ordered_json::object();
    for (const auto& [id, score] : first.per_utterance)
      per[id] = {{"first_pass_wer", score.wer},
                 {"oracle_wer", oracle.per_utterance.at(id).wer}};
    write_text_file(json_out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_rescore_ngram(const std::string& input, const std::string& arpa, double lambda,
                      bool no_acoustic, bool markers, const std::string& oov,
                      const std::string& name, const std::string& out_path) {
  const auto lists = nbr::read_nbest_jsonl_file(input);
  const nbr::NgramModel model = nbr::load_arpa_file(arpa);
  nbr::FusionConfig fusion{lambda, !no_acoustic};
  nbr::ScoreOptions score;
  score.add_markers = markers;
  score.oov = oov == "error" ? nbr::OovPolicy::hard_error : nbr::OovPolicy::map_to_unk;
  const auto selector = nbr::ngram_rescore(lists, model, fusion, score);

  nbr::RunResult result;
  result.pipeline = "ngram";
  for (const nbr::NBestList& list : lists) {
    const std::size_t idx = selector.at(list.utterance_id);
    nbr::RunChoice choice;
    choice.rank = static_cast<int>(idx) + 1;
    choice.text = list.hypotheses[idx].text;
    result.selections.emplace(list.utterance_id, std::move(choice));
  }
  const bool have_refs =
      std::all_of(lists.begin(), lists.end(),
                  [](const nbr::NBestList& l) { return l.reference && !l.reference->empty(); });
  if (have_refs) {
    result.first_pass_corpus_wer = nbr::first_pass_wer(lists).corpus_wer;
    result.oracle_corpus_wer = nbr::oracle_wer(lists).corpus_wer;
    result.wer_report = nbr::corpus_wer(
        lists, [&](const nbr::NBestList& l) { return selector.at(l.utterance_id); });
  }

  ordered_json echo;
  echo["subcommand"] = "rescore-ngram";
  echo["input"] = input;
  echo["arpa"] = arpa;
  echo["fusion"] = fusion_echo(fusion);
  echo["add_markers"] = markers;
  echo["oov"] = oov;
  emit_run(result, name.empty() ? "rescore-ngram" : name, echo, out_path);
  return kExitOk;
}

struct LlmRunArgs {
  std::string input;
  std::string backend_spec = "mock:echo-oracle";
  std::string script_path;
  std::string strategy_name = "zero";
  std::string domain;
  std::string history = "one-by-one";
  std::string tap_mode = "replay";
  std::string demos_path;
  std::size_t shots = 1;
  std::string dump_raw_dir;
  double max_fallback_rate = 0.2;
  std::string name;
  std::string out_path;
};

void add_llm_run_options(CLI::App* cmd, LlmRunArgs& args, SharedOptions& shared) {
  cmd->add_option("input", args.input, "N-best JSONL file")->required();
  cmd->add_option("--backend", args.backend_spec,
                  "http or mock:{echo-oracle|scripted|rank<k>|scorelist}");
  cmd->add_option("--script", args.script_path, "fixture map for mock:scripted");
  cmd->add_option("--strategy", args.strategy_name,
                  "zero|zero-cot|domain-hint|one-shot|few-shot|tap");
  cmd->add_option("--domain", args.domain, "domain label for domain-hint and tap");
  cmd->add_option("--history", args.history, "one-by-one|accumulate")
      ->check(CLI::IsMember({"one-by-one", "accumulate"}));
  cmd->add_option("--tap-mode", args.tap_mode, "replay|live")
      ->check(CLI::IsMember({"replay", "live"}));
  cmd->add_option("--demos", args.demos_path, "training JSONL for demonstrations");
  cmd->add_option("--shots", args.shots, "demonstration count for few-shot");
  cmd->add_option("--dump-raw", args.dump_raw_dir, "directory for raw response payloads");
  cmd->add_option("--max-fallback-rate", args.max_fallback_rate,
                  "fallback fraction above which the run exits 3");
  cmd->add_option("--name", args.name, "run name recorded in the artifact");
  cmd->add_option("--out", args.out_path, "run JSON path (stdout when omitted)");
  shared.add_to(cmd);
}

ordered_json llm_echo(const LlmRunArgs& args, const SharedOptions& shared,
                      const std::string& pipeline) {
  ordered_json echo;
  echo["subcommand"] = pipeline;
  echo["input"] = args.input;
  echo["backend"] = args.backend_spec;
  echo["strategy"] = args.strategy_name;
  echo["domain"] = args.domain;
  echo["history"] = args.history;
  echo["tap_mode"] = args.tap_mode;
  echo["shots"] = args.shots;
  echo["seed"] = shared.seed;
  echo["model"] = shared.model;
  echo["temperature"] = shared.temperature;
  echo["max_tokens"] = shared.max_tokens;
  echo["max_in_flight"] = shared.max_in_flight;
  echo["max_fallback_rate"] = args.max_fallback_rate;
  return echo;
}

int run_llm_command(const LlmRunArgs& args, SharedOptions& shared, bool p1,
                    const std::string& arpa, double lambda, bool no_acoustic,
                    bool markers, const std::string& output_mode,
                    const std::string& placement) {
  shared.resolve();
  const auto lists = nbr::read_nbest_jsonl_file(args.input);
  const nbr::TemplateSet templates = nbr::TemplateSet::load_dir(shared.templates_dir);
  const nbr::PromptStrategy strategy =
      make_strategy(args.strategy_name, args.domain, args.history, args.tap_mode,
                    args.demos_path, args.shots, lists);

  BackendChoice choice = make_backend(args.backend_spec, shared, args.script_path, lists);
  std::unique_ptr<DumpingBackend> dumper;
  nbr::LlmBackend* backend = choice.backend.get();
  if (!args.dump_raw_dir.empty()) {
    dumper = std::make_unique<DumpingBackend>(*backend, args.dump_raw_dir);
    backend = dumper.get();
  }

  nbr::ConcurrencyPolicy concurrency;
  concurrency.max_in_flight = shared.max_in_flight;
  concurrency.retry.jitter_seed = shared.seed;

  nbr::RunResult result;
  ordered_json echo = llm_echo(args, shared, p1 ? "correct" : "icl");
  if (p1) {
    nbr::P1Config cfg;
    cfg.placement = placement == "replace" ? nbr::CorrectionPlacement::replace
                                           : nbr::CorrectionPlacement::augment;
    cfg.fusion = {lambda, !no_acoustic};
    cfg.lm_score.add_markers = markers;
    cfg.lm_score.oov = nbr::OovPolicy::map_to_unk;
    cfg.concurrency = concurrency;
    cfg.model_name = shared.model;
    cfg.temperature = shared.temperature;
    cfg.max_tokens = shared.max_tokens;
    const nbr::NgramModel model = nbr::load_arpa_file(arpa);
    echo["arpa"] = arpa;
    echo["fusion"] = fusion_echo(cfg.fusion);
    echo["placement"] = placement;
    result = nbr::run_p1(lists, *backend, strategy, templates, model, cfg);
  } else {
    nbr::P2Config cfg;
    if (output_mode == "scores")
      cfg.output_mode = nbr::OutputMode::scores;
    else if (output_mode == "selection")
      cfg.output_mode = nbr::OutputMode::selection;
    else if (output_mode == "correction")
      cfg.output_mode = nbr::OutputMode::correction;
    cfg.fusion = {lambda, !no_acoustic};
    cfg.concurrency = concurrency;
    cfg.model_name = shared.model;
    cfg.temperature = shared.temperature;
    cfg.max_tokens = shared.max_tokens;
    echo["output_mode"] = output_mode;
    echo["fusion"] = fusion_echo(cfg.fusion);
    result = nbr::run_p2(lists, *backend, strategy, templates, cfg);
  }

  emit_run(result, args.name.empty() ? (p1 ? "correct" : "icl") : args.name, echo,
           args.out_path);
  return check_fallback_rate(result, args.max_fallback_rate);
}

int cmd_synth(const std::string& refs_path, const std::string& config_path,
              const std::string& out_path) {
  std::ifstream refs_in(refs_path);
  if (!refs_in) throw nbr::FormatError("cannot open references file: " + refs_path);
  std::vector<nbr::Words> refs;
  std::string line;
  while (std::getline(refs_in, line)) {
    const nbr::Words ref = nbr::normalize(line);
    if (!ref.empty()) refs.push_back(ref);
  }
  if (refs.empty()) throw nbr::FormatError("no usable references in " + refs_path);

  std::ifstream config_in(config_path);
  if (!config_in) throw nbr::FormatError("cannot open config file: " + config_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(config_in);
  } catch (const nlohmann::json::exception& e) {
    throw nbr::FormatError("synth config " + config_path + ": " + e.what());
  }
  nbr::ChannelConfig cfg;
  cfg.sub_rate = doc.value("sub_rate", 0.0);
  cfg.ins_rate = doc.value("ins_rate", 0.0);
  cfg.del_rate = doc.value("del_rate", 0.0);
  cfg.n = doc.value("n", 5);
  cfg.seed = doc.value("seed", uint64_t{0});
  cfg.score_noise_sigma = doc.value("score_noise_sigma", 0.0);
  if (doc.contains("include_reference_rank") && doc["include_reference_rank"].is_number())
    cfg.include_reference_rank = doc["include_reference_rank"].get<int>();
  if (doc.contains("confusion_table")) {
    for (const auto& [word, alts] : doc["confusion_table"].items()) {
      if (!alts.is_object())
        throw nbr::FormatError("confusion_table entries must map word -> {alt: weight}");
      for (const auto& [alt, weight] : alts.items())
        cfg.confusion_table[word][alt] = weight.get<double>();
    }
  }

  const nbr::SynthCorpus corpus = nbr::generate_corpus(refs, cfg);
  if (out_path.empty()) {
    nbr::write_nbest_jsonl(std::cout, corpus.lists);
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw nbr::Error("cannot write " + out_path);
    nbr::write_nbest_jsonl(out, corpus.lists);
    write_text_file(out_path + ".manifest.json", corpus.manifest_json);
  }
  std::cerr << "generated " << corpus.lists.size() << " utterances\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& run_paths) {
  struct Row {
    std::string name;
    double corpus_wer = 0.0;
    std::optional<double> oracle_wer;
    double fallback_rate = 0.0;
  };
  std::vector<Row> rows;
  for (const std::string& path : run_paths) {
    std::ifstream in(path);
    if (!in) throw nbr::FormatError("cannot open run file: " + path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw nbr::FormatError("run file " + path + ": " + e.what());
    }
    Row row;
    row.name = doc.value("run_name", path);
    if (!doc.contains("wer") || doc["wer"].is_null())
      throw nbr::FormatError("run file " + path + " has no WER block (no references?)");
    row.corpus_wer = doc["wer"]["corpus_wer"].get<double>();
    if (doc["wer"].contains("oracle_corpus_wer") && !doc["wer"]["oracle_corpus_wer"].is_null())
      row.oracle_wer = doc["wer"]["oracle_corpus_wer"].get<double>();
    row.fallback_rate = doc.value("fallback_rate", 0.0);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw nbr::FormatError("report: no run files given");

  std::cout << "run_name\tcorpus_wer_pct\toracle_wer_pct\trel_reduction_vs_baseline_pct\t"
               "fallback_rate\n";
  const double base = rows.front().corpus_wer;
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    std::cout << row.name << '\t' << format_pct(row.corpus_wer) << '\t';
    std::cout << (row.oracle_wer ? format_pct(*row.oracle_wer) : std::string("-")) << '\t';
    if (i == 0 || base <= 0.0) {
      std::cout << '-';
    } else {
      std::snprintf(buf, sizeof(buf), "%.1f%%", (base - row.corpus_wer) / base * 100.0);
      std::cout << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.3f", row.fallback_rate);
    std::cout << '\t' << buf << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N-best rescoring toolkit: WER evaluation, n-gram and LLM-prompt "
               "rescoring pipelines, and a synthetic N-best generator"};
  app.require_subcommand(1);

  // wer
  std::string wer_input, wer_json;
  CLI::App* wer_cmd = app.add_subcommand("wer", "first-pass and oracle WER of a corpus");
  wer_cmd->add_option("input", wer_input, "N-best JSONL file")->required();
  wer_cmd->add_option("--json", wer_json, "write a detailed JSON report");

  // rescore-ngram
  std::string rn_input, rn_arpa, rn_oov = "unk", rn_name, rn_out;
  double rn_lambda = 1.0;
  bool rn_no_acoustic = false, rn_markers = false;
  CLI::App* rn_cmd = app.add_subcommand("rescore-ngram", "ARPA n-gram rescoring baseline");
  rn_cmd->add_option("input", rn_input, "N-best JSONL file")->required();
  rn_cmd->add_option("--arpa", rn_arpa, "ARPA model file")->required();
  rn_cmd->add_option("--lambda", rn_lambda, "LM weight in the fused score");
  rn_cmd->add_flag("--no-acoustic", rn_no_acoustic, "ignore first-pass scores");
  rn_cmd->add_flag("--markers", rn_markers, "score with <s>/</s> sentence markers");
  rn_cmd->add_option("--oov", rn_oov, "unk|error")->check(CLI::IsMember({"unk", "error"}));
  rn_cmd->add_option("--name", rn_name, "run name recorded in the artifact");
  rn_cmd->add_option("--out", rn_out, "run JSON path (stdout when omitted)");

  // correct (P1)
  LlmRunArgs p1_args;
  SharedOptions p1_shared;
  std::string p1_arpa, p1_placement = "augment";
  double p1_lambda = 1.0;
  bool p1_no_acoustic = false, p1_markers = false;
  CLI::App* p1_cmd =
      app.add_subcommand("correct", "P1: LLM error correction then n-gram rescoring");
  add_llm_run_options(p1_cmd, p1_args, p1_shared);
  p1_cmd->add_option("--arpa", p1_arpa, "ARPA model file")->required();
  p1_cmd->add_option("--lambda", p1_lambda, "LM weight in the fused score");
  p1_cmd->add_flag("--no-acoustic", p1_no_acoustic, "ignore first-pass scores");
  p1_cmd->add_flag("--markers", p1_markers, "score with <s>/</s> sentence markers");
  p1_cmd->add_option("--placement", p1_placement, "augment|replace")
      ->check(CLI::IsMember({"augment", "replace"}));
  p1_args.strategy_name = "few-shot";

  // icl (P2)
  LlmRunArgs p2_args;
  SharedOptions p2_shared;
  std::string p2_output_mode = "auto";
  double p2_lambda = 1.0;
  bool p2_no_acoustic = false;
  CLI::App* p2_cmd = app.add_subcommand("icl", "P2: direct prompt-driven rescoring");
  add_llm_run_options(p2_cmd, p2_args, p2_shared);
  p2_cmd->add_option("--output", p2_output_mode, "auto|scores|selection|correction")
      ->check(CLI::IsMember({"auto", "scores", "selection", "correction"}));
  p2_cmd->add_option("--lambda", p2_lambda, "LM-score weight when fusing parsed scores");
  p2_cmd->add_flag("--no-acoustic", p2_no_acoustic, "ignore first-pass scores");

  // synth
  std::string synth_refs, synth_config, synth_out;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "seeded noisy-channel N-best generator");
  synth_cmd->add_option("--refs", synth_refs, "reference transcriptions, one per line")
      ->required();
  synth_cmd->add_option("--config", synth_config, "channel config JSON")->required();
  synth_cmd->add_option("--out", synth_out, "output JSONL path (stdout when omitted)");

  // report
  std::vector<std::string> report_runs;
  CLI::App* report_cmd =
      app.add_subcommand("report", "aligned TSV table over run artifacts");
  report_cmd->add_option("runs", report_runs, "run JSON files; first is the baseline")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (wer_cmd->parsed()) return cmd_wer(wer_input, wer_json);
    if (rn_cmd->parsed())
      return cmd_rescore_ngram(rn_input, rn_arpa, rn_lambda, rn_no_acoustic, rn_markers,
                               rn_oov, rn_name, rn_out);
    if (p1_cmd->parsed())
      return run_llm_command(p1_args, p1_shared, true, p1_arpa, p1_lambda,
                             p1_no_acoustic, p1_markers, "auto", p1_placement);
    if (p2_cmd->parsed())
      return run_llm_command(p2_args, p2_shared, false, "", p2_lambda, p2_no_acoustic,
                             false, p2_output_mode, "augment");
    if (synth_cmd->parsed()) return cmd_synth(synth_refs, synth_config, synth_out);
    if (report_cmd->parsed()) return cmd_report(report_runs);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nbr::BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const nbr::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFormat;
  }
  return kExitOk;
}
