#include "nbr/nbest_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nbr/error.hpp"

namespace nbr {

namespace {

NBestList parse_line(const std::string& line, std::size_t line_no, const NormConfig& norm) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("nbest line " + std::to_string(line_no) + ": " + e.what());
  }
  auto fail = [&](const std::string& what) -> FormatError {
    return FormatError("nbest line " + std::to_string(line_no) + ": " + what);
  };
  if (!obj.is_object()) throw fail("expected a JSON object");
  if (!obj.contains("id") || !obj["id"].is_string()) throw fail("missing string field 'id'");
  if (!obj.contains("hypotheses") || !obj["hypotheses"].is_array() || obj["hypotheses"].empty())
    throw fail("missing non-empty array field 'hypotheses'");

  NBestList list;
  list.utterance_id = obj["id"].get<std::string>();
  if (obj.contains("reference") && !obj["reference"].is_null()) {
    if (!obj["reference"].is_string()) throw fail("'reference' must be a string or null");
    list.reference = normalize(obj["reference"].get<std::string>(), norm);
  }
  int rank = 1;
  for (const auto& h : obj["hypotheses"]) {
    if (!h.is_object() || !h.contains("text") || !h["text"].is_string() ||
        !h.contains("score") || !h["score"].is_number())
      throw fail("hypothesis " + std::to_string(rank) + " must carry string 'text' and numeric 'score'");
    Hypothesis hyp;
    hyp.text = normalize(h["text"].get<std::string>(), norm);
    hyp.first_pass_score = h["score"].get<double>();
    hyp.rank = rank++;
    list.hypotheses.push_back(std::move(hyp));
  }
  return list;
}

}  // namespace

std::vector<NBestList> read_nbest_jsonl(std::istream& in, const NormConfig& norm) {
  std::vector<NBestList> lists;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lists.push_back(parse_line(line, line_no, norm));
  }
  return lists;
}

std::vector<NBestList> read_nbest_jsonl_file(const std::string& path, const NormConfig& norm) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open nbest file: " + path);
  return read_nbest_jsonl(in, norm);
}

void write_nbest_jsonl(std::ostream& out, std::span<const NBestList> lists) {
  for (const NBestList& list : lists) {
    nlohmann::ordered_json obj;
    obj["id"] = list.utterance_id;
    obj["reference"] = list.reference ? nlohmann::ordered_json(join_words(*list.reference))
                                      : nlohmann::ordered_json(nullptr);
    auto& hyps = obj["hypotheses"] = nlohmann::ordered_json::array();
    for (const Hypothesis& h : list.hypotheses) {
      hyps.push_back({{"text", join_words(h.text)}, {"score", h.first_pass_score}});
    }
    out << obj.dump() << '\n';
  }
}

void write_nbest_jsonl_file(const std::string& path, std::span<const NBestList> lists) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write nbest file: " + path);
  write_nbest_jsonl(out, lists);
}

}  // namespace nbr
