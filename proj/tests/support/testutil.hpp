#pragma once

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nbr/normalize.hpp"
#include "nbr/prompt.hpp"
#include "nbr/types.hpp"

namespace nbr::test {

inline std::string source_dir() {
#ifdef NBR_SOURCE_DIR
  return NBR_SOURCE_DIR;
#else
  return ".";
#endif
}

inline std::string template_dir() { return source_dir() + "/templates"; }
inline std::string fixture_dir() { return source_dir() + "/fixtures"; }

inline std::string cli_path() {
#ifdef NBR_CLI_PATH
  return NBR_CLI_PATH;
#else
  return "nbr";
#endif
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Fresh scratch directory under the build tree.
class TempDir {
 public:
  explicit TempDir(const std::string& label) {
    dir_ = std::filesystem::temp_directory_path() /
           ("nbr-test-" + label + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  std::filesystem::path dir_;
};

inline nbr::Words words(const std::string& text) { return nbr::normalize(text); }

// Stable conversation serialization for golden comparisons.
inline std::string turns_to_text(const std::vector<nbr::ChatTurn>& turns) {
  std::string out;
  for (const nbr::ChatTurn& turn : turns) {
    out += "== " + nbr::role_name(turn.role) + " ==\n";
    out += turn.content;
    out += '\n';
  }
  return out;
}

// Golden files tolerate one trailing newline, same as the template loader.
inline std::string read_golden(const std::string& path) {
  std::string text = read_file(path);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  if (!text.empty() && text.back() == '\r') text.pop_back();
  return text;
}

}  // namespace nbr::test
