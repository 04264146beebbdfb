#pragma once

#include <map>
#include <string>
#include <vector>

namespace rrl {

// Flat plain-text configuration: "[section]" headers, "key = value" lines,
// '#' comments, blank lines ignored. Values stay raw strings; the typed
// getters convert on demand and name the offending section/key on failure.
class ConfigMap {
 public:
  bool has(const std::string& section, const std::string& key) const;
  std::vector<std::string> section_names() const;
  std::vector<std::string> keys(const std::string& section) const;

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  std::string require(const std::string& section, const std::string& key) const;
  double get_number(const std::string& section, const std::string& key,
                    double fallback) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  bool get_flag(const std::string& section, const std::string& key, bool fallback) const;
  // Comma-separated list of numbers; empty when the key is absent.
  std::vector<double> get_numbers(const std::string& section,
                                  const std::string& key) const;
  // Comma-separated list of words; empty when the key is absent.
  std::vector<std::string> get_words(const std::string& section,
                                     const std::string& key) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Throws std::invalid_argument naming the line number of the first problem
// (text outside a section, missing '=', empty key, duplicate key).
ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::string& path);  // std::runtime_error when unreadable

}  // namespace rrl
