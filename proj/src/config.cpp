#include "rrl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rrl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void key_error(const std::string& section, const std::string& key,
                            const std::string& what) {
  throw std::invalid_argument("config: [" + section + "] " + key + ": " + what);
}

double parse_number(const std::string& section, const std::string& key,
                    const std::string& raw) {
  const char* begin = raw.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    key_error(section, key, "expected a number, got '" + raw + "'");
  return v;
}

}  // namespace

bool ConfigMap::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::vector<std::string> ConfigMap::section_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

std::vector<std::string> ConfigMap::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto s = sections_.find(section);
  if (s == sections_.end()) return out;
  for (const auto& [key, _] : s->second) out.push_back(key);
  return out;
}

std::string ConfigMap::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string ConfigMap::require(const std::string& section, const std::string& key) const {
  if (!has(section, key)) key_error(section, key, "required key is missing");
  return sections_.at(section).at(key);
}

double ConfigMap::get_number(const std::string& section, const std::string& key,
                             double fallback) const {
  if (!has(section, key)) return fallback;
  return parse_number(section, key, sections_.at(section).at(key));
}

long ConfigMap::get_int(const std::string& section, const std::string& key,
                        long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = sections_.at(section).at(key);
  const char* begin = raw.c_str();
  char* end = nullptr;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0')
    key_error(section, key, "expected an integer, got '" + raw + "'");
  return v;
}

bool ConfigMap::get_flag(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string raw = sections_.at(section).at(key);
  if (raw == "true" || raw == "yes" || raw == "on" || raw == "1") return true;
  if (raw == "false" || raw == "no" || raw == "off" || raw == "0") return false;
  key_error(section, key, "expected a boolean, got '" + raw + "'");
}

std::vector<double> ConfigMap::get_numbers(const std::string& section,
                                           const std::string& key) const {
  std::vector<double> out;
  if (!has(section, key)) return out;
  std::stringstream ss(sections_.at(section).at(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) key_error(section, key, "empty entry in number list");
    out.push_back(parse_number(section, key, item));
  }
  if (out.empty()) key_error(section, key, "empty number list");
  return out;
}

std::vector<std::string> ConfigMap::get_words(const std::string& section,
                                              const std::string& key) const {
  std::vector<std::string> out;
  if (!has(section, key)) return out;
  std::stringstream ss(sections_.at(section).at(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) key_error(section, key, "empty entry in list");
    out.push_back(item);
  }
  if (out.empty()) key_error(section, key, "empty list");
  return out;
}

void ConfigMap::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  sections_[section][key] = value;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream stream(text);
  std::string line;
  std::string section;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("config: line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(stream, line)) {
    line_no += 1;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (section.empty()) fail("key outside any [section]");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (out.has(section, key)) fail("duplicate key '" + key + "' in [" + section + "]");
    out.set(section, key, value);
  }
  return out;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace rrl
