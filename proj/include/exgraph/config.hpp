#pragma once

#include <fstream>
#include <map>
#include <sstream>

#include "exgraph/common.hpp"

namespace exgraph {

/// Sectioned `key = value` text config. Section order and key order are
/// preserved deterministically (sorted) when echoed back out.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(std::istream& in) {
    ConfigFile cfg;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string trimmed = trim(line);
      if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']')
          throw ParseError("unterminated section header", line_no);
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        cfg.values_[section];
        continue;
      }
      auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        throw ParseError("expected `key = value`", line_no);
      std::string key = trim(trimmed.substr(0, eq));
      std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) throw ParseError("empty key", line_no);
      cfg.values_[section][key] = value;
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse(in);
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto s = values_.find(section);
    if (s == values_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    if (!has(section, key)) return fallback;
    return std::stod(get_string(section, key, ""));
  }

  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const {
    if (!has(section, key)) return fallback;
    return std::stoll(get_string(section, key, ""));
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    return std::stoull(get_string(section, key, ""));
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get_string(section, key, "");
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean `" + v + "` for " +
                                section + "." + key);
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    values_[section][key] = value;
  }

  void set(const std::string& section, const std::string& key, double value) {
    set(section, key, fmt_full(value));
  }

  void set(const std::string& section, const std::string& key,
           long long value) {
    set(section, key, std::to_string(value));
  }

  void set(const std::string& section, const std::string& key, bool value) {
    set(section, key, std::string(value ? "true" : "false"));
  }

  std::string serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [section, keys] : values_) {
      if (!first) out << '\n';
      first = false;
      if (!section.empty()) out << '[' << section << "]\n";
      for (const auto& [key, value] : keys)
        out << key << " = " << value << '\n';
    }
    return out.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << serialize();
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace exgraph
