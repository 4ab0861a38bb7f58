#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scrub/types.hpp"

namespace scrub {

/// Flat key-value configuration loaded from TOML (a practical subset:
/// [section] headers, strings, numbers, booleans, flat arrays, # comments)
/// or JSON (one nesting level of objects, flattened with dots).
class Config {
 public:
  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScrubError("cannot open config: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") return from_json_text(buf.str());
    return from_toml_text(buf.str());
  }

  static Config from_json_text(const std::string& text) {
    Config c;
    const auto j = nlohmann::json::parse(text);
    flatten_json("", j, c);
    return c;
  }

  static Config from_toml_text(const std::string& text) {
    Config c;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string s = strip_comment_and_trim(line);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ScrubError(toml_err(lineno, "unterminated section"));
        section = trim(s.substr(1, s.size() - 2));
        if (section.empty()) throw ScrubError(toml_err(lineno, "empty section name"));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ScrubError(toml_err(lineno, "expected key = value"));
      const std::string key = trim(s.substr(0, eq));
      const std::string raw = trim(s.substr(eq + 1));
      if (key.empty() || raw.empty()) throw ScrubError(toml_err(lineno, "empty key or value"));
      const std::string full = section.empty() ? key : section + "." + key;
      c.set(full, parse_value(raw, lineno));
    }
    return c;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (!it->second.is_string())
      throw ScrubError("config: " + key + " is not a string");
    return it->second.get<std::string>();
  }

  std::optional<double> get_number(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (!it->second.is_number())
      throw ScrubError("config: " + key + " is not a number");
    return it->second.get<double>();
  }

  std::optional<bool> get_bool(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (!it->second.is_boolean())
      throw ScrubError("config: " + key + " is not a boolean");
    return it->second.get<bool>();
  }

  std::optional<std::vector<double>> get_array(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if (!it->second.is_array())
      throw ScrubError("config: " + key + " is not an array");
    std::vector<double> out;
    for (const auto& v : it->second) out.push_back(v.get<double>());
    return out;
  }

  void set(const std::string& key, nlohmann::json value) {
    values_[key] = std::move(value);
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

 private:
  static std::string toml_err(int lineno, const std::string& what) {
    return "toml line " + std::to_string(lineno) + ": " + what;
  }

  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
  }

  static std::string strip_comment_and_trim(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) return trim(line.substr(0, i));
    }
    return trim(line);
  }

  static nlohmann::json parse_value(const std::string& raw, int lineno) {
    if (raw.front() == '"') {
      if (raw.size() < 2 || raw.back() != '"')
        throw ScrubError(toml_err(lineno, "unterminated string"));
      return raw.substr(1, raw.size() - 2);
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.front() == '[') {
      if (raw.back() != ']') throw ScrubError(toml_err(lineno, "unterminated array"));
      nlohmann::json arr = nlohmann::json::array();
      std::stringstream ls(raw.substr(1, raw.size() - 2));
      std::string cell;
      while (std::getline(ls, cell, ',')) {
        const std::string c = trim(cell);
        if (c.empty()) continue;
        arr.push_back(parse_value(c, lineno));
      }
      return arr;
    }
    try {
      std::size_t pos = 0;
      const double v = std::stod(raw, &pos);
      if (pos != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ScrubError(toml_err(lineno, "cannot parse value: " + raw));
    }
  }

  static void flatten_json(const std::string& prefix, const nlohmann::json& j,
                           Config& c) {
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        flatten_json(key, it.value(), c);
      }
    } else {
      c.set(prefix, j);
    }
  }

  std::map<std::string, nlohmann::json> values_;
};

}  // namespace scrub
