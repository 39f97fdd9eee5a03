// include/augforge/config.hpp

// Copyright 2026  Augforge Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Pipeline config file: UTF-8 text, `[section]` headers, `key = value`
// lines, full-line comments starting with '#' or ';'. Keys before the first
// header live in the unnamed global section. The parser is generic; the CLI
// owns the schema and rejects unknown keys with a nearest-key suggestion.

#ifndef AUGFORGE_CONFIG_HPP_
#define AUGFORGE_CONFIG_HPP_

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "augforge/common.hpp"

namespace augforge {

namespace detail {

inline std::string Trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

class Config {
 public:
  struct Entry {
    std::string section, key, value;
    size_t line_no = 0;
  };

  static Config ParseString(const std::string& text, const std::string& origin = "<config>") {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line, section;
    size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string t = detail::Trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        AF_CHECK(t.back() == ']' && t.size() > 2, origin, ":", line_no,
                 ": malformed section header '", t, "'");
        section = detail::Trim(t.substr(1, t.size() - 2));
        AF_CHECK(!section.empty(), origin, ":", line_no, ": empty section name");
        continue;
      }
      const size_t eq = t.find('=');
      AF_CHECK(eq != std::string::npos, origin, ":", line_no,
               ": expected 'key = value', got '", t, "'");
      const std::string key = detail::Trim(t.substr(0, eq));
      const std::string value = detail::Trim(t.substr(eq + 1));
      AF_CHECK(!key.empty(), origin, ":", line_no, ": empty key");
      for (char c : key)
        AF_CHECK((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_', origin, ":",
                 line_no, ": key '", key, "' must be lowercase [a-z0-9_]");
      AF_CHECK(cfg.Find(section, key) == std::nullopt, origin, ":", line_no, ": duplicate key '",
               cfg.Qualify(section, key), "'");
      cfg.entries_.push_back(Entry{section, key, value, line_no});
      cfg.index_[section][key] = cfg.entries_.size() - 1;
    }
    return cfg;
  }

  static Config ParseFile(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    AF_CHECK(f.good(), "cannot open config file: ", path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return ParseString(buf.str(), path);
  }

  const std::string& origin() const { return origin_; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::optional<std::string> Find(const std::string& section, const std::string& key) const {
    const auto sit = index_.find(section);
    if (sit == index_.end()) return std::nullopt;
    const auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return std::nullopt;
    return entries_[kit->second].value;
  }

  // CLI flag overrides funnel through here; overriding keeps the original
  // entry position so error messages still point at the file line.
  void Set(const std::string& section, const std::string& key, const std::string& value) {
    const auto sit = index_.find(section);
    if (sit != index_.end()) {
      const auto kit = sit->second.find(key);
      if (kit != sit->second.end()) {
        entries_[kit->second].value = value;
        return;
      }
    }
    entries_.push_back(Entry{section, key, value, 0});
    index_[section][key] = entries_.size() - 1;
  }

  std::string GetString(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    return Find(section, key).value_or(fallback);
  }

  std::string RequireString(const std::string& section, const std::string& key) const {
    const auto v = Find(section, key);
    AF_CHECK(v.has_value() && !v->empty(), origin_, ": missing required key '",
             Qualify(section, key), "'");
    return *v;
  }

  int64_t GetInt(const std::string& section, const std::string& key, int64_t fallback) const {
    const auto v = Find(section, key);
    if (!v) return fallback;
    return ParseInt(section, key, *v);
  }

  uint64_t GetU64(const std::string& section, const std::string& key, uint64_t fallback) const {
    const auto v = Find(section, key);
    if (!v) return fallback;
    char* end = nullptr;
    const std::string& s = *v;
    errno = 0;
    const unsigned long long parsed = std::strtoull(s.c_str(), &end, 0);
    AF_CHECK(errno == 0 && end != s.c_str() && *end == '\0' && s[0] != '-', origin_, ": key '",
             Qualify(section, key), "' = '", s, "' is not an unsigned integer");
    return parsed;
  }

  double GetReal(const std::string& section, const std::string& key, double fallback) const {
    const auto v = Find(section, key);
    if (!v) return fallback;
    char* end = nullptr;
    const std::string& s = *v;
    const double parsed = std::strtod(s.c_str(), &end);
    AF_CHECK(end != s.c_str() && *end == '\0', origin_, ": key '", Qualify(section, key),
             "' = '", s, "' is not a real number");
    return parsed;
  }

  bool GetBool(const std::string& section, const std::string& key, bool fallback) const {
    const auto v = Find(section, key);
    if (!v) return fallback;
    const std::string& s = *v;
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    AF_FAIL(origin_, ": key '", Qualify(section, key), "' = '", s,
            "' is not a boolean (true/false)");
  }

  // Comma-separated list, entries trimmed, empty entries dropped.
  std::vector<std::string> GetList(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    const auto v = Find(section, key);
    if (!v) return out;
    std::string cur;
    for (char c : *v) {
      if (c == ',') {
        const std::string t = detail::Trim(cur);
        if (!t.empty()) out.push_back(t);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    const std::string t = detail::Trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
  }

  static std::string Qualify(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

 private:
  int64_t ParseInt(const std::string& section, const std::string& key,
                   const std::string& s) const {
    char* end = nullptr;
    errno = 0;
    const long long parsed = std::strtoll(s.c_str(), &end, 0);
    AF_CHECK(errno == 0 && end != s.c_str() && *end == '\0', origin_, ": key '",
             Qualify(section, key), "' = '", s, "' is not an integer");
    return parsed;
  }

  std::string origin_ = "<config>";
  std::vector<Entry> entries_;
  std::map<std::string, std::map<std::string, size_t>> index_;
};

}  // namespace augforge

#endif  // AUGFORGE_CONFIG_HPP_
