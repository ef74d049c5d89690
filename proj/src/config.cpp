#include "selfdual/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "selfdual/errors.hpp"

namespace selfdual {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

const std::vector<std::string>* schema_keys(const std::string& section) {
  for (const auto& [name, keys] : config_schema())
    if (name == section) return &keys;
  return nullptr;
}

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

}  // namespace

const std::vector<std::pair<std::string, std::vector<std::string>>>& config_schema() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> schema = {
      {"grid", {"dim", "x", "y", "nx", "ny"}},
      {"vectorfield", {"ax", "ay"}},
      {"coefficients", {"a0", "f", "tau"}},
      {"potential", {"p", "m", "alpha"}},
      {"problem", {"variant", "omega", "T", "steps", "initial", "initial_alt"}},
      {"solver", {"tol", "max_iter", "scheme", "grad_tol"}},
      {"skew", {"pairs", "inconsistent_divergence"}},
      {"asd", {"kind", "dofs", "lambda", "skew", "radius", "samples", "probe_radius", "probe_samples", "bound"}},
      {"oracle", {"file", "tol"}},
  };
  return schema;
}

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::string section;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    const std::size_t comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!schema_keys(section)) throw ConfigError(at + "unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(at + "expected 'key = value'");
    if (section.empty()) throw ConfigError(at + "key outside of any section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    const auto* keys = schema_keys(section);
    if (std::find(keys->begin(), keys->end(), key) == keys->end())
      throw ConfigError(at + "unknown key '" + key + "' in [" + section + "]");
    if (value.empty()) throw ConfigError(at + "empty value for " + where(section, key));
    if (!c.entries_.emplace(Key{section, key}, value).second)
      throw ConfigError(at + "duplicate key " + where(section, key));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  Config c = parse(ss.str(), path);
  c.base_dir_ = std::filesystem::path(path).parent_path().string();
  return c;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return entries_.count(Key{section, key}) != 0;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  const auto it = entries_.find(Key{section, key});
  if (it == entries_.end()) throw ConfigError(origin_ + ": missing required key " + where(section, key));
  return it->second;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const std::string s = get(section, key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": " + where(section, key) + " is not a number: '" + s + "'");
  return v;
}

int Config::get_int(const std::string& section, const std::string& key) const {
  const std::string s = get(section, key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(origin_ + ": " + where(section, key) + " is not an integer: '" + s + "'");
  return v;
}

std::string Config::get(const std::string& section, const std::string& key, const std::string& fallback) {
  return entries_.emplace(Key{section, key}, fallback).first->second;
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) {
  if (!has(section, key)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", fallback);
    entries_.emplace(Key{section, key}, buf);
  }
  return get_double(section, key);
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) {
  if (!has(section, key)) entries_.emplace(Key{section, key}, std::to_string(fallback));
  return get_int(section, key);
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) {
  const std::string s = get(section, key, fallback ? "true" : "false");
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(origin_ + ": " + where(section, key) + " must be true or false, got '" + s + "'");
}

void Config::require(const std::string& section, std::initializer_list<const char*> keys) const {
  for (const char* k : keys) get(section, k);
}

std::string Config::manifest() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& [section, keys] : config_schema()) {
    bool any = false;
    for (const auto& [k, v] : entries_) {
      if (k.first != section) continue;
      if (!any) {
        os << (first ? "" : "\n") << "[" << section << "]\n";
        any = true;
        first = false;
      }
      os << k.second << " = " << v << "\n";
    }
  }
  return os.str();
}

}  // namespace selfdual
