#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace selfdual {

/// Line-oriented "key = value" entries under "[section]" headers. '#' and ';'
/// start comments. Every section and key must appear in the schema below.
///
/// Lookups with a default record the default, so manifest() echoes the
/// configuration as it was resolved.
class Config {
 public:
  /// Throws ConfigError naming the line for syntax errors, duplicates and
  /// unknown sections or keys.
  static Config parse(std::string_view text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  /// Directory of the loaded file; relative paths in the config resolve against it.
  const std::string& base_dir() const { return base_dir_; }
  bool empty() const { return entries_.empty(); }
  bool has(const std::string& section, const std::string& key) const;

  /// Throw ConfigError when the key is missing or malformed.
  std::string get(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key) const;

  std::string get(const std::string& section, const std::string& key, const std::string& fallback);
  double get_double(const std::string& section, const std::string& key, double fallback);
  int get_int(const std::string& section, const std::string& key, int fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);

  /// Throws ConfigError unless every named key is present.
  void require(const std::string& section, std::initializer_list<const char*> keys) const;

  /// Sections in schema order, keys sorted.
  std::string manifest() const;

 private:
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::string> entries_;
  std::string origin_;
  std::string base_dir_;
};

/// Allowed sections with their keys, in manifest order.
const std::vector<std::pair<std::string, std::vector<std::string>>>& config_schema();

}  // namespace selfdual
