#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace genread {

// Key/value configuration with sections.
//
//   # comment
//   [section.name]
//   key = value            bare value, runs to end of line or an unquoted '#'
//   other = "quoted # ok"  double-quoted value, \" and \\ escapes
//
// Keys are unique per section and keep their declaration order. Keys before
// the first section header belong to the "" section.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  std::optional<std::string> get(std::string_view section, std::string_view key) const;
  std::string get_string(std::string_view section, std::string_view key, const std::string& fallback) const;
  long long get_int(std::string_view section, std::string_view key, long long fallback) const;
  double get_double(std::string_view section, std::string_view key, double fallback) const;

  // Entries of one section in declaration order.
  std::vector<std::pair<std::string, std::string>> entries(std::string_view section) const;
  std::vector<std::string> sections() const;

  // Inserts or overwrites (command-line overrides).
  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };
  Section* find(std::string_view name);
  const Section* find(std::string_view name) const;

  std::vector<Section> sections_;
  std::string source_;
};

// Parses "a, b, c" into trimmed, non-empty pieces.
std::vector<std::string> split_list(std::string_view value);

}  // namespace genread
