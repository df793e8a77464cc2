#include "genread/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "genread/errors.hpp"
#include "genread/text_utils.hpp"

namespace genread {
namespace {

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') return false;
  }
  return true;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  cfg.sections_.push_back({"", {}});
  std::size_t current = 0;

  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  auto error = [&](const std::string& msg) {
    fail(ErrorCode::MalformedInput, source + ":" + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) error("unterminated section header");
      const auto rest = trim(std::string_view(line).substr(close + 1));
      if (!rest.empty() && rest[0] != '#') error("trailing characters after section header");
      const auto name = trim(std::string_view(line).substr(1, close - 1));
      if (!valid_name(name)) error("invalid section name '" + name + "'");
      if (cfg.find(name)) error("duplicate section [" + name + "]");
      cfg.sections_.push_back({name, {}});
      current = cfg.sections_.size() - 1;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) error("expected 'key = value'");
    const auto key = trim(std::string_view(line).substr(0, eq));
    if (!valid_name(key)) error("invalid key '" + key + "'");
    std::string_view rhs = std::string_view(line).substr(eq + 1);
    while (!rhs.empty() && std::isspace(static_cast<unsigned char>(rhs.front()))) rhs.remove_prefix(1);

    std::string value;
    if (!rhs.empty() && rhs.front() == '"') {
      std::size_t i = 1;
      bool closed = false;
      for (; i < rhs.size(); ++i) {
        if (rhs[i] == '\\' && i + 1 < rhs.size()) {
          value.push_back(rhs[++i]);
        } else if (rhs[i] == '"') {
          closed = true;
          break;
        } else {
          value.push_back(rhs[i]);
        }
      }
      if (!closed) error("unterminated string");
      const auto rest = trim(rhs.substr(i + 1));
      if (!rest.empty() && rest[0] != '#') error("trailing characters after string value");
    } else {
      const auto hash = rhs.find('#');
      value = trim(rhs.substr(0, hash));
    }

    auto& sec = cfg.sections_[current];
    for (const auto& [k, _] : sec.entries) {
      if (k == key) error("duplicate key '" + key + "'");
    }
    sec.entries.emplace_back(key, value);
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

Config::Section* Config::find(std::string_view name) {
  for (auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const Config::Section* Config::find(std::string_view name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::optional<std::string> Config::get(std::string_view section, std::string_view key) const {
  const auto* sec = find(section);
  if (!sec) return std::nullopt;
  for (const auto& [k, v] : sec->entries) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string Config::get_string(std::string_view section, std::string_view key, const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

long long Config::get_int(std::string_view section, std::string_view key, long long fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    fail(ErrorCode::MalformedInput, source_ + ": [" + std::string(section) + "] " + std::string(key) +
                                        ": expected an integer, got '" + *v + "'");
  }
  return out;
}

double Config::get_double(std::string_view section, std::string_view key, double fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    fail(ErrorCode::MalformedInput, source_ + ": [" + std::string(section) + "] " + std::string(key) +
                                        ": expected a number, got '" + *v + "'");
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> Config::entries(std::string_view section) const {
  const auto* sec = find(section);
  return sec ? sec->entries : std::vector<std::pair<std::string, std::string>>{};
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& s : sections_) {
    if (!s.name.empty()) out.push_back(s.name);
  }
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto* sec = find(section);
  if (!sec) {
    sections_.push_back({section, {}});
    sec = &sections_.back();
  }
  for (auto& [k, v] : sec->entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  sec->entries.emplace_back(key, value);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    auto piece = trim(value.substr(start, comma - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = comma + 1;
  }
  return out;
}

}  // namespace genread
