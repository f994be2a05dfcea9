#include "driftforge/config.h"

#include <fmt/format.h>

#include <sstream>

#include "driftforge/error.h"
#include "driftforge/matrix_io.h"
#include "driftforge/random.h"
#include "driftforge/text.h"

namespace driftforge {

namespace {

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v, std::size_t lineno) {
  if (v.size() >= 2 && v.front() == '"') {
    if (v.back() != '"') throw ParseError("unterminated string", lineno);
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        const char n = v[++i];
        out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
      } else {
        out += v[i];
      }
    }
    return out;
  }
  if (!v.empty() && v.front() == '"') throw ParseError("unterminated string", lineno);
  return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& content) {
  KeyValueConfig cfg;
  std::istringstream in(content);
  std::string raw;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line(text::trim(strip_comment(raw)));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", lineno);
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (!valid_key(section)) throw ParseError("invalid section name '" + section + "'", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key(text::trim(line.substr(0, eq)));
    if (!valid_key(key)) throw ParseError("invalid key '" + key + "'", lineno);
    const std::string value = unquote(std::string(text::trim(line.substr(eq + 1))), lineno);
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  return parse(read_binary_file(path));
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const double d = std::stod(*v, &pos);
    if (pos == v->size()) return d;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(fmt::format("'{}' must be a number, got '{}'", key, *v));
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(*v, &pos);
    if (pos == v->size()) return i;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(fmt::format("'{}' must be an integer, got '{}'", key, *v));
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(fmt::format("'{}' must be true or false, got '{}'", key, *v));
}

std::string KeyValueConfig::hash() const {
  std::string canon;
  for (const auto& [k, v] : entries_) canon += k + "=" + v + "\n";
  return fmt::format("{:016x}", fnv1a(canon));
}

}  // namespace driftforge
