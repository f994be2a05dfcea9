#ifndef DRIFTFORGE_CONFIG_H_
#define DRIFTFORGE_CONFIG_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace driftforge {

// Flat key/value settings in a TOML-like subset:
//
//   # comment
//   seed = 7
//   [adapt]            -> following keys are prefixed "adapt."
//   batch_size = 64
//   lexicon = "lex.json"
//
// Values are kept as strings; typed getters convert on access.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& content);  // ParseError with line
  static KeyValueConfig load(const std::string& path);      // IoError if unreadable

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

  // FNV-1a over the sorted "key=value" lines, as 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace driftforge

#endif  // DRIFTFORGE_CONFIG_H_
