#pragma once

#include <map>
#include <optional>
#include <string>

namespace saber {

// Flat `key = value` text files: one pair per line, `#` starts a comment.
// Used for run config files and the published-expectations dataset.
class KvFile {
 public:
  KvFile() = default;
  static KvFile parse_file(const std::string& path);
  static KvFile parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key) const;  // throws if absent
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long get_long_or(const std::string& key, long fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(const std::string& s);

}  // namespace saber
