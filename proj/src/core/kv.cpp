#include "core/kv.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace saber {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

KvFile KvFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

KvFile KvFile::parse_text(const std::string& text, const std::string& origin) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      raise(ErrorCode::parse, origin + ":" + std::to_string(lineno) + ": expected `key = value`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      raise(ErrorCode::parse, origin + ":" + std::to_string(lineno) + ": empty key");
    kv.values_[key] = value;
  }
  return kv;
}

std::optional<std::string> KvFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KvFile::get_string(const std::string& key) const {
  auto v = get(key);
  if (!v) raise(ErrorCode::validation, "missing key `" + key + "`");
  return *v;
}

double KvFile::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  char* end = nullptr;
  double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    raise(ErrorCode::parse, "key `" + key + "`: `" + v + "` is not a number");
  return d;
}

long KvFile::get_long(const std::string& key) const {
  const std::string v = get_string(key);
  char* end = nullptr;
  long l = std::strtol(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    raise(ErrorCode::parse, "key `" + key + "`: `" + v + "` is not an integer");
  return l;
}

double KvFile::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KvFile::get_long_or(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

std::string KvFile::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += " = ";
    out += v;
    out += "\n";
  }
  return out;
}

}  // namespace saber
