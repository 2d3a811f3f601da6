#include "berrygrip/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "berrygrip/csv.hpp"

namespace berrygrip {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(s.substr(1, s.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    const size_t hash = value.find_first_of("#;");
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) { return parse_string(read_text_file(path)); }

const std::string* Config::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  return &k->second;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v->c_str(), &end);
  if (end != v->c_str() + v->size() || errno == ERANGE)
    throw std::runtime_error("config: " + section + "." + key + " is not a number: " + *v);
  return d;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const long long d = std::strtoll(v->c_str(), &end, 10);
  if (end != v->c_str() + v->size() || errno == ERANGE)
    throw std::runtime_error("config: " + section + "." + key + " is not an integer: " + *v);
  return d;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  errno = 0;
  char* end = nullptr;
  const unsigned long long d = std::strtoull(v->c_str(), &end, 10);
  if (end != v->c_str() + v->size() || errno == ERANGE)
    throw std::runtime_error("config: " + section + "." + key + " is not an unsigned integer: " + *v);
  return d;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::runtime_error("config: " + section + "." + key + " is not a boolean: " + *v);
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  out.reserve(sections_.size());
  for (const auto& [name, _] : sections_) out.push_back(name);
  return out;
}

}  // namespace berrygrip
