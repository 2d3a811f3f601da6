#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace berrygrip {

// Plain-text configuration: "[section]" headers over "key = value" lines,
// '#' or ';' comments. Keys are addressed as "section.key"; keys before any
// section header live in the "" section.
class Config {
 public:
  static Config parse_string(const std::string& text);
  static Config parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  std::vector<std::string> sections() const;

 private:
  const std::string* find(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Environment variable consulted for a config path when --config is absent.
inline constexpr const char* kConfigEnvVar = "BERRYGRIP_CONFIG";

}  // namespace berrygrip
