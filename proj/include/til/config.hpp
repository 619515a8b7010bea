#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace til {

// Raised for malformed config text or bad value conversions.
// `line` is 1-based; 0 means the location is not line-specific.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& msg, int line_no = 0)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
  int line;
};

// Flat `key = value` tree. Keys use dotted paths (e.g. scenario.duration_s),
// `#` starts a comment, later assignments override earlier ones.
class ConfigMap {
public:
  static ConfigMap parse_text(const std::string& text);
  static ConfigMap parse_file(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  const std::string& get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  void set_double(const std::string& key, double value);

  // Keys beginning with `prefix`, sorted; used for list-like groups (loads.0.mass, ...).
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  // Merge `other` on top of this map (other wins).
  void overlay(const ConfigMap& other);

  // Canonical text form (sorted keys); reparses to an identical map.
  std::string to_text() const;

  const std::map<std::string, std::string>& items() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

}  // namespace til
