#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace spikecpc {

/// Flat `key = value` configuration with typed lookups. Every key present in
/// the source must be consumed by some lookup; leftovers are fatal, so typos
/// never silently fall back to defaults.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback);
  long get_int(const std::string& key, long fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          const std::vector<std::uint64_t>& fallback);

  /// Throws ConfigError if any key was set but never read.
  void ensure_all_consumed() const;

  /// Deterministic echo (sorted), for run provenance.
  std::vector<std::pair<std::string, std::string>> echo() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace spikecpc
