#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace seqmatch {

// Flat key=value config files: one pair per line, '#' starts a comment.
// Readers must consume every key; leftovers are a validation error, so
// misspelled options never pass silently.
class KvConfig {
 public:
  KvConfig() = default;
  static KvConfig from_file(const std::filesystem::path& path);
  static KvConfig from_text(const std::string& text, const std::string& source);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  std::size_t get_size(const std::string& key, std::size_t fallback);
  // Comma-separated positive integers.
  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& fallback);

  // Throws ArgumentError naming any key that was never read.
  void finish() const;

  const std::string& raw_text() const { return raw_; }

 private:
  std::string source_ = "<none>";
  std::string raw_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

}  // namespace seqmatch
