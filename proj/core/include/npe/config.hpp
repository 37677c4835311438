#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace npe {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Plain-text `key = value` lines. Blank lines and '#' comments are skipped,
/// surrounding whitespace is trimmed.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text);
  static KeyValueFile load(const std::filesystem::path& path);

  const std::vector<KeyValue>& entries() const { return entries_; }
  /// Last value bound to key, if any.
  std::optional<std::string> get(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;

 private:
  std::vector<KeyValue> entries_;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace npe
