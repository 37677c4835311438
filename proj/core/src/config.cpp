#include "npe/config.hpp"

#include "npe/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace npe {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

KeyValueFile KeyValueFile::parse(std::string_view text) {
  KeyValueFile file;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(ErrorCode::MalformedSyntax, "expected 'key = value'", line_no, 1);
    }
    std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(ErrorCode::MalformedSyntax, "empty key", line_no, 1);
    file.entries_.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

std::optional<std::string> KeyValueFile::get(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return it->value;
  }
  return std::nullopt;
}

double KeyValueFile::get_double(std::string_view key, double fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc{} || ptr != value->data() + value->size()) {
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(key) + "' is not a number: " + *value);
  }
  return out;
}

long long KeyValueFile::get_int(std::string_view key, long long fallback) const {
  const auto value = get(key);
  if (!value) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value->data(), value->data() + value->size(), out);
  if (ec != std::errc{} || ptr != value->data() + value->size()) {
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(key) + "' is not an integer: " + *value);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace npe
