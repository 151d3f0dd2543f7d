#include "gazefusion/key_value.hpp"

#include <fstream>
#include <sstream>

namespace gazefusion {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view s, ErrorCode on_error) {
  s = trim(s);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(on_error, "not a number: '" + std::string(s) + "'");
  }
  return value;
}

long long parse_int(std::string_view s, ErrorCode on_error) {
  s = trim(s);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(on_error, "not an integer: '" + std::string(s) + "'");
  }
  return value;
}

KeyValueFile KeyValueFile::parse(std::string_view text, ErrorCode on_error) {
  KeyValueFile out(on_error);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(on_error, "line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(on_error, "line " + std::to_string(line_no) + ": empty key");
    if (!out.values_.emplace(key, value).second) {
      throw Error(on_error, "duplicate key '" + key + "'");
    }
  }
  return out;
}

KeyValueFile KeyValueFile::read(const std::string& path, ErrorCode on_error) {
  std::ifstream in(path);
  if (!in) throw Error(on_error, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), on_error);
}

const std::string& KeyValueFile::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(code_, "missing key '" + key + "'");
  return it->second;
}

double KeyValueFile::get_double(const std::string& key) const { return parse_double(get(key), code_); }

long long KeyValueFile::get_int(const std::string& key) const { return parse_int(get(key), code_); }

bool KeyValueFile::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw Error(code_, "not a boolean for '" + key + "': " + v);
}

}  // namespace gazefusion
