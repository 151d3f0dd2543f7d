#pragma once

#include "gazefusion/error.hpp"

#include <charconv>
#include <map>
#include <string>
#include <string_view>

namespace gazefusion {

/// Plain-text "key=value" lines. Blank lines and lines starting with '#'
/// are ignored; surrounding whitespace is trimmed. Duplicate keys and lines
/// without '=' raise the given error code.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::string_view text, ErrorCode on_error);
  static KeyValueFile read(const std::string& path, ErrorCode on_error);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  explicit KeyValueFile(ErrorCode code) : code_(code) {}
  std::map<std::string, std::string> values_;
  ErrorCode code_;
};

std::string_view trim(std::string_view s);

/// Parses the whole string as a number or throws with the given code.
double parse_double(std::string_view s, ErrorCode on_error);
long long parse_int(std::string_view s, ErrorCode on_error);

}  // namespace gazefusion
