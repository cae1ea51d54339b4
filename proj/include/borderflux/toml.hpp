#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bflux::toml {

// Small TOML reader covering the subset this project's config files use:
// comments, [table] / [[array-of-tables]] headers with dotted paths,
// basic and literal strings, integers, floats, booleans, bare dates
// (kept as strings), and (nested) arrays. Inline tables and multi-line
// strings are not supported.
class Value;
using Table = std::map<std::string, Value>;
using Array = std::vector<Value>;

class Value {
 public:
  using Storage = std::variant<bool, std::int64_t, double, std::string, Array, Table>;

  Value() : storage_(std::string{}) {}
  explicit Value(Storage s) : storage_(std::move(s)) {}

  bool is_bool() const { return std::holds_alternative<bool>(storage_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(storage_); }
  bool is_float() const { return std::holds_alternative<double>(storage_); }
  bool is_string() const { return std::holds_alternative<std::string>(storage_); }
  bool is_array() const { return std::holds_alternative<Array>(storage_); }
  bool is_table() const { return std::holds_alternative<Table>(storage_); }

  bool as_bool() const { return std::get<bool>(storage_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(storage_); }
  double as_float() const {
    if (is_int()) return static_cast<double>(as_int());
    return std::get<double>(storage_);
  }
  const std::string& as_string() const { return std::get<std::string>(storage_); }
  const Array& as_array() const { return std::get<Array>(storage_); }
  const Table& as_table() const { return std::get<Table>(storage_); }
  Table& as_table() { return std::get<Table>(storage_); }
  Array& as_array() { return std::get<Array>(storage_); }

 private:
  Storage storage_;
};

// Throws ConfigError with <name>:<line> context on syntax errors.
Table parse(std::string_view text, const std::string& name = "<toml>");
Table parse_file(const std::string& path);

// Dotted-path lookup ("a.b.c"). Returns nullptr when any segment is missing.
const Value* find(const Table& root, std::string_view dotted);

// Typed getters. req_* throw ConfigError when missing or mistyped;
// opt_* return fallback when missing, throw when mistyped.
std::string req_string(const Table&, std::string_view path);
std::int64_t req_int(const Table&, std::string_view path);
std::string opt_string(const Table&, std::string_view path, std::string fallback);
std::int64_t opt_int(const Table&, std::string_view path, std::int64_t fallback);
double opt_float(const Table&, std::string_view path, double fallback);
bool opt_bool(const Table&, std::string_view path, bool fallback);
std::vector<std::string> opt_string_array(const Table&, std::string_view path,
                                          std::vector<std::string> fallback = {});
std::optional<double> opt_float_maybe(const Table&, std::string_view path);
std::optional<std::int64_t> opt_int_maybe(const Table&, std::string_view path);

// Array-of-tables at `path` ([[path]] entries); empty when absent.
const Array* find_table_array(const Table&, std::string_view path);

}  // namespace bflux::toml
