#include "borderflux/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "borderflux/error.hpp"

namespace bflux::toml {

namespace {

struct Parser {
  std::string_view text;
  std::string name;
  std::size_t pos = 0;
  std::size_t line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(name + ":" + std::to_string(line) + ": " + msg);
  }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char get() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  void skip_ws_inline() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos;
  }

  // Skips whitespace, newlines and comments.
  void skip_ws_and_comments() {
    while (!eof()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos;
      } else if (c == '\n') {
        get();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') ++pos;
      } else {
        break;
      }
    }
  }

  void expect_line_end() {
    skip_ws_inline();
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') ++pos;
    }
    if (!eof() && peek() == '\r') ++pos;
    if (!eof()) {
      if (peek() != '\n') fail("unexpected trailing characters");
      get();
    }
  }

  static bool is_bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key() {
    skip_ws_inline();
    if (eof()) fail("expected key");
    if (peek() == '"' || peek() == '\'') return parse_string();
    std::string key;
    while (!eof() && is_bare_char(peek())) key += text[pos++];
    if (key.empty()) fail("expected key");
    return key;
  }

  std::vector<std::string> parse_dotted_key() {
    std::vector<std::string> parts;
    parts.push_back(parse_key());
    skip_ws_inline();
    while (!eof() && peek() == '.') {
      ++pos;
      parts.push_back(parse_key());
      skip_ws_inline();
    }
    return parts;
  }

  std::string parse_string() {
    char quote = get();
    std::string out;
    while (true) {
      if (eof()) fail("unterminated string");
      char c = get();
      if (c == quote) break;
      if (c == '\n') fail("newline in string");
      if (quote == '"' && c == '\\') {
        if (eof()) fail("bad escape");
        char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail("unsupported escape");
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  Value parse_value() {
    skip_ws_inline();
    if (eof()) fail("expected value");
    char c = peek();
    if (c == '"' || c == '\'') return Value{Value::Storage{parse_string()}};
    if (c == '[') return parse_array();
    if (c == '{') fail("inline tables are not supported");
    // Bare token: bool, number, or date-like (kept as a string).
    std::string tok;
    while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' &&
           peek() != '\r') {
      tok += text[pos++];
    }
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
    if (tok == "true") return Value{Value::Storage{true}};
    if (tok == "false") return Value{Value::Storage{false}};
    if (tok.empty()) fail("expected value");
    // Date / datetime forms stay strings.
    if (tok.size() >= 10 && tok[4] == '-' && tok[7] == '-') return Value{Value::Storage{tok}};
    bool has_dot = tok.find('.') != std::string::npos ||
                   tok.find('e') != std::string::npos || tok.find('E') != std::string::npos;
    if (!has_dot) {
      std::int64_t iv = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
      if (ec == std::errc{} && p == tok.data() + tok.size()) return Value{Value::Storage{iv}};
    }
    double dv = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), dv);
    if (ec == std::errc{} && p == tok.data() + tok.size()) return Value{Value::Storage{dv}};
    fail("cannot parse value '" + tok + "'");
  }

  Value parse_array() {
    get();  // '['
    Array arr;
    while (true) {
      skip_ws_and_comments();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        ++pos;
        break;
      }
      arr.push_back(parse_value());
      skip_ws_and_comments();
      if (!eof() && peek() == ',') {
        ++pos;
        continue;
      }
      skip_ws_and_comments();
      if (eof() || peek() != ']') fail("expected ',' or ']' in array");
      ++pos;
      break;
    }
    return Value{Value::Storage{std::move(arr)}};
  }
};

Table* descend(Table* t, const std::vector<std::string>& path, Parser& p) {
  for (const auto& part : path) {
    auto it = t->find(part);
    if (it == t->end()) {
      it = t->emplace(part, Value{Value::Storage{Table{}}}).first;
    }
    Value& v = it->second;
    if (v.is_array()) {
      Array& arr = v.as_array();
      if (arr.empty() || !arr.back().is_table()) p.fail("key '" + part + "' is not a table");
      t = &arr.back().as_table();
    } else if (v.is_table()) {
      t = &v.as_table();
    } else {
      p.fail("key '" + part + "' is not a table");
    }
  }
  return t;
}

}  // namespace

Table parse(std::string_view text, const std::string& name) {
  Parser p{text, name};
  Table root;
  Table* current = &root;
  while (true) {
    p.skip_ws_and_comments();
    if (p.eof()) break;
    char c = p.peek();
    if (c == '[') {
      ++p.pos;
      bool is_array = !p.eof() && p.peek() == '[';
      if (is_array) ++p.pos;
      auto path = p.parse_dotted_key();
      p.skip_ws_inline();
      if (p.eof() || p.peek() != ']') p.fail("expected ']'");
      ++p.pos;
      if (is_array) {
        if (p.eof() || p.peek() != ']') p.fail("expected ']]'");
        ++p.pos;
      }
      p.expect_line_end();
      Table* parent = &root;
      if (path.size() > 1) {
        parent = descend(parent, {path.begin(), path.end() - 1}, p);
      }
      const std::string& leaf = path.back();
      if (is_array) {
        auto it = parent->find(leaf);
        if (it == parent->end()) {
          it = parent->emplace(leaf, Value{Value::Storage{Array{}}}).first;
        }
        if (!it->second.is_array()) p.fail("'" + leaf + "' is not an array of tables");
        it->second.as_array().push_back(Value{Value::Storage{Table{}}});
        current = &it->second.as_array().back().as_table();
      } else {
        auto it = parent->find(leaf);
        if (it == parent->end()) {
          it = parent->emplace(leaf, Value{Value::Storage{Table{}}}).first;
        }
        if (!it->second.is_table()) p.fail("'" + leaf + "' redefined with a different type");
        current = &it->second.as_table();
      }
    } else {
      auto path = p.parse_dotted_key();
      p.skip_ws_inline();
      if (p.eof() || p.peek() != '=') p.fail("expected '='");
      ++p.pos;
      Value v = p.parse_value();
      p.expect_line_end();
      Table* parent = current;
      if (path.size() > 1) {
        parent = descend(parent, {path.begin(), path.end() - 1}, p);
      }
      if (parent->count(path.back()) != 0) p.fail("duplicate key '" + path.back() + "'");
      parent->emplace(path.back(), std::move(v));
    }
  }
  return root;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  return parse(text, path);
}

const Value* find(const Table& root, std::string_view dotted) {
  const Table* t = &root;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted.find('.', start);
    std::string_view part = dot == std::string_view::npos ? dotted.substr(start)
                                                          : dotted.substr(start, dot - start);
    auto it = t->find(std::string(part));
    if (it == t->end()) return nullptr;
    if (dot == std::string_view::npos) return &it->second;
    if (!it->second.is_table()) return nullptr;
    t = &it->second.as_table();
    start = dot + 1;
  }
}

namespace {
[[noreturn]] void type_fail(std::string_view path, const char* want) {
  throw ConfigError("config key '" + std::string(path) + "' must be a " + want);
}
}  // namespace

std::string req_string(const Table& t, std::string_view path) {
  const Value* v = find(t, path);
  if (!v) throw ConfigError("missing config key '" + std::string(path) + "'");
  if (!v->is_string()) type_fail(path, "string");
  return v->as_string();
}

std::int64_t req_int(const Table& t, std::string_view path) {
  const Value* v = find(t, path);
  if (!v) throw ConfigError("missing config key '" + std::string(path) + "'");
  if (!v->is_int()) type_fail(path, "integer");
  return v->as_int();
}

std::string opt_string(const Table& t, std::string_view path, std::string fallback) {
  const Value* v = find(t, path);
  if (!v) return fallback;
  if (!v->is_string()) type_fail(path, "string");
  return v->as_string();
}

std::int64_t opt_int(const Table& t, std::string_view path, std::int64_t fallback) {
  const Value* v = find(t, path);
  if (!v) return fallback;
  if (!v->is_int()) type_fail(path, "integer");
  return v->as_int();
}

double opt_float(const Table& t, std::string_view path, double fallback) {
  const Value* v = find(t, path);
  if (!v) return fallback;
  if (!v->is_int() && !v->is_float()) type_fail(path, "number");
  return v->as_float();
}

bool opt_bool(const Table& t, std::string_view path, bool fallback) {
  const Value* v = find(t, path);
  if (!v) return fallback;
  if (!v->is_bool()) type_fail(path, "boolean");
  return v->as_bool();
}

std::vector<std::string> opt_string_array(const Table& t, std::string_view path,
                                          std::vector<std::string> fallback) {
  const Value* v = find(t, path);
  if (!v) return fallback;
  if (!v->is_array()) type_fail(path, "array");
  std::vector<std::string> out;
  for (const auto& e : v->as_array()) {
    if (!e.is_string()) type_fail(path, "array of strings");
    out.push_back(e.as_string());
  }
  return out;
}

std::optional<double> opt_float_maybe(const Table& t, std::string_view path) {
  const Value* v = find(t, path);
  if (!v) return std::nullopt;
  if (!v->is_int() && !v->is_float()) type_fail(path, "number");
  return v->as_float();
}

std::optional<std::int64_t> opt_int_maybe(const Table& t, std::string_view path) {
  const Value* v = find(t, path);
  if (!v) return std::nullopt;
  if (!v->is_int()) type_fail(path, "integer");
  return v->as_int();
}

const Array* find_table_array(const Table& t, std::string_view path) {
  const Value* v = find(t, path);
  if (!v || !v->is_array()) return nullptr;
  return &v->as_array();
}

}  // namespace bflux::toml
