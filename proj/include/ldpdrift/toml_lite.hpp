//
// Copyright 2026 The ldpdrift Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Reader for the TOML subset used by experiment configs: comments,
// [table] and [a.b] headers, [[array-of-tables]], bare or quoted keys, basic
// strings, integers, floats, booleans and (possibly multi-line) arrays.
// Inline tables, literal strings and dates are rejected with a message.

#pragma once

#include <cctype>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ldpdrift/errors.hpp"

namespace ldpdrift::toml_lite {

namespace detail {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  nlohmann::json parse() {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        table = parse_header(root);
      } else {
        parse_key_value(*table);
      }
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw config_error("toml line " + std::to_string(line_) + ": " + what);
  }
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return at_end() ? '\0' : s_[pos_]; }
  char take() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) take();
  }
  void skip_comment() {
    if (peek() == '#')
      while (!at_end() && peek() != '\n') take();
  }
  // Spaces, comments and newlines.
  void skip_blank_lines() {
    while (!at_end()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') take();
      else break;
    }
  }
  void expect_line_end() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') take();
    if (!at_end() && take() != '\n') fail("unexpected trailing characters");
  }

  std::string parse_key_part() {
    skip_spaces();
    if (peek() == '"') return parse_string();
    std::string key;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      key += take();
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_dotted_key() {
    std::vector<std::string> parts{parse_key_part()};
    skip_spaces();
    while (peek() == '.') {
      take();
      parts.push_back(parse_key_part());
      skip_spaces();
    }
    return parts;
  }

  nlohmann::json* descend(nlohmann::json& root, const std::vector<std::string>& parts, std::size_t count) {
    nlohmann::json* t = &root;
    for (std::size_t i = 0; i < count; ++i) {
      nlohmann::json& next = (*t)[parts[i]];
      if (next.is_null()) next = nlohmann::json::object();
      if (next.is_array()) {
        if (next.empty() || !next.back().is_object()) fail("key '" + parts[i] + "' is not a table");
        t = &next.back();
      } else if (next.is_object()) {
        t = &next;
      } else {
        fail("key '" + parts[i] + "' is not a table");
      }
    }
    return t;
  }

  nlohmann::json* parse_header(nlohmann::json& root) {
    take();
    const bool array = peek() == '[';
    if (array) take();
    const auto parts = parse_dotted_key();
    if (take() != ']' || (array && take() != ']')) fail("malformed table header");
    expect_line_end();
    nlohmann::json* parent = descend(root, parts, parts.size() - 1);
    nlohmann::json& slot = (*parent)[parts.back()];
    if (array) {
      if (slot.is_null()) slot = nlohmann::json::array();
      if (!slot.is_array()) fail("'" + parts.back() + "' is already defined as a non-array");
      slot.push_back(nlohmann::json::object());
      return &slot.back();
    }
    if (slot.is_null()) slot = nlohmann::json::object();
    if (!slot.is_object()) fail("'" + parts.back() + "' is already defined as a value");
    return &slot;
  }

  void parse_key_value(nlohmann::json& table) {
    const auto parts = parse_dotted_key();
    if (take() != '=') fail("expected '=' after key");
    skip_spaces();
    nlohmann::json value = parse_value();
    expect_line_end();
    nlohmann::json* t = descend(table, parts, parts.size() - 1);
    if (t->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
    (*t)[parts.back()] = std::move(value);
  }

  std::string parse_string() {
    if (take() != '"') fail("expected '\"'");
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char e = take();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
    return out;
  }

  nlohmann::json parse_array() {
    take();
    nlohmann::json arr = nlohmann::json::array();
    while (true) {
      skip_blank_lines();
      if (peek() == ']') {
        take();
        return arr;
      }
      arr.push_back(parse_value());
      skip_blank_lines();
      if (peek() == ',') {
        take();
      } else if (peek() == ']') {
        take();
        return arr;
      } else {
        fail("expected ',' or ']' in array");
      }
    }
  }

  nlohmann::json parse_value() {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    if (c == '{') fail("inline tables are not supported");
    if (c == '\'') fail("literal strings are not supported");
    std::string token;
    while (!at_end() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' && peek() != '\r' &&
           peek() != ' ' && peek() != '\t')
      token += take();
    if (token == "true") return true;
    if (token == "false") return false;
    std::string clean;
    for (char ch : token)
      if (ch != '_') clean += ch;
    if (clean.empty()) fail("expected a value");
    if (clean == "inf" || clean == "+inf") return std::numeric_limits<double>::infinity();
    if (clean == "-inf") return -std::numeric_limits<double>::infinity();
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    std::size_t used = 0;
    try {
      if (is_float) {
        const double v = std::stod(clean, &used);
        if (used == clean.size()) return v;
      } else {
        const long long v = std::stoll(clean, &used);
        if (used == clean.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + token + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace detail

inline nlohmann::json parse(const std::string& text) { return detail::Parser(text).parse(); }

}  // namespace ldpdrift::toml_lite
