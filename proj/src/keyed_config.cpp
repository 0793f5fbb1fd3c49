/*
 * Copyright 2026 The ccs-forge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "keyed_config.hpp"

#include "error.hpp"
#include "textio.hpp"

namespace ccsforge {

KeyedConfig KeyedConfig::parse(const std::string& text, const std::string& source) {
  KeyedConfig cfg;
  cfg.source_ = source;
  auto lines = textio::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = lines[i];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = textio::trim(line);
    if (line.empty()) continue;
    const int lineno = static_cast<int>(i + 1);
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::Config, source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key(textio::trim(line.substr(0, eq)));
    std::string value(textio::trim(line.substr(eq + 1)));
    if (key.empty()) {
      fail(ErrorKind::Config, source + ":" + std::to_string(lineno) + ": empty key");
    }
    if (cfg.entries_.count(key)) {
      fail(ErrorKind::Config, source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    cfg.entries_[key] = Entry{value, lineno};
    cfg.order_.push_back(key);
  }
  return cfg;
}

KeyedConfig KeyedConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = textio::read_file(path);
  } catch (const Error&) {
    fail(ErrorKind::Config, "cannot read config file " + path.string());
  }
  return parse(text, path.string());
}

bool KeyedConfig::has(const std::string& key) const { return entries_.count(key) != 0; }

const KeyedConfig::Entry& KeyedConfig::require(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) fail(ErrorKind::Config, source_ + ": missing key '" + key + "'");
  used_.insert(key);
  return it->second;
}

void KeyedConfig::bad_value(const std::string& key, const std::string& why) const {
  auto it = entries_.find(key);
  std::string where = source_;
  if (it != entries_.end()) where += ":" + std::to_string(it->second.line);
  fail(ErrorKind::Config, where + ": key '" + key + "' " + why);
}

std::optional<std::string> KeyedConfig::find(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return require(key).value;
}

std::string KeyedConfig::get_string(const std::string& key) const { return require(key).value; }

double KeyedConfig::get_double(const std::string& key) const {
  auto v = textio::parse_double(require(key).value);
  if (!v) bad_value(key, "is not a number");
  return *v;
}

double KeyedConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyedConfig::get_int(const std::string& key) const {
  auto v = textio::parse_int(require(key).value);
  if (!v) bad_value(key, "is not an integer");
  return *v;
}

long long KeyedConfig::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KeyedConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = require(key).value;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, "is not a boolean");
}

std::vector<std::string> KeyedConfig::get_string_list(const std::string& key) const {
  std::vector<std::string> out;
  const auto& v = require(key).value;
  if (textio::trim(v).empty()) return out;
  for (auto item : textio::split(v, ',')) {
    auto t = textio::trim(item);
    if (t.empty()) bad_value(key, "has an empty list item");
    out.emplace_back(t);
  }
  return out;
}

std::vector<double> KeyedConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_string_list(key)) {
    auto v = textio::parse_double(item);
    if (!v) bad_value(key, "has a non-numeric item '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

std::vector<long long> KeyedConfig::get_int_list(const std::string& key) const {
  std::vector<long long> out;
  for (const auto& item : get_string_list(key)) {
    auto v = textio::parse_int(item);
    if (!v) bad_value(key, "has a non-integer item '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

void KeyedConfig::set(const std::string& key, const std::string& value) {
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = Entry{value, 0};
}

std::vector<std::string> KeyedConfig::subsections(const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string head = prefix + ".";
  for (const auto& key : order_) {
    if (key.rfind(head, 0) != 0) continue;
    auto rest = key.substr(head.size());
    auto dot = rest.find('.');
    if (dot == std::string::npos) continue;
    auto name = rest.substr(0, dot);
    bool seen = false;
    for (const auto& o : out) seen = seen || o == name;
    if (!seen) out.push_back(name);
  }
  return out;
}

void KeyedConfig::reject_unused() const {
  std::string unknown;
  for (const auto& key : order_) {
    if (used_.count(key)) continue;
    if (!unknown.empty()) unknown += ", ";
    unknown += key + " (line " + std::to_string(entries_.at(key).line) + ")";
  }
  if (!unknown.empty()) fail(ErrorKind::Config, source_ + ": unknown keys: " + unknown);
}

std::string KeyedConfig::canonical() const {
  std::string out;
  for (const auto& [key, entry] : entries_) out += key + " = " + entry.value + "\n";
  return out;
}

}  // namespace ccsforge
