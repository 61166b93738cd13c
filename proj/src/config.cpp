// Copyright 2026 The codeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "codeq/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "codeq/error.hpp"

namespace codeq {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_integer(const std::string& s) {
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  return true;
}

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  // Keep reals lexically real so a round trip preserves the type.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

const char* type_name(const ConfigValue& v) {
  switch (v.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "real";
    default: return "string";
  }
}

}  // namespace

ConfigValue parse_config_value(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    return text.substr(1, text.size() - 2);
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (!text.empty() && is_integer(text)) {
    std::int64_t v = 0;
    const char* first = text.data() + (text[0] == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  }
  if (!text.empty()) {
    double v = 0.0;
    const char* first = text.data() + (text[0] == '+' ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  }
  return text;
}

std::string config_value_text(const ConfigValue& v) {
  switch (v.index()) {
    case 0: return std::get<bool>(v) ? "true" : "false";
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: return shortest(std::get<double>(v));
    default: {
      const auto& s = std::get<std::string>(v);
      // Quote strings that would otherwise lex as another type.
      if (parse_config_value(s).index() != 3 || s != trim(s)) return "\"" + s + "\"";
      return s;
    }
  }
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile out;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) throw ConfigError("malformed section header '" + t + "'", line_no);
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty() || section.find_first_of(" \t.") != std::string::npos) {
        throw ConfigError("invalid section name '" + section + "'", line_no);
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + t + "'", line_no);
    if (section.empty()) throw ConfigError("key outside of any [section]", line_no);
    const std::string key = trim(t.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t.") != std::string::npos) {
      throw ConfigError("invalid key '" + key + "'", line_no);
    }
    const std::string full = section + "." + key;
    if (out.entries.count(full)) throw ConfigError("duplicate key '" + full + "'", line_no);
    out.entries[full] = {parse_config_value(t.substr(eq + 1)), line_no};
  }
  return out;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void ConfigFile::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not KEY=VALUE", 0);
  const std::string key = trim(assignment.substr(0, eq));
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
    throw ConfigError("override key '" + key + "' must be section.key", 0);
  }
  entries[key] = {parse_config_value(assignment.substr(eq + 1)), 0};
}

namespace {

struct Reader {
  const ConfigEntry& e;
  const std::string& key;

  [[noreturn]] void fail(const std::string& want) const {
    throw ConfigError("'" + key + "' expects " + want + ", got " + type_name(e.value) + " '" +
                          config_value_text(e.value) + "'",
                      e.line);
  }
  double real() const {
    if (auto* d = std::get_if<double>(&e.value)) return *d;
    if (auto* i = std::get_if<std::int64_t>(&e.value)) return static_cast<double>(*i);
    fail("a real number");
  }
  std::int64_t integer() const {
    if (auto* i = std::get_if<std::int64_t>(&e.value)) return *i;
    fail("an integer");
  }
  std::size_t count() const {
    const auto v = integer();
    if (v < 0) fail("a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  bool boolean() const {
    if (auto* b = std::get_if<bool>(&e.value)) return *b;
    fail("true or false");
  }
  std::string text() const {
    if (auto* s = std::get_if<std::string>(&e.value)) return *s;
    fail("a string");
  }
  std::string choice(std::initializer_list<const char*> options) const {
    const std::string s = text();
    std::string all;
    for (const char* o : options) {
      if (s == o) return s;
      all += all.empty() ? o : std::string(" | ") + o;
    }
    throw ConfigError("'" + key + "' must be one of " + all + ", got '" + s + "'", e.line);
  }
  std::vector<std::size_t> sizes() const {
    if (auto* i = std::get_if<std::int64_t>(&e.value)) {
      if (*i <= 0) fail("positive layer widths");
      return {static_cast<std::size_t>(*i)};
    }
    std::vector<std::size_t> out;
    std::stringstream ss(text());
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (part.empty()) continue;
      const auto v = parse_config_value(part);
      const auto* n = std::get_if<std::int64_t>(&v);
      if (!n || *n <= 0) fail("a comma-separated list of positive integers");
      out.push_back(static_cast<std::size_t>(*n));
    }
    return out;
  }
};

}  // namespace

std::string ConfigFile::text() const {
  std::string out, section;
  for (const auto& [key, entry] : entries) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!out.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + config_value_text(entry.value) + "\n";
  }
  return out;
}

ExperimentConfig ExperimentConfig::from(const ConfigFile& file) {
  ExperimentConfig c;
  TrainConfig& t = c.train;
  QuantConfig& q = c.train.quant;
  using Setter = std::function<void(const Reader&)>;
  const std::map<std::string, Setter> setters = {
      {"experiment.name", [&](const Reader& r) { c.name = r.text(); }},
      {"experiment.output_dir", [&](const Reader& r) { c.output_dir = r.text(); }},
      {"experiment.seed", [&](const Reader& r) { t.seed = static_cast<std::uint64_t>(r.count()); }},
      {"data.source", [&](const Reader& r) { c.data.kind = r.choice({"mnist", "csv", "blobs"}); }},
      {"data.path", [&](const Reader& r) { c.data.path = r.text(); }},
      {"data.train_limit", [&](const Reader& r) { c.data.train_limit = r.count(); }},
      {"data.val_count", [&](const Reader& r) { c.data.val_count = r.count(); }},
      {"data.blobs_n", [&](const Reader& r) { c.data.blobs_n = r.count(); }},
      {"data.blobs_dims", [&](const Reader& r) { c.data.blobs_dims = r.count(); }},
      {"data.blobs_classes", [&](const Reader& r) { c.data.blobs_classes = r.count(); }},
      {"data.blobs_spread", [&](const Reader& r) { c.data.blobs_spread = r.real(); }},
      {"model.recipe", [&](const Reader& r) { c.model.kind = r.choice({"mlp", "mini_cnn"}); }},
      {"model.hidden", [&](const Reader& r) { c.model.hidden = r.sizes(); }},
      {"train.epochs", [&](const Reader& r) { t.epochs = r.count(); }},
      {"train.batch_size", [&](const Reader& r) { t.batch_size = r.count(); }},
      {"train.lr_weights", [&](const Reader& r) { t.lr_weights = r.real(); }},
      {"train.lr_theta", [&](const Reader& r) { t.lr_theta = r.real(); }},
      {"train.momentum", [&](const Reader& r) { t.momentum = r.real(); }},
      {"train.theta_momentum", [&](const Reader& r) { t.theta_momentum = r.real(); }},
      {"train.cosine", [&](const Reader& r) { t.cosine = r.boolean(); }},
      {"train.lambda_dz", [&](const Reader& r) { t.lambda_dz = r.real(); }},
      {"train.lambda_bit", [&](const Reader& r) { t.lambda_bit = r.real(); }},
      {"train.lambda_w", [&](const Reader& r) { t.lambda_w = r.real(); }},
      {"quant.mode",
       [&](const Reader& r) {
         const std::string m = r.choice({"fp32", "fixed", "mixed"});
         q.precision = m == "fp32" ? Precision::full : m == "fixed" ? Precision::fixed_bit : Precision::mixed;
       }},
      {"quant.bits", [&](const Reader& r) { q.bits = static_cast<int>(r.integer()); }},
      {"quant.init_theta", [&](const Reader& r) { q.init_theta = r.real(); }},
      {"quant.quantile", [&](const Reader& r) { q.quantile = r.real(); }},
      {"quant.b_min", [&](const Reader& r) { q.b_min = static_cast<int>(r.integer()); }},
      {"quant.b_max", [&](const Reader& r) { q.b_max = static_cast<int>(r.integer()); }},
      {"quant.epsilon", [&](const Reader& r) { q.epsilon = r.real(); }},
      {"quant.detach_scale_from_d", [&](const Reader& r) { q.detach_scale_from_d = r.boolean(); }},
  };
  for (const auto& [key, entry] : file.entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown key '" + key + "'", entry.line);
    it->second(Reader{entry, key});
  }
  for (const char* required : {"data.source", "model.recipe", "train.epochs"}) {
    if (!file.entries.count(required)) {
      throw ConfigError(std::string("missing required key '") + required + "'", 0);
    }
  }
  try {
    t.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), 0);
  }
  return c;
}

ConfigFile ExperimentConfig::resolved() const {
  ConfigFile f;
  auto put = [&](const std::string& k, ConfigValue v) { f.entries[k] = {std::move(v), 0}; };
  auto integer = [](std::size_t v) { return static_cast<std::int64_t>(v); };
  const TrainConfig& t = train;
  const QuantConfig& q = train.quant;
  put("experiment.name", name);
  put("experiment.output_dir", output_dir);
  put("experiment.seed", static_cast<std::int64_t>(t.seed));
  put("data.source", data.kind);
  put("data.path", data.path);
  put("data.train_limit", integer(data.train_limit));
  put("data.val_count", integer(data.val_count));
  put("data.blobs_n", integer(data.blobs_n));
  put("data.blobs_dims", integer(data.blobs_dims));
  put("data.blobs_classes", integer(data.blobs_classes));
  put("data.blobs_spread", data.blobs_spread);
  put("model.recipe", model.kind);
  std::string hidden;
  for (std::size_t h : model.hidden) hidden += (hidden.empty() ? "" : ",") + std::to_string(h);
  put("model.hidden", hidden);
  put("train.epochs", integer(t.epochs));
  put("train.batch_size", integer(t.batch_size));
  put("train.lr_weights", t.lr_weights);
  put("train.lr_theta", t.lr_theta);
  put("train.momentum", t.momentum);
  put("train.theta_momentum", t.theta_momentum);
  put("train.cosine", t.cosine);
  put("train.lambda_dz", t.lambda_dz);
  put("train.lambda_bit", t.lambda_bit);
  put("train.lambda_w", t.lambda_w);
  put("quant.mode", std::string(q.precision == Precision::full        ? "fp32"
                                : q.precision == Precision::fixed_bit ? "fixed"
                                                                      : "mixed"));
  put("quant.bits", static_cast<std::int64_t>(q.bits));
  put("quant.init_theta", q.init_theta);
  put("quant.quantile", q.quantile);
  put("quant.b_min", static_cast<std::int64_t>(q.b_min));
  put("quant.b_max", static_cast<std::int64_t>(q.b_max));
  put("quant.epsilon", q.epsilon);
  put("quant.detach_scale_from_d", q.detach_scale_from_d);
  return f;
}

}  // namespace codeq
