#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pimfit/errors.hpp"

namespace pimfit {

namespace detail {

// Minimal TOML-style config: `key = value` lines, # comments, values are
// quoted strings, numbers, booleans or flat arrays of those.
struct ConfigValue {
  enum class Kind { String, Number, Boolean, Array };
  Kind kind = Kind::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<ConfigValue> items;
};

class ConfigScanner {
public:
  explicit ConfigScanner(const std::string& text) : text_(text) {}

  std::map<std::string, ConfigValue> parse() {
    std::map<std::string, ConfigValue> out;
    while (skip_blank()) {
      const std::string key = read_key();
      skip_spaces();
      if (pos_ >= text_.size() || text_[pos_] != '=')
        fail("expected '=' after key '" + key + "'");
      ++pos_;
      skip_spaces();
      ConfigValue value = read_value();
      skip_spaces();
      if (pos_ < text_.size() && text_[pos_] == '#') skip_to_eol();
      if (pos_ < text_.size() && text_[pos_] != '\n')
        fail("trailing characters after value for '" + key + "'");
      if (out.count(key)) fail("duplicate key '" + key + "'");
      out.emplace(key, std::move(value));
    }
    return out;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config line " + std::to_string(line_) + ": " + msg);
  }

  void skip_spaces() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t'))
      ++pos_;
  }

  void skip_to_eol() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
  }

  // Advances to the next key; returns false at end of input.
  bool skip_blank() {
    for (;;) {
      skip_spaces();
      if (pos_ >= text_.size()) return false;
      if (text_[pos_] == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      if (text_[pos_] == '#') {
        skip_to_eol();
        continue;
      }
      return true;
    }
  }

  std::string read_key() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_' || text_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    return text_.substr(start, pos_ - start);
  }

  ConfigValue read_value() {
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '"') return read_string();
    if (c == '[') return read_array();
    return read_scalar();
  }

  ConfigValue read_string() {
    ++pos_;  // opening quote
    std::string s;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\n') fail("unterminated string");
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        ++pos_;
        switch (text_[pos_]) {
          case 'n': s.push_back('\n'); break;
          case 't': s.push_back('\t'); break;
          case '"': s.push_back('"'); break;
          case '\\': s.push_back('\\'); break;
          default: fail("unsupported escape");
        }
        ++pos_;
        continue;
      }
      s.push_back(text_[pos_++]);
    }
    if (pos_ >= text_.size()) fail("unterminated string");
    ++pos_;  // closing quote
    ConfigValue v;
    v.kind = ConfigValue::Kind::String;
    v.str = std::move(s);
    return v;
  }

  ConfigValue read_array() {
    ++pos_;  // '['
    ConfigValue v;
    v.kind = ConfigValue::Kind::Array;
    for (;;) {
      skip_array_space();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      v.items.push_back(read_value());
      skip_array_space();
      if (pos_ < text_.size() && text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      fail("expected ',' or ']' in array");
    }
  }

  void skip_array_space() {
    for (;;) {
      skip_spaces();
      if (pos_ < text_.size() && text_[pos_] == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      if (pos_ < text_.size() && text_[pos_] == '#') {
        skip_to_eol();
        continue;
      }
      return;
    }
  }

  ConfigValue read_scalar() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '\n' && text_[pos_] != ',' &&
           text_[pos_] != ']' && text_[pos_] != '#' && text_[pos_] != ' ' &&
           text_[pos_] != '\t') {
      ++pos_;
    }
    const std::string token = text_.substr(start, pos_ - start);
    ConfigValue v;
    if (token == "true" || token == "false") {
      v.kind = ConfigValue::Kind::Boolean;
      v.boolean = token == "true";
      return v;
    }
    try {
      std::size_t used = 0;
      v.num = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      fail("cannot parse value '" + token + "'");
    }
    v.kind = ConfigValue::Kind::Number;
    return v;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

class ConfigReader {
public:
  ConfigReader(const std::string& text, std::string what)
      : values_(ConfigScanner(text).parse()), what_(std::move(what)) {}

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = use(key);
    if (v.kind != ConfigValue::Kind::String)
      throw ConfigError(what_ + ": '" + key + "' must be a quoted string");
    return v.str;
  }

  double get_number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = use(key);
    if (v.kind != ConfigValue::Kind::Number)
      throw ConfigError(what_ + ": '" + key + "' must be a number");
    return v.num;
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = use(key);
    if (v.kind != ConfigValue::Kind::Boolean)
      throw ConfigError(what_ + ": '" + key + "' must be true or false");
    return v.boolean;
  }

  std::vector<std::string> get_string_array(const std::string& key) {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& v = use(key);
    if (v.kind != ConfigValue::Kind::Array)
      throw ConfigError(what_ + ": '" + key + "' must be an array");
    for (const auto& item : v.items) {
      if (item.kind != ConfigValue::Kind::String)
        throw ConfigError(what_ + ": '" + key + "' must hold quoted strings");
      out.push_back(item.str);
    }
    return out;
  }

  // Schema strictness: every key must have been consumed.
  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!used_.count(key))
        throw ConfigError(what_ + ": unknown key '" + key + "'");
    }
  }

private:
  const ConfigValue& use(const std::string& key) {
    used_.insert(key);
    return values_.at(key);
  }

  std::map<std::string, ConfigValue> values_;
  std::set<std::string> used_;
  std::string what_;
};

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::size_t checked_count(double v, const std::string& what) {
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
    throw ConfigError(what + " must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

// Everything the `fit` command needs; flag overrides are applied by the CLI
// after file parsing.
struct FitConfig {
  std::string input_path;
  std::string response;
  std::vector<std::string> terms;  // design mini-DSL strings
  std::string link = "probit";
  std::string method = "full";  // full | partition | subsample
  std::size_t partitions = 0;
  std::size_t partition_size = 0;  // alternative to `partitions`
  std::size_t k = 0;
  std::size_t b = 0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  std::string output_path;
  std::string output_format = "json";
  std::vector<std::string> predict;  // comma-separated contrast vectors
  bool emit_pieces = false;
  std::size_t full_cap = 50000;
  bool force_full = false;

  bool operator==(const FitConfig&) const = default;

  void validate() const {
    if (input_path.empty()) throw ConfigError("input path is required");
    if (response.empty()) throw ConfigError("response column is required");
    if (terms.empty()) throw ConfigError("at least one design term is required");
    if (link != "logit" && link != "probit")
      throw ConfigError("link must be logit or probit");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("alpha must lie strictly between 0 and 1");
    if (output_format != "json" && output_format != "csv")
      throw ConfigError("format must be json or csv");
    if (method == "full") {
      if (partitions || partition_size || k || b)
        throw ConfigError("method full takes no partition/subsample settings");
    } else if (method == "partition") {
      if ((partitions != 0) == (partition_size != 0))
        throw ConfigError(
            "method partition needs exactly one of `partitions` (S) or "
            "`partition_size`");
      if (partitions == 1 || partition_size == 1)
        throw ConfigError("partition settings must be at least 2");
      if (k || b) throw ConfigError("method partition takes no K/B settings");
    } else if (method == "subsample") {
      if (k < 2 || b < 2)
        throw ConfigError("method subsample needs K >= 2 and B >= 2");
      if (partitions || partition_size)
        throw ConfigError("method subsample takes no partition settings");
    } else {
      throw ConfigError("method must be full, partition or subsample");
    }
  }

  std::string serialize() const {
    std::ostringstream os;
    os << "input = " << detail::quote(input_path) << "\n";
    os << "response = " << detail::quote(response) << "\n";
    os << "terms = [";
    for (std::size_t i = 0; i < terms.size(); ++i)
      os << (i ? ", " : "") << detail::quote(terms[i]);
    os << "]\n";
    os << "link = " << detail::quote(link) << "\n";
    os << "method = " << detail::quote(method) << "\n";
    if (partitions) os << "partitions = " << partitions << "\n";
    if (partition_size) os << "partition_size = " << partition_size << "\n";
    if (k) os << "k = " << k << "\n";
    if (b) os << "b = " << b << "\n";
    os << "alpha = " << detail::format_number(alpha) << "\n";
    os << "seed = " << seed << "\n";
    os << "workers = " << workers << "\n";
    if (!output_path.empty()) os << "out = " << detail::quote(output_path) << "\n";
    os << "format = " << detail::quote(output_format) << "\n";
    if (!predict.empty()) {
      os << "predict = [";
      for (std::size_t i = 0; i < predict.size(); ++i)
        os << (i ? ", " : "") << detail::quote(predict[i]);
      os << "]\n";
    }
    os << "emit_pieces = " << (emit_pieces ? "true" : "false") << "\n";
    os << "full_cap = " << full_cap << "\n";
    os << "force_full = " << (force_full ? "true" : "false") << "\n";
    return os.str();
  }

  static FitConfig parse_text(const std::string& text) {
    detail::ConfigReader reader(text, "fit config");
    FitConfig c;
    c.input_path = reader.get_string("input", "");
    c.response = reader.get_string("response", "");
    c.terms = reader.get_string_array("terms");
    c.link = reader.get_string("link", c.link);
    c.method = reader.get_string("method", c.method);
    c.partitions = detail::checked_count(reader.get_number("partitions", 0), "partitions");
    c.partition_size =
        detail::checked_count(reader.get_number("partition_size", 0), "partition_size");
    c.k = detail::checked_count(reader.get_number("k", 0), "k");
    c.b = detail::checked_count(reader.get_number("b", 0), "b");
    c.alpha = reader.get_number("alpha", c.alpha);
    c.seed = static_cast<std::uint64_t>(reader.get_number("seed", 1));
    c.workers = static_cast<int>(reader.get_number("workers", 0));
    c.output_path = reader.get_string("out", "");
    c.output_format = reader.get_string("format", c.output_format);
    c.predict = reader.get_string_array("predict");
    c.emit_pieces = reader.get_bool("emit_pieces", false);
    c.full_cap = detail::checked_count(reader.get_number("full_cap", 50000), "full_cap");
    c.force_full = reader.get_bool("force_full", false);
    reader.finish();
    return c;
  }

  static FitConfig parse_file(const std::string& path) {
    return parse_text(detail::read_file(path));
  }
};

// Grid file for the `simulate` command.
struct SimulateConfig {
  std::string model = "model1";
  std::size_t n = 0;
  std::size_t runs = 0;
  std::vector<std::string> methods;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int workers = 0;
  std::string out_prefix = "simulation";

  bool operator==(const SimulateConfig&) const = default;

  void validate() const {
    if (n < 4) throw ConfigError("simulate: n must be at least 4");
    if (runs < 1) throw ConfigError("simulate: runs must be at least 1");
    if (methods.empty()) throw ConfigError("simulate: methods must be non-empty");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("alpha must lie strictly between 0 and 1");
  }

  std::string serialize() const {
    std::ostringstream os;
    os << "model = " << detail::quote(model) << "\n";
    os << "n = " << n << "\n";
    os << "runs = " << runs << "\n";
    os << "methods = [";
    for (std::size_t i = 0; i < methods.size(); ++i)
      os << (i ? ", " : "") << detail::quote(methods[i]);
    os << "]\n";
    os << "alpha = " << detail::format_number(alpha) << "\n";
    os << "seed = " << seed << "\n";
    os << "workers = " << workers << "\n";
    os << "out_prefix = " << detail::quote(out_prefix) << "\n";
    return os.str();
  }

  static SimulateConfig parse_text(const std::string& text) {
    detail::ConfigReader reader(text, "simulate config");
    SimulateConfig c;
    c.model = reader.get_string("model", c.model);
    c.n = detail::checked_count(reader.get_number("n", 0), "n");
    c.runs = detail::checked_count(reader.get_number("runs", 0), "runs");
    c.methods = reader.get_string_array("methods");
    c.alpha = reader.get_number("alpha", c.alpha);
    c.seed = static_cast<std::uint64_t>(reader.get_number("seed", 1));
    c.workers = static_cast<int>(reader.get_number("workers", 0));
    c.out_prefix = reader.get_string("out_prefix", c.out_prefix);
    reader.finish();
    c.validate();
    return c;
  }

  static SimulateConfig parse_file(const std::string& path) {
    return parse_text(detail::read_file(path));
  }
};

}  // namespace pimfit
