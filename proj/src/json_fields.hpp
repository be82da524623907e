#pragma once

#include <cstdint>
#include <set>
#include <string>

#include <json.hpp>

#include "laasim/errors.hpp"

namespace laasim::detail {

using nlohmann::json;

// Strict object reader that reports the JSON path of every problem.
template <class E>
class BasicFields {
 public:
  BasicFields(const json& obj, std::string path, const std::string& source) : obj_(obj), path_(std::move(path)), source_(source) {
    if (!obj_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw E(source_ + ": " + at(key) + ": " + what);
  }

  std::string at(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& raw(const std::string& key) const {
    seen_.insert(key);
    if (!obj_.contains(key)) fail(key, "missing required field");
    return obj_.at(key);
  }

  double number(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) fail(key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  const json& array(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }

  void ignore(const std::string& key) const { seen_.insert(key); }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (seen_.count(it.key()) == 0) fail(it.key(), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::string source_;
  mutable std::set<std::string> seen_;
};

using Fields = BasicFields<CaseError>;

}  // namespace laasim::detail
