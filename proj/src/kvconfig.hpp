// Copyright 2026 The vsrlm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vsrlm {

// Flat "key = value" configuration. Lines starting with '#' are comments.
// Keys are dotted paths ("train.steps"). Values are stored as strings and
// converted on access; every getter takes a default so a config file only
// needs to name what it overrides.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig load_file(const std::string& path);
  static KvConfig parse(const std::string& text, const std::string& origin = "<string>");

  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, int64_t value);
  void set_real(const std::string& key, double value);

  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& def) const;
  int64_t get_int(const std::string& key, int64_t def) const;
  double get_real(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;

  std::optional<std::string> maybe(const std::string& key) const;

  // Later entries win; used for CLI --set overrides on top of a file.
  void merge_from(const KvConfig& other);

  // Canonical serialization: sorted keys, "key = value\n" lines.
  std::string serialize() const;
  void save_file(const std::string& path) const;

  // FNV-1a over the canonical serialization, hex encoded. Recorded in
  // reports so results can be traced back to an exact configuration.
  std::string hash() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

uint64_t fnv1a64(std::string_view data);

}  // namespace vsrlm
