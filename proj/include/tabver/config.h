// Copyright 2026 the tabver authors
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

//! Flat key-value run configuration.
//!
//! Values resolve in increasing precedence: built-in defaults, a config
//! file (`key = value` lines, `#` comments), environment variables named
//! TABVER_<KEY> with the key upper-cased, and command-line flags.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabver/detector.h"
#include "tabver/model.h"
#include "tabver/retriever.h"
#include "tabver/synthetic.h"
#include "tabver/trainer.h"

namespace tabver {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
  /// Keys that do not change results (artifact locations, threads, force)
  /// stay out of the hash.
  bool hashed = true;
};

std::span<const ConfigKey> config_keys();

inline constexpr std::string_view kEnvPrefix = "TABVER_";

class RunConfig {
 public:
  RunConfig();

  /// Throws InputError for an unreadable file and ConfigError for an
  /// unknown key or a malformed line.
  void load_file(const std::filesystem::path& path);
  /// `lookup` defaults to std::getenv.
  void apply_env(const std::function<const char*(const char*)>& lookup = {});
  /// Throws ConfigError for an unknown key.
  void set(std::string_view key, std::string value);

  const std::string& get(std::string_view key) const;
  bool is_set(std::string_view key) const { return !get(key).empty(); }
  std::optional<std::filesystem::path> path(std::string_view key) const;
  /// As `path`, but throws InputError when unset or missing on disk.
  std::filesystem::path existing_path(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  std::size_t get_size(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<int> get_int_list(std::string_view key) const;

  IndexConfig index_config() const;
  ModelConfig model_config() const;
  TrainConfig train_config() const;
  SyntheticConfig synthetic_config() const;
  std::vector<std::size_t> hits_ks() const;

  /// Builds every typed view; throws ConfigError on the first failure.
  void validate() const;

  /// 16 hex digits over the canonical form of the hashed keys.
  std::string hash() const;
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

/// One line per key with its default and help text, for --help.
std::string describe_config_keys();

}  // namespace tabver
