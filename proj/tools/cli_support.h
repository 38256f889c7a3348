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

// Output plumbing for the command-line tool: an exclusive lock on the
// output directory, atomic file replacement and read-back validation.

#pragma once

#include <exception>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tabver::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;      // missing input, bad config or data
inline constexpr int kExitInvariant = 3;  // internal consistency failure

/// Maps an exception thrown by a command to its exit code.
int exit_code_for(const std::exception& e);

/// Holds `<dir>/.tabver.lock` for its lifetime. The directory is created
/// when missing. Throws InputError when another run holds the lock; a lock
/// left behind by a crashed run has to be removed by hand.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);
/// For binary artifacts with their own writer: `save` receives the
/// temporary path.
void save_atomic(const std::filesystem::path& path,
                 const std::function<void(const std::filesystem::path&)>& save);

/// Writes report files stamped with the run's config hash and checks each
/// one by reading it back. Validation failures raise InvariantError.
class OutputWriter {
 public:
  OutputWriter(std::filesystem::path dir, std::string config_hash);

  std::filesystem::path path(std::string_view name) const { return dir_ / name; }
  const std::string& config_hash() const { return hash_; }

  /// `value` must be an object; a config_hash member is added.
  void json(std::string_view name, nlohmann::json value);
  /// Each record must be an object; a config_hash member is added.
  void jsonl(std::string_view name, std::vector<nlohmann::json> records);
  /// Prepends a "# config_hash: <hash>" line.
  void csv(std::string_view name, std::string_view body);

  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::string hash_;
  std::vector<std::filesystem::path> written_;
};

std::string read_file(const std::filesystem::path& path);

}  // namespace tabver::cli
