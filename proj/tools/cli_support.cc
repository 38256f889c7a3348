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

#include "cli_support.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "tabver/errors.h"

namespace tabver::cli {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvariantError*>(&e) != nullptr) return kExitInvariant;
  if (dynamic_cast<const InputError*>(&e) != nullptr ||
      dynamic_cast<const ConfigError*>(&e) != nullptr ||
      dynamic_cast<const ParseError*>(&e) != nullptr ||
      dynamic_cast<const ValidationError*>(&e) != nullptr) {
    return kExitUsage;
  }
  return kExitFailure;
}

OutputLock::OutputLock(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw InputError("cannot create output directory " + dir.string() + ": " +
                     ec.message());
  }
  path_ = dir / ".tabver.lock";
  fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd_ < 0) {
    if (errno == EEXIST) {
      throw InputError("output directory " + dir.string() +
                       " is locked by another run (remove " + path_.string() +
                       " if that run is gone)");
    }
    throw InputError("cannot create lock " + path_.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  if (::write(fd_, pid.data(), pid.size()) < 0) {
    // The pid is informational; the lock itself is the file's existence.
  }
}

OutputLock::~OutputLock() {
  if (fd_ >= 0) {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

namespace {

fs::path temp_sibling(const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  return tmp;
}

void commit(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot write " + path.string());
  }
}

}  // namespace

void write_atomic(const fs::path& path, std::string_view content) {
  const fs::path tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw InputError("short write to " + tmp.string());
  }
  commit(tmp, path);
}

void save_atomic(const fs::path& path, const std::function<void(const fs::path&)>& save) {
  const fs::path tmp = temp_sibling(path);
  try {
    save(tmp);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  commit(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

OutputWriter::OutputWriter(fs::path dir, std::string config_hash)
    : dir_(std::move(dir)), hash_(std::move(config_hash)) {}

void OutputWriter::json(std::string_view name, nlohmann::json value) {
  if (!value.is_object()) throw InvariantError("report " + std::string(name) + " is not an object");
  value["config_hash"] = hash_;
  const fs::path p = path(name);
  write_atomic(p, value.dump(2) + "\n");
  nlohmann::json back;
  try {
    back = nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw InvariantError(p.string() + " does not read back as JSON: " + e.what());
  }
  if (back != value) throw InvariantError(p.string() + " changed on read-back");
  written_.push_back(p);
}

void OutputWriter::jsonl(std::string_view name, std::vector<nlohmann::json> records) {
  std::string body;
  for (nlohmann::json& r : records) {
    if (!r.is_object()) throw InvariantError("record in " + std::string(name) + " is not an object");
    r["config_hash"] = hash_;
    body += r.dump();
    body += '\n';
  }
  const fs::path p = path(name);
  write_atomic(p, body);

  std::istringstream in(read_file(p));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    try {
      if (n >= records.size() || nlohmann::json::parse(line) != records[n]) {
        throw InvariantError(p.string() + " changed on read-back");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvariantError(p.string() + " line " + std::to_string(n + 1) +
                           " is not JSON: " + e.what());
    }
    ++n;
  }
  if (n != records.size()) throw InvariantError(p.string() + " lost records on write");
  written_.push_back(p);
}

void OutputWriter::csv(std::string_view name, std::string_view body) {
  const std::string header = "# config_hash: " + hash_ + "\n";
  std::string content = header;
  content += body;
  const fs::path p = path(name);
  write_atomic(p, content);
  if (read_file(p) != content) throw InvariantError(p.string() + " changed on read-back");
  written_.push_back(p);
}

}  // namespace tabver::cli
