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

// Little-endian fixed-width primitives for the index and checkpoint files.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tabver/errors.h"

namespace tabver::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void write_f64s(std::ostream& out, std::span<const double> values) {
  write_u64(out, values.size());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

inline void read_raw(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw ParseError("unexpected end of binary file", 0);
  }
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v;
  read_raw(in, &v, sizeof v);
  return v;
}
inline std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v;
  read_raw(in, &v, sizeof v);
  return v;
}
inline double read_f64(std::istream& in) {
  double v;
  read_raw(in, &v, sizeof v);
  return v;
}
inline std::string read_string(std::istream& in, std::size_t max = 1u << 30) {
  const std::uint64_t n = read_u64(in);
  if (n > max) throw ParseError("string length out of range", 0);
  std::string s(n, '\0');
  read_raw(in, s.data(), n);
  return s;
}
inline std::vector<double> read_f64s(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  if (n > (1ull << 34)) throw ParseError("array length out of range", 0);
  std::vector<double> v(n);
  read_raw(in, v.data(), n * sizeof(double));
  return v;
}

}  // namespace tabver::io
