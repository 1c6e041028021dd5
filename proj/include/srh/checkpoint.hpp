// Copyright 2026 the srhnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "srh/common.hpp"
#include "srh/tensor.hpp"

namespace srh {

// Checkpoint container: magic "SRHC", version u32, entry count u32; each
// entry is name length (u32), name bytes, rank (u32), dims (u64 each) and
// the payload as little-endian 32-bit reals. All integers little-endian.
struct CheckpointEntry {
  Shape dims;
  std::vector<float> values;
};

using Checkpoint = std::map<std::string, CheckpointEntry>;

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  check_io(is.good(), "checkpoint: truncated while reading ", what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t read_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  check_io(is.good(), "checkpoint: truncated while reading ", what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void write_f32_le(std::ostream& os, const float* data, size_t n) {
  static_assert(sizeof(float) == 4);
  for (size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &data[i], 4);
    write_u32(os, bits);
  }
}

inline void read_f32_le(std::istream& is, float* data, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    std::uint32_t bits = read_u32(is, "tensor payload");
    std::memcpy(&data[i], &bits, 4);
  }
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  check_io(os.good(), "checkpoint: cannot open for writing: ", path);
  os.write("SRHC", 4);
  detail::write_u32(os, 1u);  // format version
  detail::write_u32(os, static_cast<std::uint32_t>(ckpt.size()));
  for (const auto& [name, entry] : ckpt) {
    detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(entry.dims.size()));
    for (index_t d : entry.dims) detail::write_u64(os, static_cast<std::uint64_t>(d));
    detail::write_f32_le(os, entry.values.data(), entry.values.size());
  }
  check_io(os.good(), "checkpoint: write failed: ", path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check_io(is.good(), "checkpoint: cannot open: ", path);
  char magic[4];
  is.read(magic, 4);
  check_io(is.good() && std::memcmp(magic, "SRHC", 4) == 0,
           "checkpoint: bad magic in ", path, " (expected SRHC)");
  std::uint32_t version = detail::read_u32(is, "version");
  check_io(version == 1, "checkpoint: unsupported format version ", version);
  std::uint32_t count = detail::read_u32(is, "entry count");
  Checkpoint ckpt;
  for (std::uint32_t e = 0; e < count; ++e) {
    std::uint32_t name_len = detail::read_u32(is, "name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    check_io(is.good(), "checkpoint: truncated name");
    std::uint32_t rank = detail::read_u32(is, "rank");
    CheckpointEntry entry;
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      std::uint64_t dim = detail::read_u64(is, "dims");
      entry.dims.push_back(static_cast<index_t>(dim));
      numel *= dim;
    }
    entry.values.resize(numel);
    detail::read_f32_le(is, entry.values.data(), numel);
    ckpt.emplace(std::move(name), std::move(entry));
  }
  return ckpt;
}

template <typename T>
CheckpointEntry to_entry(const Tensor<T>& t) {
  CheckpointEntry e;
  e.dims = t.shape();
  e.values.resize(static_cast<size_t>(t.numel()));
  for (index_t i = 0; i < t.numel(); ++i) e.values[i] = static_cast<float>(t.data()[i]);
  return e;
}

template <typename T>
void from_entry(const CheckpointEntry& e, Tensor<T>& t, const std::string& name) {
  check_io(e.dims == t.shape(), "checkpoint: shape mismatch for '", name, "': file has ",
           shape_str(e.dims), ", model expects ", shape_str(t.shape()));
  for (size_t i = 0; i < e.values.size(); ++i) t.data()[i] = static_cast<T>(e.values[i]);
}

}  // namespace srh
