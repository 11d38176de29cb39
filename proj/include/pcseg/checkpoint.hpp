/* Copyright 2026 The pcseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

// Parameter file layout (all integers little-endian):
//   magic   "PCSGCKPT" (8 bytes)
//   version u32 (= 1)
//   count   u32
//   count x { name_len u32, name bytes, rank u32, dims u64[rank],
//             data f64[prod(dims)] as IEEE-754 bit patterns }

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "pcseg/error.hpp"
#include "pcseg/tensor.hpp"

namespace pcseg {

struct NamedTensor {
  std::string name;
  Tensor value;
};

inline constexpr std::array<char, 8> kCheckpointMagic = {'P', 'C', 'S', 'G',
                                                        'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& os, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits;
  std::memcpy(&bits, &v, sizeof(T));
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  PCSG_CHECK(is.good(), "checkpoint: unexpected end of file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace detail

inline void save_tensors(const std::string& path,
                         const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  PCSG_CHECK(os.good(), "checkpoint: cannot open '", path, "' for writing");
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  detail::write_le<std::uint32_t>(os, kCheckpointVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, value] : tensors) {
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(value.rank()));
    for (std::size_t d : value.shape()) detail::write_le<std::uint64_t>(os, d);
    for (double v : value.values()) detail::write_le<double>(os, v);
  }
  PCSG_CHECK(os.good(), "checkpoint: write to '", path, "' failed");
}

inline std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  PCSG_CHECK(is.good(), "checkpoint: cannot open '", path, "'");
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  PCSG_CHECK(is.good() && magic == kCheckpointMagic, "checkpoint: '", path,
             "' is not a parameter file");
  const auto version = detail::read_le<std::uint32_t>(is);
  PCSG_CHECK(version == kCheckpointVersion, "checkpoint: unsupported version ", version);
  const auto count = detail::read_le<std::uint32_t>(is);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = detail::read_le<std::uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto rank = detail::read_le<std::uint32_t>(is);
    Shape shape(rank);
    for (auto& d : shape) d = detail::read_le<std::uint64_t>(is);
    std::vector<double> data(shape_size(shape));
    for (double& v : data) v = detail::read_le<double>(is);
    out.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  return out;
}

inline const Tensor& find_tensor(const std::vector<NamedTensor>& tensors,
                                 const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  detail::fail("checkpoint: missing tensor '", name, "'");
}

}  // namespace pcseg
