//
// Copyright 2026 The mistlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "mistlab/snapshot.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mistlab/error.h"

namespace mistlab {
namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian targets are not supported");

constexpr std::array<char, 4> kMagic = {'M', 'I', 'S', 'T'};
constexpr std::uint32_t kMaxLayers = 64;

template <typename T>
void PutLe(std::ostream& out, T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T GetLe(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw DataError(std::string("snapshot truncated while reading ") + what);
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  return std::bit_cast<T>(bytes);
}

}  // namespace

void SaveSnapshot(const ModelParams& params, std::ostream& out, SnapshotWidth width) {
  out.write(kMagic.data(), kMagic.size());
  PutLe<std::uint16_t>(out, kSnapshotVersion);
  PutLe<std::uint8_t>(out, static_cast<std::uint8_t>(width));
  PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(params.num_layers()));
  for (int d : params.layer_dims()) PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : params.values()) {
    if (width == SnapshotWidth::kF32) {
      PutLe<float>(out, static_cast<float>(v));
    } else {
      PutLe<double>(out, v);
    }
  }
  if (!out) throw DataError("failed writing snapshot");
}

ModelParams LoadSnapshot(std::istream& in) {
  std::array<char, 4> magic;
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a snapshot file (bad magic)");
  }
  const auto version = GetLe<std::uint16_t>(in, "version");
  if (version != kSnapshotVersion) {
    throw DataError("unsupported snapshot version " + std::to_string(version));
  }
  const auto width = GetLe<std::uint8_t>(in, "real width");
  if (width != 4 && width != 8) {
    throw DataError("snapshot real width must be 4 or 8, got " + std::to_string(width));
  }
  const auto layers = GetLe<std::uint32_t>(in, "layer count");
  if (layers == 0 || layers > kMaxLayers) {
    throw DataError("snapshot layer count " + std::to_string(layers) + " out of range");
  }
  std::vector<int> dims(layers + 1);
  for (auto& d : dims) {
    const auto v = GetLe<std::uint32_t>(in, "layer dims");
    if (v == 0 || v > (1u << 24)) throw DataError("snapshot layer dim out of range");
    d = static_cast<int>(v);
  }
  std::vector<double> values(ModelParams::CountFor(dims));
  for (auto& v : values) {
    v = width == 4 ? static_cast<double>(GetLe<float>(in, "parameters"))
                   : GetLe<double>(in, "parameters");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("snapshot has trailing bytes after the parameter payload");
  }
  return ModelParams(std::move(dims), std::move(values));
}

void SaveSnapshotFile(const ModelParams& params, const std::filesystem::path& path,
                      SnapshotWidth width) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  SaveSnapshot(params, out, width);
}

ModelParams LoadSnapshotFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open snapshot " + path.string());
  try {
    return LoadSnapshot(in);
  } catch (const Error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace mistlab
