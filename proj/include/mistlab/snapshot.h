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

#ifndef MISTLAB_SNAPSHOT_H_
#define MISTLAB_SNAPSHOT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mistlab/params.h"

namespace mistlab {

enum class SnapshotWidth : std::uint8_t { kF32 = 4, kF64 = 8 };

// Binary model file, all integers and reals little-endian:
//   "MIST" | u16 version | u8 real width (4 or 8) | u32 layer count |
//   u32 dims[layer count + 1] | reals[parameter count]
// kF32 downcasts the parameters; kF64 round-trips them exactly.
inline constexpr std::uint16_t kSnapshotVersion = 1;

void SaveSnapshot(const ModelParams& params, std::ostream& out,
                  SnapshotWidth width = SnapshotWidth::kF32);
ModelParams LoadSnapshot(std::istream& in);

void SaveSnapshotFile(const ModelParams& params, const std::filesystem::path& path,
                      SnapshotWidth width = SnapshotWidth::kF32);
ModelParams LoadSnapshotFile(const std::filesystem::path& path);

}  // namespace mistlab

#endif  // MISTLAB_SNAPSHOT_H_
