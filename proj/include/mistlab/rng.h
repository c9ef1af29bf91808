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

#ifndef MISTLAB_RNG_H_
#define MISTLAB_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace mistlab {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
inline std::uint64_t MixBits(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a root seed and a tuple of tags,
// e.g. DeriveSeed(seed, {epoch, submodel, kPhase1}).
inline std::uint64_t DeriveSeed(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = MixBits(seed);
  for (std::uint64_t t : tags) h = MixBits(h ^ MixBits(t + 0x632be59bd9b4e019ULL));
  return h;
}

// FNV-1a; used to turn names (attack names etc.) into stream tags.
constexpr std::uint64_t NameTag(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace mistlab

#endif  // MISTLAB_RNG_H_
