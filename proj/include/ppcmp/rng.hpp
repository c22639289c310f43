//
// Copyright 2026 The PPCMP Authors
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
#ifndef PPCMP_RNG_HPP_
#define PPCMP_RNG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>

namespace ppcmp {

namespace internal {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace internal

// A labelled pseudo-random stream. Two streams built from the same
// (seed, label) pair produce the same draws. Streams are move-only so a
// sequence is never silently duplicated; use derive() to fork a child.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string label)
      : seed_(seed),
        label_(std::move(label)),
        engine_(internal::splitmix64(seed_ ^ internal::fnv1a64(label_))) {}

  RngStream(const RngStream&) = delete;
  RngStream& operator=(const RngStream&) = delete;
  RngStream(RngStream&&) noexcept = default;
  RngStream& operator=(RngStream&&) noexcept = default;

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  // Child streams depend only on (seed, label, child), never on how many
  // draws the parent has made.
  RngStream derive(std::string_view child) const {
    return RngStream(seed_, label_ + "/" + std::string(child));
  }
  RngStream derive(std::string_view child, std::uint64_t index) const {
    return RngStream(seed_,
                     label_ + "/" + std::string(child) + "#" +
                         std::to_string(index));
  }

  // Uniform on [0, 1).
  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  // Uniform on {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double normal(double mean, double stddev) {
    if (stddev == 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // Zero-mean Laplace with the given scale, by inversion.
  double laplace(double scale) {
    if (scale == 0.0) return 0.0;
    double u = uniform() - 0.5;
    double mag = -std::log1p(-2.0 * std::abs(u));
    return u < 0 ? -scale * mag : scale * mag;
  }

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    std::shuffle(first, last, engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

}  // namespace ppcmp

#endif  // PPCMP_RNG_HPP_
