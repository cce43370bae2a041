// Copyright 2026 The qem Authors
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

#ifndef QEM_RNG_HPP_
#define QEM_RNG_HPP_

#include <complex>
#include <cstdint>

namespace qem {

// Deterministic counter-based generator (splitmix64). Every random draw in
// the library flows through this class so that a master seed plus the
// documented splitting rule fully determines all outputs, independent of
// thread scheduling or evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Child-seed derivation rule: seed_i = split(master, i). Children with
  // distinct salts are statistically independent streams.
  static std::uint64_t split(std::uint64_t master, std::uint64_t salt);

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in {0, ..., n-1}, unbiased (rejection sampling).
  int uniform_int(int n);

  // Standard normal via Box-Muller (pairs cached).
  double normal();

  // Complex Gaussian with E|z|^2 = 1.
  std::complex<double> normal_complex();

 private:
  std::uint64_t state_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace qem

#endif  // QEM_RNG_HPP_
