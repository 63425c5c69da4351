// Copyright 2026 The levexp Authors
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

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// A stream is identified by a 64-bit key (the shot seed) and a 32-bit
// substream id; the remaining counter words index 128-bit blocks. Any
// variate can be regenerated from (key, substream, block) alone, so shots
// are reproducible independent of thread count and execution order.

#ifndef LEVEXP_RNG_HPP
#define LEVEXP_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace levexp {

using Philox4x32Block = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Ten-round Philox 4x32 bijection.
constexpr Philox4x32Block philox4x32_10(Philox4x32Block ctr, Philox4x32Key key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// Sequential view over one Philox stream producing uniforms and standard
/// normals (Box-Muller on 53-bit uniforms).
class PhiloxStream {
  public:
    PhiloxStream(std::uint64_t seed, std::uint32_t substream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          substream_(substream) {}

    std::uint64_t next_u64() {
        if (lane_ == 2) refill();
        const std::uint64_t v = (static_cast<std::uint64_t>(block_[2 * lane_]) << 32) |
                                block_[2 * lane_ + 1];
        ++lane_;
        return v;
    }

    /// Uniform in (0, 1).
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t blocks_consumed() const { return counter_; }

  private:
    void refill() {
        block_ = philox4x32_10({static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32), substream_, 0u},
                               key_);
        ++counter_;
        lane_ = 0;
    }

    Philox4x32Key key_;
    std::uint32_t substream_;
    std::uint64_t counter_ = 0;
    Philox4x32Block block_{};
    int lane_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace levexp

#endif  // LEVEXP_RNG_HPP
