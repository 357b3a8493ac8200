#pragma once

// Counter-based randomness: Philox4x64-10 addressed by
// (seed, stream_id, path, channel). Every consumer owns a disjoint counter
// subspace, so parallel workers produce identical results under any
// scheduling, and any draw can be regenerated without replaying a sequence.

#include <array>
#include <cstdint>

#include "itbm/special.hpp"

namespace itbm {

struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

// Channel tags: keep primary draws and auxiliary draws (e.g. a mixture sign)
// in separate counter planes so consuming one never shifts the other.
inline constexpr std::uint64_t kChannelNormals = 0;
inline constexpr std::uint64_t kChannelAux = 1;

struct Philox4x64 {
    using u64 = std::uint64_t;
    static constexpr u64 M0 = 0xD2E7470EE14C6C93ULL, M1 = 0xCA5A826395121157ULL;
    static constexpr u64 W0 = 0x9E3779B97F4A7C15ULL, W1 = 0xBB67AE8584CAA73BULL;

    static std::array<u64, 4> block(u64 c0, u64 c1, u64 c2, u64 c3, u64 k0, u64 k1) {
        for (int i = 0; i < 10; ++i) {
            const __uint128_t p0 = static_cast<__uint128_t>(M0) * c0;
            const __uint128_t p1 = static_cast<__uint128_t>(M1) * c2;
            const u64 h0 = static_cast<u64>(p0 >> 64), l0 = static_cast<u64>(p0);
            const u64 h1 = static_cast<u64>(p1 >> 64), l1 = static_cast<u64>(p1);
            const u64 n0 = h1 ^ c1 ^ k0, n1 = l1, n2 = h0 ^ c3 ^ k1, n3 = l0;
            c0 = n0;
            c1 = n1;
            c2 = n2;
            c3 = n3;
            k0 += W0;
            k1 += W1;
        }
        return {c0, c1, c2, c3};
    }
};

// One (path, channel) lane of a stream; draws are buffered four at a time.
class NormalStream {
  public:
    NormalStream(RngStream s, std::uint64_t path, std::uint64_t channel)
        : key0_(s.seed), key1_(s.stream_id), path_(path), channel_(channel) {}

    std::uint64_t next_u64() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    // Uniform on (0,1), strictly excluding the endpoints: 53 random bits
    // centered in the cell.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_normal() { return inv_norm_cdf(next_uniform()); }

  private:
    void refill() {
        buf_ = Philox4x64::block(block_++, path_, channel_, 0, key0_, key1_);
        pos_ = 0;
    }

    std::uint64_t key0_, key1_, path_, channel_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 4> buf_{};
    int pos_ = 4;
};

}  // namespace itbm
