#pragma once

#include <array>
#include <cstdint>
#include <cstddef>

namespace coaleps {

// ── Counter-based RNG ───────────────────────────────────────────────────────
//
// Philox4x32-10. One generator instance = one logical stream, identified by
// (seed, stream). The 128-bit counter block is laid out as
//   (block_lo, block_hi, stream_lo, stream_hi)
// with key = (seed_lo, seed_hi), so draws are a pure function of
// (seed, stream, position): replicates on disjoint streams are independent
// and results do not depend on worker count or scheduling.

/// Role tag baked into the stream id so that different kinds of draws made
/// for the same replicate never share a stream.
enum class StreamPurpose : std::uint32_t {
    EnvForward  = 0,  // forward environment paths
    EnvBackward = 1,  // backward (into-the-past) environment sampling
    Lineages    = 2,  // lineage island/parent draws
    Placement   = 3,  // initial sample placement
    Generic     = 4,
};

constexpr std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t index) {
    return (static_cast<std::uint64_t>(purpose) << 48) | (index & 0xFFFFFFFFFFFFull);
}

class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_{stream} {}

    /// Raw 4x32 output block at a given counter value (stateless).
    std::array<std::uint32_t, 4> block_at(std::uint64_t counter) const {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(counter),
            static_cast<std::uint32_t>(counter >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32),
        };
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        }
        return ctr;
    }

    std::uint64_t next_u64() {
        if (word_pos_ >= 4) {
            buf_ = block_at(counter_++);
            word_pos_ = 0;
        }
        const std::uint64_t lo = buf_[word_pos_];
        const std::uint64_t hi = buf_[word_pos_ + 1];
        word_pos_ += 2;
        return lo | (hi << 32);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Unbiased uniform integer in {0, ..., n-1} (rejection sampling).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t reject = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= reject) return x % n;
        }
    }

    /// Index draw from a probability row of length n (cumulative inversion).
    /// Rows are expected to sum to 1 up to rounding; the last index absorbs
    /// the leftover mass.
    std::size_t discrete(const double* weights, std::size_t n) {
        double u = next_double();
        for (std::size_t k = 0; k + 1 < n; ++k) {
            u -= weights[k];
            if (u < 0.0) return k;
        }
        return n - 1;
    }

    /// Jump to an absolute block position (128 bits of output per block).
    void seek(std::uint64_t block) {
        counter_ = block;
        word_pos_ = 4;
    }

    std::uint64_t stream() const { return stream_; }

private:
    std::uint32_t key_[2];
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int word_pos_ = 4;
};

}  // namespace coaleps
