#pragma once

#include <cstdint>

namespace modmon {

// Counter-based random stream (Philox 2x64, 10 rounds). The key is the user
// seed and the high counter word is the stream id, so distinct stream ids
// walk disjoint counter blocks and are independent by construction. Identical
// (seed, stream_id) pairs replay the exact same draw sequence.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return key_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64() {
        if (have_buffered_) {
            have_buffered_ = false;
            return buffered_;
        }
        std::uint64_t out0, out1;
        block(block_index_++, out0, out1);
        buffered_ = out1;
        have_buffered_ = true;
        return out0;
    }

    // Uniform draw strictly inside (0,1); safe for log() and inverse CDFs.
    double next_double() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection from the top to avoid modulo bias.
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

private:
    static void mulhilo(std::uint64_t a, std::uint64_t b,
                        std::uint64_t& hi, std::uint64_t& lo) {
        const unsigned __int128 p =
            static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
        hi = static_cast<std::uint64_t>(p >> 64);
        lo = static_cast<std::uint64_t>(p);
    }

    void block(std::uint64_t index, std::uint64_t& out0, std::uint64_t& out1) const {
        constexpr std::uint64_t kMul = 0xD2B74407B1CE6E93ULL;
        constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;
        std::uint64_t c0 = index;
        std::uint64_t c1 = stream_;
        std::uint64_t k = key_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t hi, lo;
            mulhilo(kMul, c0, hi, lo);
            c0 = hi ^ k ^ c1;
            c1 = lo;
            k += kWeyl;
        }
        out0 = c0;
        out1 = c1;
    }

    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    std::uint64_t buffered_ = 0;
    bool have_buffered_ = false;
};

}  // namespace modmon
