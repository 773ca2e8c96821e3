#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace ter {

// Minimal fixed-size bitset. Used for ancestor masks (entity x type) and
// entity masks during type-restricted retrieval.
class DynamicBitset {
public:
    DynamicBitset() = default;
    explicit DynamicBitset(std::size_t size)
        : size_(size), blocks_((size + 63) / 64, 0) {}

    std::size_t size() const { return size_; }

    void set(std::size_t i) { blocks_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
    void reset(std::size_t i) { blocks_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
    bool test(std::size_t i) const { return (blocks_[i >> 6] >> (i & 63)) & 1; }

    DynamicBitset& operator|=(const DynamicBitset& other) {
        for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] |= other.blocks_[b];
        return *this;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (std::uint64_t b : blocks_) n += static_cast<std::size_t>(std::popcount(b));
        return n;
    }

    // Calls fn(i) for every set bit, ascending.
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            std::uint64_t bits = blocks_[b];
            while (bits) {
                unsigned tz = static_cast<unsigned>(std::countr_zero(bits));
                fn(b * 64 + tz);
                bits &= bits - 1;
            }
        }
    }

    bool operator==(const DynamicBitset& other) const = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> blocks_;
};

}  // namespace ter
