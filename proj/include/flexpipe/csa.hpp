#pragma once

// Two's-complement datapath arithmetic at a configurable width, and the 3:2
// carry-save stage used for the collapsed vertical reduction.

#include <cstdint>
#include <span>
#include <string>

#include "flexpipe/error.hpp"

namespace flexpipe {

/// Arithmetic modulo 2^bits. Values travel as raw masked bit patterns.
class WordArith {
public:
    explicit constexpr WordArith(int bits) : bits_(bits), mask_(bits >= 64 ? ~0ULL : (1ULL << bits) - 1) {}

    constexpr int bits() const noexcept { return bits_; }
    constexpr std::uint64_t mask() const noexcept { return mask_; }

    constexpr std::uint64_t wrap(std::uint64_t v) const noexcept { return v & mask_; }
    constexpr std::uint64_t from_signed(std::int64_t v) const noexcept { return wrap(static_cast<std::uint64_t>(v)); }

    constexpr std::int64_t to_signed(std::uint64_t v) const noexcept {
        v = wrap(v);
        if (bits_ < 64 && (v >> (bits_ - 1)) != 0) v |= ~mask_;
        return static_cast<std::int64_t>(v);
    }

    constexpr std::uint64_t add(std::uint64_t a, std::uint64_t b) const noexcept { return wrap(a + b); }
    constexpr std::uint64_t mul(std::uint64_t a, std::uint64_t b) const noexcept { return wrap(a * b); }

    /// Signed product of two narrow operands, wrapped to this width.
    constexpr std::uint64_t mul_signed(std::int64_t a, std::int64_t b) const noexcept {
        return wrap(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
    }

private:
    int bits_;
    std::uint64_t mask_;
};

/// Inclusive signed range of a `bits`-wide operand.
constexpr std::int64_t signed_min(int bits) noexcept { return bits >= 64 ? INT64_MIN : -(std::int64_t{1} << (bits - 1)); }
constexpr std::int64_t signed_max(int bits) noexcept { return bits >= 64 ? INT64_MAX : (std::int64_t{1} << (bits - 1)) - 1; }

inline void require_fits(std::int64_t v, int bits) {
    if (v < signed_min(bits) || v > signed_max(bits))
        throw RangeError("value " + std::to_string(v) + " does not fit in " + std::to_string(bits) + " bits");
}

/// Redundant (sum, carry) pair; its value is sum + carry.
struct CarrySave {
    std::uint64_t sum = 0;
    std::uint64_t carry = 0;
    friend bool operator==(const CarrySave&, const CarrySave&) = default;
};

/// One row of parallel full adders.
constexpr CarrySave csa_3to2(std::uint64_t a, std::uint64_t b, std::uint64_t c, const WordArith& w) noexcept {
    a = w.wrap(a);
    b = w.wrap(b);
    c = w.wrap(c);
    return {a ^ b ^ c, w.wrap(((a & b) | (a & c) | (b & c)) << 1)};
}

/// Carry-propagate adder closing a carry-save chain.
constexpr std::uint64_t resolve(const CarrySave& cs, const WordArith& w) noexcept { return w.add(cs.sum, cs.carry); }

/// Folds each term into the running pair through one 3:2 stage, the way a
/// collapsed column group chains its PEs.
inline CarrySave reduce_chain(std::span<const std::uint64_t> terms, CarrySave incoming, const WordArith& w) noexcept {
    for (auto t : terms) incoming = csa_3to2(t, incoming.sum, incoming.carry, w);
    return incoming;
}

}  // namespace flexpipe
