#pragma once

#include <cstdint>

#include "cpd/errors.hpp"

namespace cpd {

// Trial-division primality check for moduli up to 2^31.
bool is_prime_u32(uint32_t n);

// A prime field GF(p). Elements are residues stored as uint32_t in [0, p).
// All products are computed in uint64_t, so any p < 2^31 is safe.
struct FieldSpec {
    uint32_t p;

    explicit FieldSpec(uint32_t modulus); // throws NotPrimeError

    uint32_t add(uint32_t a, uint32_t b) const {
        uint32_t s = a + b;
        return s >= p ? s - p : s;
    }
    uint32_t sub(uint32_t a, uint32_t b) const { return a >= b ? a - b : a + p - b; }
    uint32_t neg(uint32_t a) const { return a == 0 ? 0 : p - a; }
    uint32_t mul(uint32_t a, uint32_t b) const {
        return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) % p);
    }
    uint32_t inv(uint32_t a) const; // throws ZeroInverseError
    // Reduce an arbitrary signed value into [0, p).
    uint32_t reduce(int64_t v) const {
        int64_t r = v % static_cast<int64_t>(p);
        if (r < 0) r += p;
        return static_cast<uint32_t>(r);
    }

    bool operator==(const FieldSpec& o) const { return p == o.p; }
};

// Standalone inverse in GF(p); a must be nonzero mod p.
uint32_t field_inverse(uint32_t a, const FieldSpec& field);

} // namespace cpd
