#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace cpd {

// Bit-packed GF(2) primitives used by the hot loops (search engine, pruners,
// canonical enumeration). A matrix row with up to 64 columns is one uint64_t;
// bit j holds the entry in column j.

// Incremental row-space basis over GF(2). Rows are reduced against the stored
// echelon basis; insert() reports whether the row enlarged the span.
struct Gf2Basis {
    uint64_t piv[64] = {0}; // piv[b] = stored row whose leading bit is b (0 if none)
    uint32_t rank = 0;

    // Reduce v against the basis; returns the residue (0 if v is in the span).
    uint64_t reduce(uint64_t v) const {
        while (v) {
            uint32_t b = 63u - static_cast<uint32_t>(std::countl_zero(v));
            if (!piv[b]) return v;
            v ^= piv[b];
        }
        return 0;
    }
    bool contains(uint64_t v) const { return reduce(v) == 0; }
    // Insert v; true iff the rank grew.
    bool insert(uint64_t v) {
        while (v) {
            uint32_t b = 63u - static_cast<uint32_t>(std::countl_zero(v));
            if (!piv[b]) {
                piv[b] = v;
                ++rank;
                return true;
            }
            v ^= piv[b];
        }
        return false;
    }
    void clear() {
        for (uint64_t& r : piv) r = 0;
        rank = 0;
    }
};

// Rank of a list of packed rows.
inline uint32_t gf2_rank(const uint64_t* rows, uint32_t n) {
    Gf2Basis b;
    for (uint32_t i = 0; i < n; ++i) b.insert(rows[i]);
    return b.rank;
}
inline uint32_t gf2_rank(const std::vector<uint64_t>& rows) {
    return gf2_rank(rows.data(), static_cast<uint32_t>(rows.size()));
}

// Rank <= 1 test: all nonzero rows equal.
inline bool gf2_rank_le_1(const uint64_t* rows, uint32_t n) {
    uint64_t seen = 0;
    for (uint32_t i = 0; i < n; ++i) {
        if (rows[i] == 0) continue;
        if (seen == 0)
            seen = rows[i];
        else if (rows[i] != seen)
            return false;
    }
    return true;
}

// Parity of the intersection of two bit rows (dot product over GF(2)).
inline uint32_t gf2_dot(uint64_t a, uint64_t b) {
    return static_cast<uint32_t>(std::popcount(a & b) & 1);
}

} // namespace cpd
