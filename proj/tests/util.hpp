#pragma once

// Shared helpers for the test binaries: small literal constructors and
// deterministic random generators.

#include <cstdint>
#include <random>
#include <vector>

#include "cpd/matrix.hpp"
#include "cpd/ring.hpp"
#include "cpd/tensor.hpp"

namespace cpd::test {

inline Mat mat(const std::vector<std::vector<uint32_t>>& rows) {
    Mat m(static_cast<uint32_t>(rows.size()),
          rows.empty() ? 0 : static_cast<uint32_t>(rows[0].size()));
    for (uint32_t i = 0; i < m.rows; ++i)
        for (uint32_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    return m;
}

// Ring matrix literal: each entry is a coefficient list (low degree first),
// padded with zeros to length H.
inline RMat rmat(const std::vector<std::vector<std::vector<uint32_t>>>& rows,
                 const RingSpec& ring) {
    RMat m(static_cast<uint32_t>(rows.size()),
           rows.empty() ? 0 : static_cast<uint32_t>(rows[0].size()), ring);
    for (uint32_t i = 0; i < m.rows; ++i)
        for (uint32_t j = 0; j < m.cols; ++j) {
            Poly e = poly_zero(ring);
            for (size_t h = 0; h < rows[i][j].size() && h < ring.H; ++h)
                e[h] = rows[i][j][h] % ring.field.p;
            m.at(i, j) = e;
        }
    return m;
}

inline Poly poly(const std::vector<uint32_t>& coeffs, const RingSpec& ring) {
    Poly e = poly_zero(ring);
    for (size_t h = 0; h < coeffs.size() && h < ring.H; ++h)
        e[h] = coeffs[h] % ring.field.p;
    return e;
}

inline Mat random_mat(uint32_t rows, uint32_t cols, uint32_t p, std::mt19937& rng) {
    Mat m(rows, cols);
    for (auto& x : m.a) x = rng() % p;
    return m;
}

inline RMat random_rmat(uint32_t rows, uint32_t cols, const RingSpec& ring,
                        std::mt19937& rng) {
    RMat m(rows, cols, ring);
    for (auto& e : m.a)
        for (auto& c : e) c = rng() % ring.field.p;
    return m;
}

inline Tensor random_tensor(const std::vector<uint32_t>& shape, const RingSpec& ring,
                            std::mt19937& rng) {
    Tensor t(ring, shape);
    for (auto& e : t.data)
        for (auto& c : e) c = rng() % ring.field.p;
    return t;
}

// 3-way slice literal: slices[i][j][k] are plain field values.
inline Tensor tensor3(const std::vector<std::vector<std::vector<uint32_t>>>& slices,
                      const RingSpec& ring) {
    Tensor t(ring, {static_cast<uint32_t>(slices.size()),
                    static_cast<uint32_t>(slices[0].size()),
                    static_cast<uint32_t>(slices[0][0].size())});
    for (uint32_t i = 0; i < t.shape[0]; ++i)
        for (uint32_t j = 0; j < t.shape[1]; ++j)
            for (uint32_t k = 0; k < t.shape[2]; ++k)
                t.at({i, j, k}) = poly_const(slices[i][j][k] % ring.field.p, ring);
    return t;
}

} // namespace cpd::test
