#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cpd/field.hpp"
#include "cpd/ring.hpp"

namespace cpd {

// Dense row-major matrix over GF(p). Entries are residues in [0, p).
struct Mat {
    uint32_t rows = 0, cols = 0;
    std::vector<uint32_t> a;

    Mat() = default;
    Mat(uint32_t r, uint32_t c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0) {}

    uint32_t& at(uint32_t i, uint32_t j) { return a[static_cast<size_t>(i) * cols + j]; }
    uint32_t at(uint32_t i, uint32_t j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Mat identity(uint32_t n) {
        Mat m(n, n);
        for (uint32_t i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }
    bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

struct RrefResult {
    Mat R;                           // reduced row-echelon form of M
    Mat Q;                           // invertible; Q * M = R
    uint32_t rank = 0;               // number of nonzero rows of R
    std::vector<uint32_t> pivot_cols; // column of the leading 1 in each nonzero row
};

// Reduced row echelon form with its transform. Pivot choice: first nonzero
// entry in column order (deterministic Q).
RrefResult rref(const Mat& M, const FieldSpec& field);

uint32_t mat_rank(const Mat& M, const FieldSpec& field);

// Rows of the result form a basis of the right kernel {v : M v^T = 0};
// row count = cols(M) - rank(M).
Mat kernel_basis(const Mat& M, const FieldSpec& field);

Mat mat_mul(const Mat& A, const Mat& B, const FieldSpec& field);
Mat mat_transpose(const Mat& A);

// Inverse of a square matrix over the field; throws SingularError.
Mat mat_invert(const Mat& M, const FieldSpec& field);

// Dense row-major matrix over GF(p)[x]/(x^H).
struct RMat {
    uint32_t rows = 0, cols = 0;
    std::vector<Poly> a;

    RMat() = default;
    RMat(uint32_t r, uint32_t c, const RingSpec& ring)
        : rows(r), cols(c), a(static_cast<size_t>(r) * c, poly_zero(ring)) {}

    Poly& at(uint32_t i, uint32_t j) { return a[static_cast<size_t>(i) * cols + j]; }
    const Poly& at(uint32_t i, uint32_t j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static RMat identity(uint32_t n, const RingSpec& ring) {
        RMat m(n, n, ring);
        for (uint32_t i = 0; i < n; ++i) m.at(i, i) = poly_one(ring);
        return m;
    }
    bool operator==(const RMat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

// Field matrix embedded into a ring matrix (entries become constants).
RMat rmat_from_field(const Mat& M, const RingSpec& ring);
// Constant-coefficient extraction; requires every entry to be a constant.
Mat rmat_to_field(const RMat& M);

RMat ring_mat_mul(const RMat& A, const RMat& B, const RingSpec& ring);
RMat ring_mat_add(const RMat& A, const RMat& B, const RingSpec& ring);

// Result of the border reduction Q * M * P = reduced, where reduced = [U|V]
// with U square upper-triangular, diagonal entries exactly x^{p_0},...,
// x^{p_{rank-1}} with p_0 <= ... <= p_{rank-1} < H, rows rank.. zero, and
// x^{p_i} dividing every entry of rows i... rank is the border-ring matrix
// rank of M.
struct BorderReduction {
    RMat Q;                          // invertible row transform
    std::vector<uint32_t> col_perm;  // column j of M*P is column col_perm[j] of M
    RMat reduced;                    // Q * M * P
    uint32_t rank = 0;
    std::vector<uint32_t> diag_powers; // size rank, nondecreasing
};

// Recursive reduction: find a unit pivot (smallest (row, col) on ties), swap it
// to the block corner, scale it to 1, eliminate below, recurse on the trailing
// block; when the block has no unit it equals x * (block'), so divide by x,
// reduce block', and replay the recorded operations on the undivided matrix.
BorderReduction border_reduce(const RMat& M, const RingSpec& ring);

// Inverse of a square matrix over the ring, via border_reduce plus
// back-substitution; throws SingularError.
RMat ring_invert(const RMat& M, const RingSpec& ring);

} // namespace cpd
