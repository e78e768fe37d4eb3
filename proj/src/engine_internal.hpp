#pragma once

// Internal machinery shared by the search engine and the pruners.
//
// The public API works with ring-valued Tensor/RMat; the engine flattens a
// concise field tensor into u32 entries once and then works slice-wise along
// axis 0. When p == 2, D == 3 and the last axis fits in a machine word, each
// axis-0 slice additionally keeps a bit-packed mirror (one uint64 per
// axis-1 row), which the hot loops (contraction sums, rank, rank-1 tests)
// operate on directly.

#include <cstdint>
#include <optional>
#include <vector>

#include "cpd/field.hpp"
#include "cpd/gf2.hpp"
#include "cpd/matrix.hpp"
#include "cpd/tensor.hpp"

namespace cpd::eng {

// Concise base tensor, flattened. shape[0] = n0 axis; m = prod(shape[1..]).
struct Base {
    FieldSpec field;
    std::vector<uint32_t> shape;
    uint64_t m = 0;
    std::vector<uint32_t> a; // shape[0] * m entries, slice-major

    bool packed = false; // p == 2, D == 3, shape[2] <= 64
    uint32_t n1 = 0, n2 = 0;

    Base(const FieldSpec& f, std::vector<uint32_t> shp, std::vector<uint32_t> data);

    uint32_t n0() const { return shape[0]; }
    uint32_t ndim() const { return static_cast<uint32_t>(shape.size()); }
    // Sum of side lengths over axes >= 1 (digits in one trailing-column tuple).
    uint32_t tuple_digits() const;
};

// Augmented tensor: base slices 0..n0-1 plus one extra slice per fixed
// trailing-column tuple, slice n0+j = -(y_1 (x) ... (x) y_{D-1}).
struct Aug {
    const Base* base;
    uint32_t r;                                  // current slice count
    std::vector<uint32_t> a;                     // r * m
    std::vector<uint64_t> rows;                  // packed mirror: r * n1
    std::vector<std::vector<uint32_t>> tuples;   // fixed tuples, concatenated digits

    explicit Aug(const Base& b);
    // tuple = digits of (y_1 | y_2 | ...), length base->tuple_digits().
    void push_tuple(const std::vector<uint32_t>& tuple);
    void pop_tuple();
    const uint32_t* slice(uint32_t i) const { return a.data() + i * base->m; }
    const uint64_t* packed_slice(uint32_t i) const { return rows.data() + i * base->n1; }

    // Y_d factor block (d in 1..D-1): shape[d] x (r - n0) columns from tuples.
    Mat y_block(uint32_t d) const;
};

// Enumerates v in F^{1xk} in ascending base-p order (v_0 most significant)
// while maintaining sum = sum_i v_i * slice_i incrementally. The initial state
// is v = 0 with `sum` = the provided offset (zero by default). Use:
//   for (bool more = true; more; more = od.step()) { ... od.digits, od.sum ... }
struct Odometer {
    uint32_t p = 0, k = 0;
    uint64_t m = 0;
    const uint32_t* slices = nullptr;
    std::vector<uint32_t> digits;
    std::vector<uint32_t> sum;

    bool packed = false;
    uint32_t words = 0; // uint64 words per slice (= n1)
    const uint64_t* pslices = nullptr;
    std::vector<uint64_t> psum;

    void init(const Aug& aug, uint32_t first, uint32_t count);
    // Same, but the running sum starts at the given offset (copied).
    void init_offset(const Aug& aug, uint32_t first, uint32_t count,
                     const std::vector<uint32_t>& sum0,
                     const std::vector<uint64_t>& psum0);
    bool step();
};

// Rank of a rows x cols matrix stored row-major in `data` (entries mod p).
// Destroys `scratch` (resized internally).
uint32_t rank_field(const uint32_t* data, uint32_t rows, uint32_t cols,
                    const FieldSpec& f, std::vector<uint32_t>& scratch);

// Rank of a bit-packed GF(2) matrix given as `rows` uint64 words.
uint32_t rank_packed(const uint64_t* rows, uint32_t nrows);

// Rank <= 1 test of a (D-1)-dimensional flat tensor s over axes `rest`
// (= engine shape[1..]). When true and `factors` is non-null, factors[e] gets
// a length-rest[e] vector such that s = factors[0] (x) factors[1] (x) ...;
// the zero slice yields all-zero factors.
bool rank1_factors(const uint32_t* s, const std::vector<uint32_t>& rest,
                   const FieldSpec& f,
                   std::vector<std::vector<uint32_t>>* factors);

// Rank <= 1 test on a bit-packed slice (n1 rows).
bool rank1_packed(const uint64_t* rows, uint32_t n1);

// Greedy row basis over F^{1xn}: insert() returns true iff the new vector
// enlarged the span. Bit-packed when p == 2 and n <= 64.
struct PrefixBasis {
    const FieldSpec* f = nullptr;
    uint32_t n = 0;
    bool packed = false;
    Gf2Basis gb;
    std::vector<std::vector<uint32_t>> rows; // echelon rows, leading entry 1
    std::vector<uint32_t> piv;

    void init(const FieldSpec& field, uint32_t width);
    bool insert(const uint32_t* v);
    uint32_t rank() const { return packed ? gb.rank : static_cast<uint32_t>(rows.size()); }
};

// ---- pruners (D == 3 only), on engine state ---------------------------------
// Defined in pruners.cpp; the search engine calls these at internal nodes.

bool rref_prune_impl(const Aug& aug, uint32_t R);
bool lask_prune_impl(const Aug& aug, uint32_t R);

// Factor matrices (n_d x total) over the field for the concise base tensor, or
// nullopt when the assembled rank exceeds R.
std::optional<std::vector<Mat>> rref_heuristic_impl(const Aug& aug, uint32_t R);

// Root-only checks (require aug.r == n0).
bool kth_order_rref_impl(const Aug& aug, uint32_t R, uint32_t k);
bool frequency_impl(const Aug& aug, uint32_t R);

// ---- conversions from the public representation -----------------------------

// Flattens a field tensor (H == 1) into engine form.
Base base_from_tensor(const Tensor& T);

// Builds the augmented state from per-axis fixed-column blocks y[d-1]
// (shape[d] x extra, constant ring entries).
Aug aug_from_blocks(const Base& b, const std::vector<RMat>& y);

} // namespace cpd::eng
