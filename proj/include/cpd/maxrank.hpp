#pragma once

// Maximum-rank machinery: closed-form lower/upper bounds for the largest rank
// any tensor of a given shape can attain, and an exhaustive search over GF(2)
// that canonicalizes tensors up to invertible transforms on axes 1 and 2.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpd/matrix.hpp"
#include "cpd/search.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

// ---------------------------------------------------------------------------
// Closed-form bounds. Values are for max rank over the shape, any field unless
// a field parameter narrows them.

// Counting argument: there are |F|^(prod n_d) tensors but only |F|^(R sum n_d)
// rank-<=R CPDs, so some tensor needs ceil(prod / sum) terms. Any D >= 1.
uint32_t bound_counting(const std::vector<uint32_t>& shape);

// Building each 1-D slice along the cheapest axis separately:
// min_d prod_{d' != d} n_d'. Any D >= 1.
uint32_t bound_trivial_upper(const std::vector<uint32_t>& shape);

// Corner-peeling recursion R(m,n,p) <= R(m-1,n-1,p) + p, minimized over all
// axis-pair choices and closed with the slicewise bound; memoized. On cubes it
// evaluates to ceil(3 n^2 / 4). D = 3 only.
uint32_t bound_howell_upper(const std::vector<uint32_t>& shape);

// Exact maximum rank of shape (m, n, 2), m >= n >= 2 (ShapeError otherwise):
//   GF(2):  n + ceil(m/2) for n <= m <= 2n-2;  2n-1 for m = 2n-1;  2n beyond.
//   else:   n + floor(m/2) for n <= m <= 2n-1;  2n beyond.
uint32_t bound_nn2(uint32_t m, uint32_t n, const FieldSpec& field);

// Constructive lower bound for skinny shapes (m, n, mn-k), 0 <= k <= mn:
// max over 1 <= r <= m, 1 <= s <= n with rs >= k of
//   bound_counting({r, s, rs-k}) + mn - rs,
// realized by padding a small max-rank block with one-hot slices.
uint32_t bound_skinny_lower(uint32_t m, uint32_t n, uint32_t k);

// Upper bound for cubes from chaining corner-peeling with the exact
// two-layer values: min over 0 <= k <= n/2 of
//   k*n + (slab bound for shape (n, n-k, n-k) cut into thickness-2 layers),
// using the GF(2) branch of bound_nn2 (the larger one, so the result holds
// over every field). Approaches (23/32) n^2 for large n.
uint32_t bound_improved_nnn(uint32_t n);

struct BoundEntry {
    uint32_t value = 0;
    std::string source; // name of the bound that produced the value
};

// Best applicable closed-form bounds for one shape over one field; lower
// additionally folds in the exact two-layer value when an axis has length 2.
struct ShapeBounds {
    std::vector<uint32_t> shape;
    BoundEntry lower;
    BoundEntry upper;
};

ShapeBounds shape_bounds(const std::vector<uint32_t>& shape, const FieldSpec& field);

// ---------------------------------------------------------------------------
// Canonicalized exhaustive enumeration over GF(2), D = 3. One representative
// per orbit of the GL(n) x GL(p) action on axes 1 and 2, restricted to
// tensors whose axis-0 slice 0 is the rank-r normal form [[I_r, 0], [0, 0]]
// with r0 <= r <= min(n, p):
//   - slice 0 is fixed to the normal form, r ascending;
//   - slice i >= 1 is kept iff it is lexicographically minimal (row-major
//     entries, entry (0,0) most significant) in its orbit under the group of
//     pairs fixing slices 0..i-1; the group is then refined to fix slice i.
// Tensors stream in order (r, slice-1 code, slice-2 code, ...), ascending.

// The pairs (P, Q) with P * T0 * Q^T == T0 for the rank-r normal form T0,
// from the block parameterization
//   P = [[P11, P12], [0, P22]],  Q = [[P11^-T, Q12], [0, Q22]]
// with P11 in GL(r), P22 in GL(n-r), Q22 in GL(p-r) and free off-blocks.
std::vector<std::pair<Mat, Mat>> seed_slice_stabilizer(uint32_t r, uint32_t n,
                                                       uint32_t p,
                                                       const FieldSpec& field);

struct CanonicalStreamConfig {
    // Refuse (BudgetError) when a slice-0 stabilizer would exceed this many
    // pairs; 2^17 comfortably covers every 3x(<=4)x(<=4) shape.
    uint64_t stabilizer_budget = 1ull << 17;
};

class CanonicalStream {
  public:
    // Shape (m, n, p): m slices of size n x p. GF(2) only (UnsupportedError),
    // n * p <= 22 bits (ShapeError beyond).
    CanonicalStream(std::vector<uint32_t> shape, const RingSpec& ring, uint32_t r0,
                    CanonicalStreamConfig cfg = {});
    ~CanonicalStream();
    CanonicalStream(CanonicalStream&&) noexcept;
    CanonicalStream& operator=(CanonicalStream&&) noexcept;

    // Next canonical tensor, or nullopt when the enumeration is finished.
    std::optional<Tensor> next();
    uint64_t yielded() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Exhaustive maximum-rank determination.

struct MaxRankConfig {
    uint32_t threads = 1;          // worker pool for per-tensor rank evaluation
    CanonicalStreamConfig stream;
    SearchConfig search;           // per-tensor engine settings (threads forced to 1)
};

struct MaxRankReport {
    std::vector<uint32_t> shape;
    FieldSpec field;
    uint32_t R0 = 0;               // prior lower bound fed into the run
    uint32_t r0 = 0;               // slice-rank filter floor(R0 / m) + 1
    uint64_t tensors_searched = 0;
    uint32_t max_rank = 0;
    Tensor witness;                // first streamed tensor attaining max_rank
};

// Maximum rank over all shape-(m,n,p) tensors over GF(2), given a valid prior
// lower bound R0 (the result is only guaranteed when R0 really is a lower
// bound: tensors whose every slice has rank <= r0 - 1 are excluded because
// their rank cannot exceed m * (r0 - 1) <= R0). Rank evaluation skips tensors
// proven <= the running maximum; the witness is the first tensor in stream
// order attaining the final maximum. Throws ShapeError when the filter
// empties the stream.
MaxRankReport maxrank_exhaustive(const std::vector<uint32_t>& shape,
                                 const RingSpec& ring, uint32_t R0,
                                 const MaxRankConfig& cfg = {});

// ---------------------------------------------------------------------------
// Reports.

// Characteristic matrix of a 3-way field tensor: the n x p grid whose (j, k)
// entry is sum_i T[i,j,k] * v_i rendered symbolically ("v0+2v2", "0" when
// empty), a compact human-readable rendering of all slices at once.
std::string char_matrix_text(const Tensor& T);

// Plain-text table of one exhaustive run (shape, field, filter, counts,
// result) with the witness rendered as its characteristic matrix.
std::string maxrank_report_text(const MaxRankReport& report);

// The same report as a JSON object, witness as nested slice arrays.
std::string maxrank_report_json(const MaxRankReport& report);

} // namespace cpd
