#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "cpd/matrix.hpp"
#include "cpd/ring.hpp"

namespace cpd {

// Dense D-dimensional tensor over GF(p)[x]/(x^H), row-major. H = 1 gives a
// plain finite-field tensor. Treated as immutable once built; all operations
// below return fresh values.
struct Tensor {
    RingSpec ring;
    std::vector<uint32_t> shape; // n_0, ..., n_{D-1}, all >= 1 (0 allowed after conciseness reduction of a zero tensor)
    std::vector<Poly> data;      // numel() entries, row-major

    Tensor(const RingSpec& rg, std::vector<uint32_t> shp);

    uint32_t ndim() const { return static_cast<uint32_t>(shape.size()); }
    uint64_t numel() const;

    // Flat offset of a multi-index (row-major: last axis fastest).
    uint64_t flat(const std::vector<uint32_t>& idx) const;

    Poly& at(std::initializer_list<uint32_t> idx);
    const Poly& at(std::initializer_list<uint32_t> idx) const;

    bool is_zero() const;
    bool operator==(const Tensor& o) const;
};

// Rank-R CPD candidate: factors[d] is n_d x R; evaluates to
// sum_r factors[0][:,r] (x) ... (x) factors[D-1][:,r].
struct Cpd {
    RingSpec ring;
    std::vector<RMat> factors;

    explicit Cpd(const RingSpec& rg) : ring(rg) {}
    Cpd(const RingSpec& rg, std::vector<RMat> fs) : ring(rg), factors(std::move(fs)) {}

    uint32_t rank() const { return factors.empty() ? 0 : factors[0].cols; }
    uint32_t ndim() const { return static_cast<uint32_t>(factors.size()); }
};

// Axis-d contraction M x_d T: replaces axis d (length n_d) by M's row count;
// entry (.., i', ..) = sum_{i} M(i', i) * T(.., i, ..). M needs n_d columns.
Tensor contract(const RMat& M, uint32_t axis, const Tensor& T);

// Evaluate a CPD to the tensor of the given shape; shape[d] must equal
// factors[d].rows.
Tensor cpd_eval(const Cpd& cpd, const std::vector<uint32_t>& shape);

// Axis-d unfolding: n_d rows; row i is the axis-d slice at coordinate i
// flattened row-major over the remaining axes in increasing axis order.
RMat unfold(const Tensor& T, uint32_t axis);

// Kronecker product: shape n_d * m_d per axis; combined axis-d index
// i_d * m_d + j_d maps to S(.., i_d, ..) * T(.., j_d, ..).
Tensor tensor_kron(const Tensor& S, const Tensor& T);

// Axis permutation: result axis d is input axis perm[d], so
// result(i_0,..,i_{D-1}) = T(i_{perm^{-1}(0)}, ...) with shape[d] = T.shape[perm[d]].
Tensor permute_axes(const Tensor& T, const std::vector<uint32_t>& perm);

// First `count` axis-`axis` slices of T (count <= n_axis).
Tensor take_slices(const Tensor& T, uint32_t axis, uint32_t count);

// Matrix multiplication tensor <m,k,n>: shape mk x kn x nm, with a 1 at
// ((i,j), (j,l), (l,i)) for all i<m, j<k, l<n (each pair flattened row-major).
Tensor mm_tensor(uint32_t m, uint32_t k, uint32_t n, const RingSpec& ring);

// Named tensor families used by the test corpus and the CLI:
//   wstate           2x2x2, slices [[1,0],[0,0]], [[0,1],[1,0]]; rank 3 over any field
//   addmod2          2x2x2, slices [[0,1],[1,0]], [[1,0],[0,1]]; rank 3 iff char = 2, else 2
//   polymul n        (2n-1) x n x n, 1 at (k,i,j) iff i+j = k; rank 2n-1 for |F| >= n
//   diagshift n      n x n x n, first n slices of polymul(n); rank >= 2n-1
//   lm2 k            (k+1) x 2^k x 2^k, slice i has 1s on the antidiagonal a+b = 2^i - 1; rank 2*2^k - 1
//   lm3 k            2^k x 2^k x 2^k, first k+1 slices lm2(k), slice i > k has a single 1
//                    at (2^k - 1, 2^k - 1 - (i - k)); rank >= 3*2^k - k - 3
//   counterexample3  3x3x3 over its ground field; passes rref- and 2nd-order-rref-pruning
//                    at R = 4 on all axes yet has rank 5 over GF(2)
//   t1, t2           3x3x3 pruner-separation pair (rref vs lask strength)
//   wstate_sq        4x4x4 Kronecker square of wstate; rank 8 over GF(2), 7 if char != 2
//   mm m k n         matrix multiplication tensor
// Throws UnknownFamilyError for anything else, ShapeError for bad parameters.
Tensor generate(const std::string& family, const std::vector<uint32_t>& params,
                const RingSpec& ring);

} // namespace cpd
