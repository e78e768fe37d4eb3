#pragma once

// Feasibility pruners for 3-dimensional rank searches: negative tests that
// soundly rule out any rank-R CPD consistent with the fixed trailing columns,
// plus a positive greedy construction that can close a subtree with an
// explicit CPD. All of them require D == 3.

#include <cstdint>
#include <optional>

#include "cpd/search.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

// Streams v in F^{1xr}. Feasible only if the vectors whose contraction with
// the augmented tensor has rank <= R - r + 1 contain n_0 with linearly
// independent length-n_0 prefixes. false => no rank-R CPD with the given
// fixed columns exists.
bool rref_prune(const AugmentedTensor& aug, uint32_t r, uint32_t R);

// Sums over all v in F^{1xn_0} the smallest contraction rank achievable after
// subtracting any combination of the fixed-column correction slices; feasible
// iff the sum is at most (R - (r - n_0)) * (p^{n_0} - p^{n_0 - 1}).
bool lask_prune(const AugmentedTensor& aug, uint32_t r, uint32_t R);

// Greedy positive completion: sorts all v in F^{1xr} by contraction rank
// (ties by value), accumulates n_0 rows with independent prefixes, and when
// the assembled term count stays within R returns the CPD of the base tensor.
std::optional<Cpd> rref_heuristic(const AugmentedTensor& aug, uint32_t r, uint32_t R);

// Order-k streak test at the search root (concise T, no fixed columns): the
// wedge products of the k-tuples whose stacked contraction has rank at most
// R - n_0 + k must span the k-th exterior power of F^{n_0}. k = 1 recovers
// rref_prune at r = n_0.
bool kth_order_rref_prune(const Tensor& T, uint32_t k, uint32_t R);

// Cardinality test at the search root: for each 1 <= k <= n_0 at least p^k
// vectors v must reach contraction rank <= R - n_0 + k.
bool frequency_prune(const Tensor& T, uint32_t R);

} // namespace cpd
