#pragma once

// Exact CPD search over the border ring GF(p)[x]/(x^H): depth-first recursion
// on rank-1 subtractions, reducing the target to concise form at every node.
// At H = 1 the recursion degenerates to an exhaustive field-rank brute force,
// which doubles as an independent oracle for the main search engine.

#include <cstdint>
#include <optional>
#include <vector>

#include "cpd/matrix.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

// Conciseness reduction over the border ring. Axis order is preserved. Q[d] is
// an invertible n_d x n_d transform whose first r[d] columns rebuild the input:
//   T = Q[0]_{:,:r_0} x_0 ( ... (Q[D-1]_{:,:r_{D-1}} x_{D-1} core) ... ),
// and every unfolding of core has full border-ring row rank r[d]. A factor
// matrix A of core therefore lifts to Q[d]_{:,:r_d} * A for the input.
struct BorderConcise {
    Tensor core;             // shape r[0] x ... x r[D-1]
    std::vector<RMat> Q;     // one invertible n_d x n_d transform per axis
    std::vector<uint32_t> r; // border conciseness profile
};

BorderConcise border_concise(const Tensor& T);

// Per-depth accounting of the recursion (depth 0 = the root call). Every call
// terminates in exactly one of the four ways, so per depth
//   nodes == cut_overwide + solved_zero + solved_child + exhausted.
// child_space sums, over the calls that reached the tuple loop, the full
// tuple-range size p^(H * sum_d r_d); a run that ends exhausted spawns every
// child of every loop, so depth[k+1].nodes == depth[k].child_space there.
struct BorderDepthStats {
    uint64_t nodes = 0;         // recursive calls entered at this depth
    uint64_t cut_overwide = 0;  // null: some concise side exceeded the threshold
    uint64_t solved_zero = 0;   // empty CPD: some concise side was zero
    uint64_t solved_child = 0;  // witness assembled from a child's CPD
    uint64_t exhausted = 0;     // null after the full tuple range
    uint64_t child_space = 0;   // total tuple-range size (saturating)
};

struct BorderSearchStats {
    std::vector<BorderDepthStats> depth;
    double wall_ms = 0.0;
};

struct BorderSearchConfig {
    // Refuse to start when the worst-case cost estimate exceeds this many
    // elementary steps (see log2_border_search_cost); `force` runs regardless.
    uint64_t budget = 1ull << 36;
    bool force = false;
};

struct BorderSearchOutcome {
    std::optional<Cpd> witness; // verified ring CPD with at most R columns
    bool exhausted = false;     // true iff no rank-<=R CPD over the ring exists
    BorderSearchStats stats;
};

// Decides whether T (over any GF(p)[x]/(x^H); H = 1 included) admits a CPD
// with at most R terms over its ring. Each node reduces its target to concise
// form, fails if some side exceeds the remaining threshold, succeeds with the
// empty CPD if some side is zero, and otherwise subtracts every rank-1 tensor
// u_0 (x) ... (x) u_{D-1} with u_d in ring^{r_d}, recursing at threshold R-1;
// a child CPD A lifts to factors Q[d]_{:,:r_d} * [A_d | u_d]. Tuples follow
// the lexicographic order of their coefficient strings (axis-major, then
// entry-major, then coefficients low to high; first digit most significant),
// so witnesses are deterministic. No pruning beyond the conciseness cuts.
// Throws BudgetError when the cost estimate for the root's concise shape
// exceeds cfg.budget and cfg.force is unset.
BorderSearchOutcome border_search_rank_le(const Tensor& T, uint32_t R,
                                          const BorderSearchConfig& cfg = {});

// Least R such that x^(H-1) * T admits a rank-<=R CPD over GF(p)[x]/(x^H).
// T must be a field tensor (its own H = 1); the scaling and the ring embedding
// happen internally. H = 1 gives the plain field rank.
uint32_t border_rank(const Tensor& T, uint32_t H, const BorderSearchConfig& cfg = {});

// Decides rk(T) <= R for a field tensor by the exhaustive recursion at H = 1.
// Shares nothing with the main search engine; used as a differential oracle.
bool brute_rank_via_border(const Tensor& T, uint32_t R,
                           const BorderSearchConfig& cfg = {});

// log2 of the worst-case recursion-step count for a concise shape:
// H * log2(p) * sum_{1<=r<=R} sum_d min(r, shape[d]).
long double log2_border_search_cost(const std::vector<uint32_t>& shape, uint32_t p,
                                    uint32_t H, uint32_t R);

} // namespace cpd
