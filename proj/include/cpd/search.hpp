#pragma once

// Exact CPD search over a prime field: depth-first enumeration of trailing
// factor columns with a polynomial-time completion test at the leaves.
//
// The driver search_rank_le() answers "does T admit a CPD with at most R
// terms?" with either a verified witness or a certified exhaustion of the
// search space. rank_exact() wraps it in an outer loop over R.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cpd/matrix.hpp"
#include "cpd/tensor.hpp"

namespace cpd {

enum class Branch {
    Auto,       // EnumerateV iff R <= sum of sides over axes >= 2
    EnumerateV, // stream v over F^R, keep those with rank-<=1 contraction
    Kernel,     // per trailing-tuple kernel of the rank-1 correction map
};

struct SearchStats {
    uint64_t nodes = 0;          // DFS nodes entered (root, internal, leaf)
    uint64_t test_calls = 0;     // completion tests at full assignments
    uint64_t rref_hits = 0;      // subtrees cut by the rank-streak pruner
    uint64_t lask_hits = 0;      // subtrees cut by the rank-sum pruner
    uint64_t heuristic_hits = 0; // subtrees closed by a greedy witness
    uint64_t kth_hits = 0;       // root cuts by the order-k rank pruner
    uint64_t frequency_hits = 0; // root cuts by the rank-frequency pruner
    double wall_ms = 0.0;
};

struct SearchProgress {
    uint32_t level = 0;          // axis-0 length of the node being expanded
    uint64_t tuples_done = 0;    // child tuples finished at that node
    uint64_t tuples_total = 0;   // child tuples in that node's range
    SearchStats stats;           // snapshot at the time of the callback
};

struct SearchConfig {
    // Enabled pruners; recognized names: "rref", "lask", "heuristic"
    // (run at every internal node of a 3-dimensional search), plus the
    // root-only diagnostics "rref-k" and "frequency" (off by default).
    std::set<std::string> pruners{"rref", "lask", "heuristic"};
    Branch branch = Branch::Auto;
    uint32_t rref_k = 2;         // order used when "rref-k" is enabled
    uint32_t threads = 1;        // worker threads for the top tuple level
    bool deterministic = false;  // force the sequential node order
    uint64_t progress_interval = 0; // nodes between callbacks; 0 disables
    std::function<void(const SearchProgress&)> progress;
};

struct SearchOutcome {
    std::optional<Cpd> witness;  // verified CPD with at most R columns
    bool exhausted = false;      // true iff no CPD with <= R columns exists
    SearchStats stats;
};

struct RankResult {
    uint32_t rank = 0;
    Cpd witness;                 // exactly `rank` columns, verified
    SearchStats stats;           // accumulated over all thresholds tried
};

// A concise field tensor together with fixed trailing factor columns: the
// augmented tensor keeps the base's axis-0 slices and appends, per fixed
// column tuple (y_1, ..., y_{D-1}), the slice -(y_1 (x) ... (x) y_{D-1}).
struct AugmentedTensor {
    Tensor base;              // concise, over a prime field (H == 1)
    std::vector<RMat> y;      // y[d-1] has shape[d] rows, r - n_0 columns
    Tensor tprime;            // base slices then correction slices; axis 0 = r

    AugmentedTensor(Tensor base_tensor, std::vector<RMat> fixed_columns);
    uint32_t n0() const { return base.shape[0]; }
    uint32_t r() const { return tprime.shape[0]; }
};

// Streams the "good pairs" (v, c) of a fully assigned node (r() == R): the
// rows [v | c] whose contraction with the augmented tensor has rank <= 1,
// presented so that their span covers every good row. Stops early when the
// callback returns false.
using PairYield =
    std::function<bool(const std::vector<uint32_t>& v, const std::vector<uint32_t>& c)>;
void good_pairs(const AugmentedTensor& aug, uint32_t R, const SearchConfig& cfg,
                const PairYield& yield);

// Completion test at a full assignment (r() == R): greedily collects good
// rows with independent prefixes; on success returns a CPD of the base tensor
// with exactly R columns whose trailing columns are the fixed tuples.
std::optional<Cpd> test_assignment(const AugmentedTensor& aug, uint32_t R,
                                   const SearchConfig& cfg = {});

// Decides whether T (any tensor over a prime field) has rank <= R. The
// returned witness, when present, is verified against T; `exhausted` is set
// only after the full certified enumeration came up empty.
SearchOutcome search_rank_le(const Tensor& T, uint32_t R, const SearchConfig& cfg = {});

// Exact rank: runs search_rank_le for increasing R starting from the largest
// concise side. The zero tensor has rank 0 and an empty witness.
RankResult rank_exact(const Tensor& T, const SearchConfig& cfg = {});

// log2 of the worst-case number of rank computations for search_rank_le on a
// concise tensor of the given shape (axes sorted descending): counts the
// fixed-column tuples times the per-leaf good-pair stream.
long double log2_search_cost(const std::vector<uint32_t>& shape, uint32_t p, uint32_t R);

} // namespace cpd
