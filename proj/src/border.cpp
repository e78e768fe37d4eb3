#include "cpd/border.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>

#include "cpd/errors.hpp"
#include "cpd/oracle.hpp"

namespace cpd {

namespace {

RMat take_cols(const RMat& M, uint32_t k, const RingSpec& ring) {
    RMat out(M.rows, k, ring);
    for (uint32_t i = 0; i < M.rows; ++i)
        for (uint32_t j = 0; j < k; ++j) out.at(i, j) = M.at(i, j);
    return out;
}

// [A | u] with u appended as one extra column.
RMat append_col(const RMat& A, const std::vector<Poly>& u, const RingSpec& ring) {
    RMat out(A.rows, A.cols + 1, ring);
    for (uint32_t i = 0; i < A.rows; ++i) {
        for (uint32_t j = 0; j < A.cols; ++j) out.at(i, j) = A.at(i, j);
        out.at(i, A.cols) = u[i];
    }
    return out;
}

uint64_t saturating_add(uint64_t a, uint64_t b) {
    return a > std::numeric_limits<uint64_t>::max() - b
               ? std::numeric_limits<uint64_t>::max()
               : a + b;
}

// p^digits with saturation at the u64 ceiling.
uint64_t saturating_pow(uint32_t p, uint64_t digits) {
    uint64_t v = 1;
    for (uint64_t t = 0; t < digits; ++t) {
        if (v > std::numeric_limits<uint64_t>::max() / p)
            return std::numeric_limits<uint64_t>::max();
        v *= p;
    }
    return v;
}

BorderDepthStats& level(BorderSearchStats& st, uint32_t depth) {
    if (st.depth.size() <= depth) st.depth.resize(depth + 1);
    return st.depth[depth];
}

// One recursion step: returns a rank-<=R CPD of `target` over its ring, or
// nullopt after certifying that none exists.
std::optional<Cpd> dfs(const Tensor& target, uint32_t R, uint32_t depth,
                       BorderSearchStats& st) {
    const RingSpec& ring = target.ring;
    const uint32_t D = target.ndim();
    const uint32_t p = ring.field.p, H = ring.H;
    level(st, depth).nodes++;

    BorderConcise bc = border_concise(target);
    for (uint32_t d = 0; d < D; ++d)
        if (bc.r[d] > R) {
            level(st, depth).cut_overwide++;
            return std::nullopt;
        }
    for (uint32_t d = 0; d < D; ++d)
        if (bc.r[d] == 0) {
            // Some concise side is empty, so the target is the zero tensor.
            level(st, depth).solved_zero++;
            Cpd out(ring);
            for (uint32_t e = 0; e < D; ++e)
                out.factors.emplace_back(target.shape[e], 0, ring);
            return out;
        }

    // All sides satisfy 1 <= r_d <= R (hence R >= 1): enumerate every tuple
    // (u_0, ..., u_{D-1}), u_d in ring^{r_d}, as one base-p digit string over
    // all coefficients, in lexicographic order with the last digit fastest.
    uint64_t digit_count = 0;
    for (uint32_t d = 0; d < D; ++d) digit_count += uint64_t{bc.r[d]} * H;
    const uint64_t space = saturating_pow(p, digit_count);
    level(st, depth).child_space =
        saturating_add(level(st, depth).child_space, space);

    std::vector<uint32_t> dig(digit_count, 0);
    std::vector<std::vector<Poly>> u(D);
    for (uint32_t d = 0; d < D; ++d) u[d].assign(bc.r[d], poly_zero(ring));

    uint64_t children = 0;
    bool done = false;
    while (!done) {
        // Decode the digit string into the per-axis vectors.
        uint64_t t = 0;
        for (uint32_t d = 0; d < D; ++d)
            for (uint32_t i = 0; i < bc.r[d]; ++i)
                for (uint32_t h = 0; h < H; ++h) u[d][i][h] = dig[t++];

        // Child target: core minus the rank-1 tensor of the tuple.
        Tensor sub = bc.core;
        std::vector<uint32_t> idx(D, 0);
        for (uint64_t f = 0; f < sub.numel(); ++f) {
            Poly prod = u[0][idx[0]];
            for (uint32_t d = 1; d < D; ++d) prod = poly_mul(prod, u[d][idx[d]], ring);
            sub.data[f] = poly_sub(sub.data[f], prod, ring);
            for (uint32_t d = D; d-- > 0;) {
                if (++idx[d] < sub.shape[d]) break;
                idx[d] = 0;
            }
        }

        ++children;
        if (children > space)
            throw InternalError("border recursion exceeded its own tuple-space bound");

        std::optional<Cpd> child = dfs(sub, R - 1, depth + 1, st);
        if (child) {
            level(st, depth).solved_child++;
            Cpd out(ring);
            for (uint32_t d = 0; d < D; ++d)
                out.factors.push_back(
                    ring_mat_mul(take_cols(bc.Q[d], bc.r[d], ring),
                                 append_col(child->factors[d], u[d], ring), ring));
            return out;
        }

        done = true;
        for (uint64_t w = digit_count; w-- > 0;) {
            if (++dig[w] < p) {
                done = false;
                break;
            }
            dig[w] = 0;
        }
    }

    level(st, depth).exhausted++;
    return std::nullopt;
}

} // namespace

BorderConcise border_concise(const Tensor& T) {
    const RingSpec& ring = T.ring;
    Tensor cur = T;
    std::vector<RMat> Q;
    std::vector<uint32_t> r;
    Q.reserve(T.ndim());
    r.reserve(T.ndim());
    for (uint32_t d = 0; d < T.ndim(); ++d) {
        BorderReduction red = border_reduce(unfold(cur, d), ring);
        cur = take_slices(contract(red.Q, d, cur), d, red.rank);
        Q.push_back(ring_invert(red.Q, ring));
        r.push_back(red.rank);
    }
    return BorderConcise{std::move(cur), std::move(Q), std::move(r)};
}

long double log2_border_search_cost(const std::vector<uint32_t>& shape, uint32_t p,
                                    uint32_t H, uint32_t R) {
    // sum_{1<=r<=R} min(r, n) == n(n+1)/2 + (R-n)n for n <= R, else R(R+1)/2.
    long double digits = 0.0L;
    for (uint32_t n : shape) {
        const long double nn = n, RR = R;
        digits += n >= R ? RR * (RR + 1) / 2 : nn * (nn + 1) / 2 + (RR - nn) * nn;
    }
    return static_cast<long double>(H) * digits *
           std::log2(static_cast<long double>(p));
}

BorderSearchOutcome border_search_rank_le(const Tensor& T, uint32_t R,
                                          const BorderSearchConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!cfg.force) {
        const BorderConcise probe = border_concise(T);
        const long double est =
            log2_border_search_cost(probe.r, T.ring.field.p, T.ring.H, R);
        if (est > std::log2(static_cast<long double>(cfg.budget))) {
            std::ostringstream msg;
            msg << "border search estimate 2^" << static_cast<double>(est)
                << " steps exceeds the budget of " << cfg.budget
                << " (set force to run anyway)";
            throw BudgetError(msg.str());
        }
    }

    BorderSearchOutcome out;
    std::optional<Cpd> w = dfs(T, R, 0, out.stats);
    if (w) {
        if (w->rank() > R)
            throw InternalError("border witness exceeds the requested rank bound");
        if (!verify_cpd(T, *w))
            throw InternalError("border witness fails re-evaluation");
        out.witness = std::move(w);
    } else {
        out.exhausted = true;
    }
    out.stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return out;
}

uint32_t border_rank(const Tensor& T, uint32_t H, const BorderSearchConfig& cfg) {
    if (!T.ring.is_field())
        throw UnsupportedError(
            "border_rank expects a field tensor; the threshold H is applied internally");
    const RingSpec ring(T.ring.field, H);
    Tensor S(ring, T.shape);
    for (uint64_t f = 0; f < T.numel(); ++f) S.data[f][H - 1] = T.data[f][0];

    for (uint32_t R = 0;; ++R) {
        if (uint64_t{R} > T.numel())
            throw InternalError("exceeded the trivial rank upper bound without a witness");
        BorderSearchOutcome out = border_search_rank_le(S, R, cfg);
        if (out.witness) return R;
    }
}

bool brute_rank_via_border(const Tensor& T, uint32_t R, const BorderSearchConfig& cfg) {
    if (!T.ring.is_field())
        throw UnsupportedError("brute_rank_via_border expects a field tensor");
    return border_search_rank_le(T, R, cfg).witness.has_value();
}

} // namespace cpd
