#include "cpd/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "cpd/concise.hpp"
#include "cpd/errors.hpp"
#include "engine_internal.hpp"

namespace cpd {

namespace {

using eng::Aug;
using eng::Base;

struct PrunerFlags {
    bool rref = false, lask = false, heur = false, kth = false, freq = false;
};

PrunerFlags parse_pruners(const SearchConfig& cfg) {
    PrunerFlags fl;
    for (const auto& name : cfg.pruners) {
        if (name == "rref")
            fl.rref = true;
        else if (name == "lask")
            fl.lask = true;
        else if (name == "heuristic")
            fl.heur = true;
        else if (name == "rref-k")
            fl.kth = true;
        else if (name == "frequency")
            fl.freq = true;
        else
            throw ParseError("unknown pruner name: " + name);
    }
    return fl;
}

uint32_t field_value(const Poly& c) { return c.empty() ? 0 : c[0]; }

uint64_t pow_checked(uint64_t b, uint32_t e) {
    uint64_t r = 1;
    for (uint32_t i = 0; i < e; ++i) {
        if (r > (uint64_t{1} << 62) / b)
            throw BudgetError("trailing-column tuple space exceeds 2^62");
        r *= b;
    }
    return r;
}

void decode_tuple(uint64_t code, uint32_t p, uint32_t tdigits, std::vector<uint32_t>& out) {
    out.assign(tdigits, 0);
    for (uint32_t t = tdigits; t-- > 0;) {
        out[t] = static_cast<uint32_t>(code % p);
        code /= p;
    }
}

struct Ctx {
    const Base* base = nullptr;
    uint32_t R = 0;
    const SearchConfig* cfg = nullptr;
    PrunerFlags fl;
    bool enum_v = true;
    uint32_t tdigits = 0;
    uint64_t K = 1; // tuples per level
    std::vector<uint32_t> rest; // shape[1..]
    SearchStats stats;
    std::mutex* cb_mu = nullptr; // guards the progress callback when parallel
    uint64_t last_progress = 0;
};

Ctx make_ctx(const Base& base, uint32_t R, const SearchConfig& cfg) {
    Ctx ctx;
    ctx.base = &base;
    ctx.R = R;
    ctx.cfg = &cfg;
    ctx.fl = parse_pruners(cfg);
    ctx.rest.assign(base.shape.begin() + 1, base.shape.end());
    uint32_t sum2 = 0;
    for (size_t d = 2; d < base.shape.size(); ++d) sum2 += base.shape[d];
    ctx.enum_v = cfg.branch == Branch::EnumerateV ||
                 (cfg.branch == Branch::Auto && R <= sum2);
    ctx.tdigits = base.tuple_digits();
    ctx.K = R > base.n0() ? pow_checked(base.field.p, ctx.tdigits) : 1;
    return ctx;
}

void progress_tick(Ctx& ctx, uint32_t level, uint64_t done, uint64_t total) {
    const SearchConfig& cfg = *ctx.cfg;
    if (!cfg.progress || cfg.progress_interval == 0) return;
    if (ctx.stats.nodes - ctx.last_progress < cfg.progress_interval) return;
    ctx.last_progress = ctx.stats.nodes;
    SearchProgress pr;
    pr.level = level;
    pr.tuples_done = done;
    pr.tuples_total = total;
    pr.stats = ctx.stats;
    if (ctx.cb_mu) {
        std::lock_guard<std::mutex> lk(*ctx.cb_mu);
        cfg.progress(pr);
    } else {
        cfg.progress(pr);
    }
}

// Streams the good rows [v | c] (digit pointers of length R) of a fully
// assigned node. Returns false iff the callback stopped the stream.
template <typename Cb>
bool run_good_pairs(const Ctx& ctx, Aug& aug, const Cb& cb) {
    const Base& b = *ctx.base;
    const uint32_t R = ctx.R;
    if (ctx.enum_v) {
        eng::Odometer od;
        od.init(aug, 0, R);
        for (bool more = true; more; more = od.step()) {
            const bool good = b.packed
                                  ? eng::rank1_packed(od.psum.data(), b.n1)
                                  : eng::rank1_factors(od.sum.data(), ctx.rest,
                                                       b.field, nullptr);
            if (good && !cb(od.digits.data())) return false;
        }
        return true;
    }
    // Kernel branch: for each trailing-axis tuple (u_d)_{d>=2}, the good rows
    // with contraction proportional to (x)_{d>=2} u_d form (a superset of) the
    // v-c prefix of the kernel of x = (v, c, u_1) |-> [v|c] x_0 T' - u_1 (x) u.
    const FieldSpec& f = b.field;
    const uint32_t n1 = b.shape[1];
    const uint64_t m_rest = b.m / n1;
    uint32_t rest2_digits = 0;
    for (size_t d = 2; d < b.shape.size(); ++d) rest2_digits += b.shape[d];
    Mat M(static_cast<uint32_t>(b.m), R + n1);
    for (uint32_t j = 0; j < R; ++j) {
        const uint32_t* s = aug.slice(j);
        for (uint64_t q = 0; q < b.m; ++q) M.at(static_cast<uint32_t>(q), j) = s[q];
    }
    std::vector<uint32_t> u(rest2_digits, 0), prod, next;
    for (;;) {
        prod.assign(1, 1u);
        size_t off = 0;
        for (size_t d = 2; d < b.shape.size(); ++d) {
            const uint32_t nd = b.shape[d];
            next.clear();
            for (uint32_t x : prod)
                for (uint32_t i = 0; i < nd; ++i) next.push_back(f.mul(x, u[off + i]));
            prod.swap(next);
            off += nd;
        }
        for (uint64_t q = 0; q < b.m; ++q)
            for (uint32_t t = 0; t < n1; ++t) M.at(static_cast<uint32_t>(q), R + t) = 0;
        for (uint32_t t = 0; t < n1; ++t)
            for (uint64_t q = 0; q < m_rest; ++q)
                M.at(static_cast<uint32_t>(t * m_rest + q), R + t) = f.neg(prod[q]);
        const Mat kb = kernel_basis(M, f);
        for (uint32_t i = 0; i < kb.rows; ++i)
            if (!cb(&kb.a[static_cast<size_t>(i) * kb.cols])) return false;
        bool advanced = false;
        for (uint32_t t = rest2_digits; t-- > 0;) {
            if (++u[t] < f.p) {
                advanced = true;
                break;
            }
            u[t] = 0;
        }
        if (!advanced) break;
    }
    return true;
}

// Completion test at a full assignment: greedy accumulation of good rows with
// independent v-prefixes, then CPD assembly from the accepted rows.
std::optional<std::vector<Mat>> test_node(Ctx& ctx, Aug& aug) {
    ++ctx.stats.test_calls;
    const Base& b = *ctx.base;
    const FieldSpec& f = b.field;
    const uint32_t n0 = b.n0(), R = ctx.R;
    eng::PrefixBasis pb;
    pb.init(f, n0);
    std::vector<std::vector<uint32_t>> qrows;
    run_good_pairs(ctx, aug, [&](const uint32_t* vc) {
        if (pb.insert(vc)) {
            qrows.emplace_back(vc, vc + R);
            if (qrows.size() == n0) return false;
        }
        return true;
    });
    if (qrows.size() < n0) return std::nullopt;

    Mat Q(n0, n0), C(n0, R - n0);
    for (uint32_t i = 0; i < n0; ++i) {
        for (uint32_t j = 0; j < n0; ++j) Q.at(i, j) = qrows[i][j];
        for (uint32_t j = n0; j < R; ++j) C.at(i, j - n0) = qrows[i][j];
    }
    const Mat qinv = mat_invert(Q, f);
    const Mat qinv_c = mat_mul(qinv, C, f);
    const uint32_t D = b.ndim();
    std::vector<Mat> A;
    A.reserve(D);
    A.emplace_back(n0, R);
    for (uint32_t i = 0; i < n0; ++i) {
        for (uint32_t j = 0; j < n0; ++j) A[0].at(i, j) = qinv.at(i, j);
        for (uint32_t j = n0; j < R; ++j) A[0].at(i, j) = qinv_c.at(i, j - n0);
    }
    for (uint32_t d = 1; d < D; ++d) A.emplace_back(b.shape[d], R);
    for (uint32_t j = 0; j + n0 < R; ++j) {
        size_t off = 0;
        for (uint32_t d = 1; d < D; ++d) {
            for (uint32_t i = 0; i < b.shape[d]; ++i)
                A[d].at(i, n0 + j) = aug.tuples[j][off + i];
            off += b.shape[d];
        }
    }
    std::vector<uint32_t> s(b.m);
    std::vector<std::vector<uint32_t>> fac;
    for (uint32_t i = 0; i < n0; ++i) {
        std::fill(s.begin(), s.end(), 0u);
        for (uint32_t k = 0; k < R; ++k) {
            const uint32_t coef = qrows[i][k];
            if (coef == 0) continue;
            const uint32_t* sl = aug.slice(k);
            for (uint64_t q = 0; q < b.m; ++q) s[q] = f.add(s[q], f.mul(coef, sl[q]));
        }
        if (!eng::rank1_factors(s.data(), ctx.rest, f, &fac))
            throw InternalError(
                "completion test accepted a row whose contraction has rank > 1");
        for (uint32_t d = 1; d < D; ++d)
            for (uint32_t row = 0; row < b.shape[d]; ++row)
                A[d].at(row, i) = fac[d - 1][row];
    }
    return A;
}

// Pruner pass at an internal node. Returns true iff the subtree is closed:
// either cut negatively (heur stays empty) or solved by a greedy witness.
bool prune_internal(Ctx& ctx, Aug& aug, std::optional<std::vector<Mat>>& heur) {
    if (ctx.base->ndim() != 3) return false;
    if (ctx.fl.rref && !eng::rref_prune_impl(aug, ctx.R)) {
        ++ctx.stats.rref_hits;
        return true;
    }
    if (aug.r == ctx.base->n0()) {
        if (ctx.fl.kth && !eng::kth_order_rref_impl(aug, ctx.R, ctx.cfg->rref_k)) {
            ++ctx.stats.kth_hits;
            return true;
        }
        if (ctx.fl.freq && !eng::frequency_impl(aug, ctx.R)) {
            ++ctx.stats.frequency_hits;
            return true;
        }
    }
    if (ctx.fl.lask && !eng::lask_prune_impl(aug, ctx.R)) {
        ++ctx.stats.lask_hits;
        return true;
    }
    if (ctx.fl.heur) {
        if (auto fac = eng::rref_heuristic_impl(aug, ctx.R)) {
            ++ctx.stats.heuristic_hits;
            heur = std::move(fac);
            return true;
        }
    }
    return false;
}

std::optional<std::vector<Mat>> visit(Ctx& ctx, Aug& aug, uint64_t min_code,
                                      std::vector<uint32_t>& tuple_buf) {
    ++ctx.stats.nodes;
    if (aug.r == ctx.R) return test_node(ctx, aug);
    std::optional<std::vector<Mat>> heur;
    if (prune_internal(ctx, aug, heur)) return heur;
    const uint32_t p = ctx.base->field.p;
    for (uint64_t code = min_code; code < ctx.K; ++code) {
        decode_tuple(code, p, ctx.tdigits, tuple_buf);
        aug.push_tuple(tuple_buf);
        auto w = visit(ctx, aug, code, tuple_buf);
        aug.pop_tuple();
        if (w) return w;
        progress_tick(ctx, aug.r, code - min_code + 1, ctx.K - min_code);
    }
    return std::nullopt;
}

struct EngineResult {
    std::optional<std::vector<Mat>> factors;
    SearchStats stats;
};

EngineResult run_engine(const Base& base, uint32_t R, const SearchConfig& cfg) {
    Ctx ctx = make_ctx(base, R, cfg);
    const uint32_t n0 = base.n0();
    std::vector<uint32_t> tuple_buf;
    const bool sequential =
        R == n0 || cfg.threads <= 1 || cfg.deterministic || ctx.K <= 1;
    if (sequential) {
        Aug aug(base);
        auto w = visit(ctx, aug, 0, tuple_buf);
        return {std::move(w), ctx.stats};
    }

    // Parallel: prune the root once, then hand out top-level tuple codes.
    Aug root(base);
    ++ctx.stats.nodes;
    std::optional<std::vector<Mat>> heur;
    if (prune_internal(ctx, root, heur)) return {std::move(heur), ctx.stats};

    std::atomic<uint64_t> next{0};
    std::atomic<uint64_t> best{ctx.K}; // lowest top-level code with a witness
    std::atomic<uint64_t> done{0};
    std::mutex mu;
    std::optional<std::vector<Mat>> best_factors;
    SearchStats total = ctx.stats;
    const uint32_t workers =
        static_cast<uint32_t>(std::min<uint64_t>(cfg.threads, ctx.K));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (uint32_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            Ctx wctx = make_ctx(base, R, cfg);
            wctx.cb_mu = &mu;
            Aug aug(base);
            std::vector<uint32_t> buf;
            for (;;) {
                const uint64_t code = next.fetch_add(1);
                if (code >= ctx.K || code >= best.load()) break;
                decode_tuple(code, base.field.p, wctx.tdigits, buf);
                aug.push_tuple(buf);
                auto res = visit(wctx, aug, code, buf);
                aug.pop_tuple();
                done.fetch_add(1);
                if (res) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (code < best.load()) {
                        best.store(code);
                        best_factors = std::move(res);
                    }
                    break;
                }
                if (cfg.progress && cfg.progress_interval) {
                    SearchProgress pr;
                    pr.level = n0;
                    pr.tuples_done = done.load();
                    pr.tuples_total = ctx.K;
                    pr.stats = wctx.stats;
                    std::lock_guard<std::mutex> lk(mu);
                    cfg.progress(pr);
                }
            }
            std::lock_guard<std::mutex> lk(mu);
            total.nodes += wctx.stats.nodes;
            total.test_calls += wctx.stats.test_calls;
            total.rref_hits += wctx.stats.rref_hits;
            total.lask_hits += wctx.stats.lask_hits;
            total.heuristic_hits += wctx.stats.heuristic_hits;
            total.kth_hits += wctx.stats.kth_hits;
            total.frequency_hits += wctx.stats.frequency_hits;
        });
    }
    for (auto& t : pool) t.join();
    if (best.load() < ctx.K) return {std::move(best_factors), total};
    return {std::nullopt, total};
}

Cpd cpd_from_mats(const std::vector<Mat>& factors, const RingSpec& ring) {
    std::vector<RMat> fs;
    fs.reserve(factors.size());
    for (const Mat& M : factors) fs.push_back(rmat_from_field(M, ring));
    return Cpd(ring, fs);
}

void merge_stats(SearchStats& a, const SearchStats& b) {
    a.nodes += b.nodes;
    a.test_calls += b.test_calls;
    a.rref_hits += b.rref_hits;
    a.lask_hits += b.lask_hits;
    a.heuristic_hits += b.heuristic_hits;
    a.kth_hits += b.kth_hits;
    a.frequency_hits += b.frequency_hits;
    a.wall_ms += b.wall_ms;
}

double ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

Cpd empty_witness(const ConcisenessCertificate& cert, const RingSpec& ring) {
    std::vector<RMat> fs;
    for (uint32_t side : cert.original_shape) fs.emplace_back(side, 0, ring);
    return Cpd(ring, fs);
}

void require_field_ring(const Tensor& T) {
    if (T.ring.H != 1)
        throw UnsupportedError(
            "tensor lives over a border ring (H > 1); the field search requires "
            "H == 1 — use the border search instead");
}

} // namespace

AugmentedTensor::AugmentedTensor(Tensor base_tensor, std::vector<RMat> fixed_columns)
    : base(std::move(base_tensor)), y(std::move(fixed_columns)), tprime(base.ring, {1}) {
    require_field_ring(base);
    const uint32_t D = base.ndim();
    if (D < 2) throw ShapeError("augmented tensor needs at least 2 axes");
    if (y.size() != D - 1)
        throw ShapeError("expected one fixed-column block per axis >= 1");
    const uint32_t extra = y[0].cols;
    for (uint32_t d = 1; d < D; ++d) {
        if (y[d - 1].rows != base.shape[d] || y[d - 1].cols != extra)
            throw ShapeError("fixed-column block shape mismatch");
    }
    for (uint32_t d = 0; d < D; ++d) {
        const Mat U = rmat_to_field(unfold(base, d));
        if (mat_rank(U, base.ring.field) != base.shape[d])
            throw ShapeError("augmented tensor requires a concise base");
    }
    const FieldSpec& f = base.ring.field;
    std::vector<uint32_t> shape = base.shape;
    shape[0] += extra;
    Tensor tp(base.ring, shape);
    const uint64_t m = base.numel() / base.shape[0];
    for (uint64_t q = 0; q < base.numel(); ++q) tp.data[q] = base.data[q];
    std::vector<uint32_t> cur, nxt;
    for (uint32_t j = 0; j < extra; ++j) {
        cur.clear();
        for (uint32_t i = 0; i < base.shape[1]; ++i)
            cur.push_back(f.neg(field_value(y[0].at(i, j))));
        for (uint32_t d = 2; d < D; ++d) {
            nxt.clear();
            for (uint32_t x : cur)
                for (uint32_t i = 0; i < base.shape[d]; ++i)
                    nxt.push_back(f.mul(x, field_value(y[d - 1].at(i, j))));
            cur.swap(nxt);
        }
        for (uint64_t q = 0; q < m; ++q)
            tp.data[(base.shape[0] + j) * m + q] = Poly{cur[q]};
    }
    tprime = std::move(tp);
}

void good_pairs(const AugmentedTensor& aug, uint32_t R, const SearchConfig& cfg,
                const PairYield& yield) {
    if (aug.r() != R)
        throw ShapeError("good_pairs requires a fully assigned node (r == R)");
    const Base b = eng::base_from_tensor(aug.base);
    Aug a = eng::aug_from_blocks(b, aug.y);
    Ctx ctx = make_ctx(b, R, cfg);
    const uint32_t n0 = b.n0();
    run_good_pairs(ctx, a, [&](const uint32_t* vc) {
        std::vector<uint32_t> v(vc, vc + n0), c(vc + n0, vc + R);
        return yield(v, c);
    });
}

std::optional<Cpd> test_assignment(const AugmentedTensor& aug, uint32_t R,
                                   const SearchConfig& cfg) {
    if (aug.r() != R)
        throw ShapeError("test_assignment requires a fully assigned node (r == R)");
    const Base b = eng::base_from_tensor(aug.base);
    Aug a = eng::aug_from_blocks(b, aug.y);
    Ctx ctx = make_ctx(b, R, cfg);
    auto fac = test_node(ctx, a);
    if (!fac) return std::nullopt;
    Cpd out = cpd_from_mats(*fac, aug.base.ring);
    if (!(cpd_eval(out, aug.base.shape) == aug.base))
        throw InternalError("completion test produced a CPD that fails re-evaluation");
    return out;
}

SearchOutcome search_rank_le(const Tensor& T, uint32_t R, const SearchConfig& cfg) {
    require_field_ring(T);
    const auto t0 = std::chrono::steady_clock::now();
    SearchOutcome out;
    auto [tc, cert] = make_concise(T, /*sort_axes=*/true);
    if (tc.numel() == 0) { // zero tensor: rank 0, empty witness at any R
        out.witness = empty_witness(cert, T.ring);
        out.exhausted = false;
        out.stats.wall_ms = ms_since(t0);
        return out;
    }
    const uint32_t D = tc.ndim();
    if (R < tc.shape[0]) { // a concise tensor of rank <= R has sides <= R
        out.exhausted = true;
        out.stats.wall_ms = ms_since(t0);
        return out;
    }
    std::optional<std::vector<Mat>> fac;
    if (D == 1) {
        Mat A0(1, 1);
        A0.at(0, 0) = field_value(tc.data[0]);
        fac = std::vector<Mat>{A0};
    } else if (D == 2) {
        // Concise matrix: square and invertible, so M = sum_j M_{:,j} (x) e_j.
        const uint32_t n = tc.shape[0];
        Mat A0(n, n), A1 = Mat::identity(n);
        for (uint32_t i = 0; i < n; ++i)
            for (uint32_t j = 0; j < n; ++j)
                A0.at(i, j) = field_value(tc.at({i, j}));
        fac = std::vector<Mat>{A0, A1};
    } else {
        EngineResult er = run_engine(eng::base_from_tensor(tc), R, cfg);
        out.stats = er.stats;
        fac = std::move(er.factors);
    }
    if (fac) {
        Cpd concise_cpd = cpd_from_mats(*fac, T.ring);
        if (!(cpd_eval(concise_cpd, tc.shape) == tc))
            throw InternalError("witness fails to re-evaluate to the concise tensor");
        Cpd full = expand_cpd(cert, concise_cpd);
        if (!(cpd_eval(full, T.shape) == T))
            throw InternalError("expanded witness fails to re-evaluate to the input");
        if (full.rank() > R)
            throw InternalError("witness exceeds the requested rank bound");
        out.witness = std::move(full);
        out.exhausted = false;
    } else {
        out.exhausted = true;
    }
    out.stats.wall_ms = ms_since(t0);
    return out;
}

RankResult rank_exact(const Tensor& T, const SearchConfig& cfg) {
    require_field_ring(T);
    const auto t0 = std::chrono::steady_clock::now();
    auto [tc, cert] = make_concise(T, /*sort_axes=*/true);
    RankResult res{0, Cpd(T.ring), {}};
    if (tc.numel() == 0) {
        res.witness = empty_witness(cert, T.ring);
        res.stats.wall_ms = ms_since(t0);
        return res;
    }
    const uint32_t lo = tc.shape[0]; // axes sorted descending: the max side
    uint64_t hi = UINT64_MAX; // trivial upper bound: drop one axis, multiply the rest
    for (uint32_t d = 0; d < tc.ndim(); ++d) {
        uint64_t prod = 1;
        for (uint32_t e = 0; e < tc.ndim(); ++e) {
            if (e == d) continue;
            if (prod > (UINT64_MAX / 2) / tc.shape[e])
                prod = UINT64_MAX / 2;
            else
                prod *= tc.shape[e];
        }
        hi = std::min(hi, prod);
    }
    SearchStats acc;
    for (uint32_t R = lo;; ++R) {
        SearchOutcome o = search_rank_le(T, R, cfg);
        merge_stats(acc, o.stats);
        if (o.witness) {
            if (o.witness->rank() != R)
                throw InternalError("first feasible threshold returned a witness of "
                                    "unexpected column count");
            res.rank = R;
            res.witness = *std::move(o.witness);
            res.stats = acc;
            res.stats.wall_ms = ms_since(t0);
            return res;
        }
        if (!o.exhausted)
            throw InternalError("search returned neither witness nor exhaustion");
        if (R >= hi)
            throw InternalError("exceeded the trivial rank upper bound without a witness");
    }
}

long double log2_search_cost(const std::vector<uint32_t>& shape, uint32_t p, uint32_t R) {
    if (shape.empty()) return 0;
    const uint32_t n0 = shape[0];
    if (R < n0) return 0;
    uint64_t sum1 = 0, sum2 = 0;
    for (size_t d = 1; d < shape.size(); ++d) {
        sum1 += shape[d];
        if (d >= 2) sum2 += shape[d];
    }
    const uint64_t digits =
        static_cast<uint64_t>(R - n0) * sum1 + std::min<uint64_t>(R, sum2);
    return static_cast<long double>(digits) * std::log2(static_cast<long double>(p));
}

} // namespace cpd
