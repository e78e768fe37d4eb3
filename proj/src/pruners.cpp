#include "cpd/pruners.hpp"

#include <algorithm>

#include "cpd/errors.hpp"
#include "engine_internal.hpp"

namespace cpd {

namespace eng {

namespace {

uint64_t pow_u64(uint64_t b, uint32_t e) {
    uint64_t r = 1;
    for (uint32_t i = 0; i < e; ++i) {
        if (r > (uint64_t{1} << 62) / b)
            throw BudgetError("pruner enumeration space exceeds 2^62");
        r *= b;
    }
    return r;
}

uint32_t slice_rank(const Base& b, const Odometer& od, std::vector<uint32_t>& scratch) {
    if (b.packed) return rank_packed(od.psum.data(), b.n1);
    return rank_field(od.sum.data(), b.shape[1], b.shape[2], b.field, scratch);
}

uint64_t binom_u64(uint32_t n, uint32_t k) {
    if (k > n) return 0;
    uint64_t r = 1;
    for (uint32_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

// det of a k x k matrix given row-major (destroys its copy).
uint32_t det_field(std::vector<uint32_t> a, uint32_t k, const FieldSpec& f) {
    uint32_t det = 1;
    for (uint32_t c = 0; c < k; ++c) {
        uint32_t pr = c;
        while (pr < k && a[pr * k + c] == 0) ++pr;
        if (pr == k) return 0;
        if (pr != c) {
            for (uint32_t j = c; j < k; ++j) std::swap(a[pr * k + j], a[c * k + j]);
            det = f.neg(det);
        }
        const uint32_t pivot = a[c * k + c];
        det = f.mul(det, pivot);
        const uint32_t inv = f.inv(pivot);
        for (uint32_t i = c + 1; i < k; ++i) {
            const uint32_t x = a[i * k + c];
            if (x == 0) continue;
            const uint32_t s = f.mul(x, inv);
            for (uint32_t j = c; j < k; ++j)
                a[i * k + j] = f.sub(a[i * k + j], f.mul(s, a[c * k + j]));
        }
    }
    return det;
}

} // namespace

bool rref_prune_impl(const Aug& aug, uint32_t R) {
    const Base& b = *aug.base;
    const uint32_t r = aug.r, n0 = b.n0();
    const uint32_t threshold = R - r + 1;
    Odometer od;
    od.init(aug, 0, r);
    PrefixBasis pb;
    pb.init(b.field, n0);
    std::vector<uint32_t> scratch;
    for (bool more = true; more; more = od.step()) {
        if (slice_rank(b, od, scratch) > threshold) continue;
        if (pb.insert(od.digits.data()) && pb.rank() == n0) return true;
    }
    return false;
}

bool lask_prune_impl(const Aug& aug, uint32_t R) {
    const Base& b = *aug.base;
    const uint32_t r = aug.r, n0 = b.n0(), k2 = r - n0, p = b.field.p;
    const uint64_t pn0 = pow_u64(p, n0);
    const uint64_t threshold = static_cast<uint64_t>(R - k2) * (pn0 - pn0 / p);
    Odometer outer;
    outer.init(aug, 0, n0);
    Odometer inner;
    std::vector<uint32_t> scratch;
    uint64_t acc = 0;
    for (bool more = true; more; more = outer.step()) {
        inner.init_offset(aug, n0, k2, outer.sum, outer.psum);
        uint32_t best = UINT32_MAX;
        for (bool im = true; im; im = inner.step()) {
            best = std::min(best, slice_rank(b, inner, scratch));
            if (best == 0) break;
        }
        acc += best;
        if (acc > threshold) return false;
    }
    return true;
}

std::optional<std::vector<Mat>> rref_heuristic_impl(const Aug& aug, uint32_t R) {
    const Base& b = *aug.base;
    const FieldSpec& f = b.field;
    const uint32_t r = aug.r, n0 = b.n0(), k2 = r - n0, p = f.p;
    const uint32_t n1 = b.shape[1], n2 = b.shape[2];
    pow_u64(p, r); // reject absurd list sizes before allocating
    // All v in F^{1xr}, ordered by (contraction rank, value as base-p integer).
    struct Entry {
        uint32_t rank;
        uint64_t code;
    };
    std::vector<Entry> list;
    {
        Odometer od;
        od.init(aug, 0, r);
        std::vector<uint32_t> scratch;
        uint64_t code = 0;
        for (bool more = true; more; more = od.step(), ++code)
            list.push_back({slice_rank(b, od, scratch), code});
    }
    std::sort(list.begin(), list.end(), [](const Entry& a, const Entry& e) {
        return a.rank != e.rank ? a.rank < e.rank : a.code < e.code;
    });
    PrefixBasis pb;
    pb.init(f, n0);
    std::vector<std::vector<uint32_t>> qrows;
    std::vector<uint32_t> digits(r);
    uint64_t total = k2;
    for (const Entry& e : list) {
        uint64_t c = e.code;
        for (uint32_t t = r; t-- > 0;) {
            digits[t] = static_cast<uint32_t>(c % p);
            c /= p;
        }
        if (!pb.insert(digits.data())) continue;
        qrows.push_back(digits);
        total += e.rank;
        if (qrows.size() == n0) break;
    }
    if (qrows.size() < n0)
        throw InternalError("greedy accumulation failed to span the prefix space");
    if (total > R) return std::nullopt;

    // Assemble: T = sum_i Qpre^{-1} e_i (x) slice_i + mixing of the fixed
    // columns, where each corrected slice contributes its rank factorization.
    Mat qpre(n0, n0), qsuf(n0, k2);
    for (uint32_t i = 0; i < n0; ++i) {
        for (uint32_t j = 0; j < n0; ++j) qpre.at(i, j) = qrows[i][j];
        for (uint32_t j = 0; j < k2; ++j) qsuf.at(i, j) = qrows[i][n0 + j];
    }
    const Mat qinv = mat_invert(qpre, f);
    const Mat w = mat_mul(qinv, qsuf, f);
    const uint32_t cols = static_cast<uint32_t>(total);
    Mat A0(n0, cols), A1(n1, cols), A2(n2, cols);
    uint32_t cc = 0;
    std::vector<uint32_t> s(b.m);
    for (uint32_t i = 0; i < n0; ++i) {
        std::fill(s.begin(), s.end(), 0u);
        for (uint32_t k = 0; k < r; ++k) {
            const uint32_t coef = qrows[i][k];
            if (coef == 0) continue;
            const uint32_t* sl = aug.slice(k);
            for (uint64_t q = 0; q < b.m; ++q) s[q] = f.add(s[q], f.mul(coef, sl[q]));
        }
        Mat mi(n1, n2);
        for (uint32_t a = 0; a < n1; ++a)
            for (uint32_t c2 = 0; c2 < n2; ++c2) mi.at(a, c2) = s[a * n2 + c2];
        const RrefResult rr = rref(mi, f);
        const Mat binv = mat_invert(rr.Q, f);
        for (uint32_t u = 0; u < rr.rank; ++u, ++cc) {
            for (uint32_t a = 0; a < n0; ++a) A0.at(a, cc) = qinv.at(a, i);
            for (uint32_t a = 0; a < n1; ++a) A1.at(a, cc) = binv.at(a, u);
            for (uint32_t a = 0; a < n2; ++a) A2.at(a, cc) = rr.R.at(u, a);
        }
    }
    for (uint32_t j = 0; j < k2; ++j, ++cc) {
        for (uint32_t a = 0; a < n0; ++a) A0.at(a, cc) = w.at(a, j);
        for (uint32_t a = 0; a < n1; ++a) A1.at(a, cc) = aug.tuples[j][a];
        for (uint32_t a = 0; a < n2; ++a) A2.at(a, cc) = aug.tuples[j][n1 + a];
    }
    if (cc != cols) throw InternalError("heuristic assembly column count mismatch");
    return std::vector<Mat>{A0, A1, A2};
}

bool kth_order_rref_impl(const Aug& aug, uint32_t R, uint32_t k) {
    const Base& b = *aug.base;
    const FieldSpec& f = b.field;
    const uint32_t n0 = b.n0(), n1 = b.shape[1], n2 = b.shape[2], p = f.p;
    if (aug.r != n0) throw InternalError("order-k streak test requires r == n0");
    const int64_t threshold = static_cast<int64_t>(R) - n0 + k;
    const uint64_t target = binom_u64(n0, k);
    uint64_t wedge_dim = 1;
    for (uint32_t i = 0; i < k; ++i) wedge_dim *= n0;
    pow_u64(p, k * n0); // reject absurd enumerations up front
    PrefixBasis basis;
    basis.init(f, static_cast<uint32_t>(wedge_dim));
    std::vector<uint32_t> digits(static_cast<size_t>(k) * n0, 0);
    std::vector<uint32_t> stacked(static_cast<size_t>(n1) * k * n2);
    std::vector<uint32_t> wedge(wedge_dim), scratch, minor(static_cast<size_t>(k) * k);
    for (;;) {
        // Stacked contraction [v_0 x_0 T | ... | v_{k-1} x_0 T] as n1 x (k*n2).
        std::fill(stacked.begin(), stacked.end(), 0u);
        for (uint32_t t = 0; t < k; ++t)
            for (uint32_t i0 = 0; i0 < n0; ++i0) {
                const uint32_t coef = digits[t * n0 + i0];
                if (coef == 0) continue;
                const uint32_t* sl = aug.slice(i0);
                for (uint32_t a = 0; a < n1; ++a)
                    for (uint32_t c = 0; c < n2; ++c) {
                        uint32_t& e = stacked[a * (k * n2) + t * n2 + c];
                        e = f.add(e, f.mul(coef, sl[a * n2 + c]));
                    }
            }
        const bool small = threshold >= 0 &&
                           rank_field(stacked.data(), n1, k * n2, f, scratch) <=
                               static_cast<uint64_t>(threshold);
        if (small) {
            // wedge entry at (i_0,...,i_{k-1}) = det of (v_s[i_t])_{s,t}
            std::vector<uint32_t> idx(k, 0);
            for (uint64_t q = 0; q < wedge_dim; ++q) {
                for (uint32_t s2 = 0; s2 < k; ++s2)
                    for (uint32_t t = 0; t < k; ++t)
                        minor[s2 * k + t] = digits[s2 * n0 + idx[t]];
                wedge[q] = det_field(minor, k, f);
                for (uint32_t t = k; t-- > 0;) {
                    if (++idx[t] < n0) break;
                    idx[t] = 0;
                }
            }
            if (basis.insert(wedge.data()) && basis.rank() == target) return true;
        }
        bool advanced = false;
        for (uint32_t t = static_cast<uint32_t>(digits.size()); t-- > 0;) {
            if (++digits[t] < p) {
                advanced = true;
                break;
            }
            digits[t] = 0;
        }
        if (!advanced) break;
    }
    return target == 0;
}

bool frequency_impl(const Aug& aug, uint32_t R) {
    const Base& b = *aug.base;
    const uint32_t n0 = b.n0(), p = b.field.p;
    if (aug.r != n0) throw InternalError("frequency test requires r == n0");
    const uint32_t maxrank = std::min(b.shape[1], b.shape[2]);
    std::vector<uint64_t> hist(maxrank + 1, 0);
    Odometer od;
    od.init(aug, 0, n0);
    std::vector<uint32_t> scratch;
    for (bool more = true; more; more = od.step()) ++hist[slice_rank(b, od, scratch)];
    for (uint32_t k = 1; k <= n0; ++k) {
        const int64_t threshold = static_cast<int64_t>(R) - n0 + k;
        uint64_t count = 0;
        for (uint32_t t = 0; t <= maxrank; ++t)
            if (static_cast<int64_t>(t) <= threshold) count += hist[t];
        if (count < pow_u64(p, k)) return false;
    }
    return true;
}

} // namespace eng

namespace {

void require_3d_field(const Tensor& T, const char* what) {
    if (T.ring.H != 1)
        throw UnsupportedError(std::string(what) + " requires a field tensor (H == 1)");
    if (T.ndim() != 3)
        throw UnsupportedError(std::string(what) + " supports D == 3 only");
}

void check_levels(const AugmentedTensor& aug, uint32_t r, uint32_t R, const char* what) {
    require_3d_field(aug.base, what);
    if (r != aug.r())
        throw ShapeError(std::string(what) + ": r does not match the fixed columns");
    if (r < aug.n0() || r > R)
        throw ShapeError(std::string(what) + ": requires n_0 <= r <= R");
}

} // namespace

bool rref_prune(const AugmentedTensor& aug, uint32_t r, uint32_t R) {
    check_levels(aug, r, R, "rref_prune");
    const eng::Base b = eng::base_from_tensor(aug.base);
    const eng::Aug a = eng::aug_from_blocks(b, aug.y);
    return eng::rref_prune_impl(a, R);
}

bool lask_prune(const AugmentedTensor& aug, uint32_t r, uint32_t R) {
    check_levels(aug, r, R, "lask_prune");
    const eng::Base b = eng::base_from_tensor(aug.base);
    const eng::Aug a = eng::aug_from_blocks(b, aug.y);
    return eng::lask_prune_impl(a, R);
}

std::optional<Cpd> rref_heuristic(const AugmentedTensor& aug, uint32_t r, uint32_t R) {
    check_levels(aug, r, R, "rref_heuristic");
    const eng::Base b = eng::base_from_tensor(aug.base);
    const eng::Aug a = eng::aug_from_blocks(b, aug.y);
    auto fac = eng::rref_heuristic_impl(a, R);
    if (!fac) return std::nullopt;
    std::vector<RMat> fs;
    for (const Mat& M : *fac) fs.push_back(rmat_from_field(M, aug.base.ring));
    Cpd out(aug.base.ring, fs);
    if (!(cpd_eval(out, aug.base.shape) == aug.base))
        throw InternalError("heuristic CPD fails re-evaluation");
    return out;
}

bool kth_order_rref_prune(const Tensor& T, uint32_t k, uint32_t R) {
    require_3d_field(T, "kth_order_rref_prune");
    if (k < 1 || k > T.shape[0])
        throw UnsupportedError("kth_order_rref_prune requires 1 <= k <= n_0");
    for (uint32_t d = 0; d < 3; ++d) {
        const Mat U = rmat_to_field(unfold(T, d));
        if (mat_rank(U, T.ring.field) != T.shape[d])
            throw ShapeError("kth_order_rref_prune requires a concise tensor");
    }
    const eng::Base b = eng::base_from_tensor(T);
    const eng::Aug a(b);
    return eng::kth_order_rref_impl(a, R, k);
}

bool frequency_prune(const Tensor& T, uint32_t R) {
    require_3d_field(T, "frequency_prune");
    const eng::Base b = eng::base_from_tensor(T);
    const eng::Aug a(b);
    return eng::frequency_impl(a, R);
}

} // namespace cpd
