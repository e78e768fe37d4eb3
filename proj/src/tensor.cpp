#include "cpd/tensor.hpp"

#include <algorithm>

#include "cpd/errors.hpp"

namespace cpd {

Tensor::Tensor(const RingSpec& rg, std::vector<uint32_t> shp)
    : ring(rg), shape(std::move(shp)) {
    if (shape.empty()) throw ShapeError("tensor needs at least one axis");
    uint64_t n = 1;
    for (uint32_t s : shape) n *= s;
    data.assign(n, poly_zero(ring));
}

uint64_t Tensor::numel() const {
    uint64_t n = 1;
    for (uint32_t s : shape) n *= s;
    return n;
}

uint64_t Tensor::flat(const std::vector<uint32_t>& idx) const {
    if (idx.size() != shape.size()) throw ShapeError("index arity mismatch");
    uint64_t f = 0;
    for (size_t d = 0; d < shape.size(); ++d) {
        if (idx[d] >= shape[d]) throw ShapeError("index out of range");
        f = f * shape[d] + idx[d];
    }
    return f;
}

Poly& Tensor::at(std::initializer_list<uint32_t> idx) {
    return data[flat(std::vector<uint32_t>(idx))];
}

const Poly& Tensor::at(std::initializer_list<uint32_t> idx) const {
    return data[flat(std::vector<uint32_t>(idx))];
}

bool Tensor::is_zero() const {
    return std::all_of(data.begin(), data.end(),
                       [](const Poly& e) { return poly_is_zero(e); });
}

bool Tensor::operator==(const Tensor& o) const {
    return ring == o.ring && shape == o.shape && data == o.data;
}

Tensor contract(const RMat& M, uint32_t axis, const Tensor& T) {
    if (axis >= T.ndim()) throw ShapeError("contract: axis out of range");
    if (M.cols != T.shape[axis]) throw ShapeError("contract: M has wrong column count");
    const RingSpec& ring = T.ring;

    std::vector<uint32_t> out_shape = T.shape;
    out_shape[axis] = M.rows;
    Tensor out(ring, out_shape);

    // Split the flat index as (outer, i_axis, inner): inner strides over the
    // axes after `axis`, outer over the axes before it.
    uint64_t inner = 1;
    for (uint32_t d = axis + 1; d < T.ndim(); ++d) inner *= T.shape[d];
    const uint64_t outer =
        T.numel() == 0 ? 0 : T.numel() / (inner * T.shape[axis]);

    for (uint64_t o = 0; o < outer; ++o) {
        for (uint32_t ip = 0; ip < M.rows; ++ip) {
            for (uint32_t i = 0; i < T.shape[axis]; ++i) {
                const Poly& m = M.at(ip, i);
                if (poly_is_zero(m)) continue;
                const uint64_t src = (o * T.shape[axis] + i) * inner;
                const uint64_t dst = (o * M.rows + ip) * inner;
                for (uint64_t in = 0; in < inner; ++in) {
                    out.data[dst + in] = poly_add(
                        out.data[dst + in],
                        poly_mul(m, T.data[src + in], ring), ring);
                }
            }
        }
    }
    return out;
}

Tensor cpd_eval(const Cpd& cpd, const std::vector<uint32_t>& shape) {
    const RingSpec& ring = cpd.ring;
    if (cpd.factors.size() != shape.size())
        throw ShapeError("cpd_eval: factor count != tensor order");
    const uint32_t R = cpd.rank();
    for (size_t d = 0; d < shape.size(); ++d) {
        if (cpd.factors[d].rows != shape[d])
            throw ShapeError("cpd_eval: factor row count != shape");
        if (cpd.factors[d].cols != R)
            throw ShapeError("cpd_eval: factors disagree on rank");
    }

    Tensor out(ring, shape);
    const uint64_t n = out.numel();
    std::vector<uint32_t> idx(shape.size());
    for (uint64_t f = 0; f < n; ++f) {
        uint64_t rem = f;
        for (size_t d = shape.size(); d-- > 0;) {
            idx[d] = static_cast<uint32_t>(rem % shape[d]);
            rem /= shape[d];
        }
        Poly acc = poly_zero(ring);
        for (uint32_t r = 0; r < R; ++r) {
            Poly term = cpd.factors[0].at(idx[0], r);
            for (size_t d = 1; d < shape.size(); ++d)
                term = poly_mul(term, cpd.factors[d].at(idx[d], r), ring);
            acc = poly_add(acc, term, ring);
        }
        out.data[f] = acc;
    }
    return out;
}

RMat unfold(const Tensor& T, uint32_t axis) {
    if (axis >= T.ndim()) throw ShapeError("unfold: axis out of range");
    const uint32_t n_axis = T.shape[axis];
    const uint64_t total = T.numel();
    const uint64_t cols = n_axis == 0 ? 0 : total / n_axis;

    RMat M(n_axis, static_cast<uint32_t>(cols), T.ring);
    if (cols == 0) return M;

    uint64_t inner = 1;
    for (uint32_t d = axis + 1; d < T.ndim(); ++d) inner *= T.shape[d];
    const uint64_t outer = total / (inner * n_axis);

    // Column index = outer * inner + in: remaining axes in increasing order,
    // row-major, which is exactly how they are laid out around axis `axis`.
    for (uint64_t o = 0; o < outer; ++o)
        for (uint32_t i = 0; i < n_axis; ++i)
            for (uint64_t in = 0; in < inner; ++in)
                M.at(i, static_cast<uint32_t>(o * inner + in)) =
                    T.data[(o * n_axis + i) * inner + in];
    return M;
}

Tensor tensor_kron(const Tensor& S, const Tensor& T) {
    if (S.ring != T.ring) throw ShapeError("tensor_kron: ring mismatch");
    if (S.ndim() != T.ndim()) throw ShapeError("tensor_kron: order mismatch");
    const uint32_t D = S.ndim();

    std::vector<uint32_t> shape(D);
    for (uint32_t d = 0; d < D; ++d) shape[d] = S.shape[d] * T.shape[d];
    Tensor out(S.ring, shape);

    std::vector<uint32_t> is(D), it(D), idx(D);
    const uint64_t ns = S.numel(), nt = T.numel();
    for (uint64_t fs = 0; fs < ns; ++fs) {
        uint64_t rem = fs;
        for (uint32_t d = D; d-- > 0;) { is[d] = static_cast<uint32_t>(rem % S.shape[d]); rem /= S.shape[d]; }
        if (poly_is_zero(S.data[fs])) continue;
        for (uint64_t ft = 0; ft < nt; ++ft) {
            rem = ft;
            for (uint32_t d = D; d-- > 0;) { it[d] = static_cast<uint32_t>(rem % T.shape[d]); rem /= T.shape[d]; }
            for (uint32_t d = 0; d < D; ++d) idx[d] = is[d] * T.shape[d] + it[d];
            out.data[out.flat(idx)] = poly_mul(S.data[fs], T.data[ft], S.ring);
        }
    }
    return out;
}

Tensor permute_axes(const Tensor& T, const std::vector<uint32_t>& perm) {
    const uint32_t D = T.ndim();
    if (perm.size() != D) throw ShapeError("permute_axes: perm arity mismatch");
    std::vector<bool> seen(D, false);
    for (uint32_t p : perm) {
        if (p >= D || seen[p]) throw ShapeError("permute_axes: not a permutation");
        seen[p] = true;
    }
    std::vector<uint32_t> shape(D);
    for (uint32_t d = 0; d < D; ++d) shape[d] = T.shape[perm[d]];
    Tensor out(T.ring, shape);

    std::vector<uint32_t> oidx(D), iidx(D);
    const uint64_t n = out.numel();
    for (uint64_t f = 0; f < n; ++f) {
        uint64_t rem = f;
        for (uint32_t d = D; d-- > 0;) { oidx[d] = static_cast<uint32_t>(rem % shape[d]); rem /= shape[d]; }
        for (uint32_t d = 0; d < D; ++d) iidx[perm[d]] = oidx[d];
        out.data[f] = T.data[T.flat(iidx)];
    }
    return out;
}

Tensor take_slices(const Tensor& T, uint32_t axis, uint32_t count) {
    if (axis >= T.ndim()) throw ShapeError("take_slices: axis out of range");
    if (count > T.shape[axis]) throw ShapeError("take_slices: count too large");
    std::vector<uint32_t> shape = T.shape;
    shape[axis] = count;
    Tensor out(T.ring, shape);

    uint64_t inner = 1;
    for (uint32_t d = axis + 1; d < T.ndim(); ++d) inner *= T.shape[d];
    const uint64_t outer =
        T.numel() == 0 ? 0 : T.numel() / (inner * T.shape[axis]);
    for (uint64_t o = 0; o < outer; ++o)
        for (uint32_t i = 0; i < count; ++i)
            for (uint64_t in = 0; in < inner; ++in)
                out.data[(o * count + i) * inner + in] =
                    T.data[(o * T.shape[axis] + i) * inner + in];
    return out;
}

Tensor mm_tensor(uint32_t m, uint32_t k, uint32_t n, const RingSpec& ring) {
    if (m < 1 || k < 1 || n < 1) throw ShapeError("mm_tensor: sides must be >= 1");
    Tensor T(ring, {m * k, k * n, n * m});
    for (uint32_t i = 0; i < m; ++i)
        for (uint32_t j = 0; j < k; ++j)
            for (uint32_t l = 0; l < n; ++l)
                T.at({i * k + j, j * n + l, l * m + i}) = poly_one(ring);
    return T;
}

namespace {

Tensor from_slices(const RingSpec& ring,
                   const std::vector<std::vector<std::vector<uint32_t>>>& slices) {
    const uint32_t n0 = static_cast<uint32_t>(slices.size());
    const uint32_t n1 = static_cast<uint32_t>(slices[0].size());
    const uint32_t n2 = static_cast<uint32_t>(slices[0][0].size());
    Tensor T(ring, {n0, n1, n2});
    for (uint32_t i = 0; i < n0; ++i)
        for (uint32_t j = 0; j < n1; ++j)
            for (uint32_t l = 0; l < n2; ++l)
                T.at({i, j, l}) = poly_const(slices[i][j][l] % ring.field.p, ring);
    return T;
}

Tensor gen_wstate(const RingSpec& ring) {
    return from_slices(ring, {{{1, 0}, {0, 0}}, {{0, 1}, {1, 0}}});
}

Tensor gen_addmod2(const RingSpec& ring) {
    return from_slices(ring, {{{0, 1}, {1, 0}}, {{1, 0}, {0, 1}}});
}

Tensor gen_polymul(uint32_t n, const RingSpec& ring) {
    if (n < 1) throw ShapeError("polymul: n must be >= 1");
    Tensor T(ring, {2 * n - 1, n, n});
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < n; ++j)
            T.at({i + j, i, j}) = poly_one(ring);
    return T;
}

Tensor gen_diagshift(uint32_t n, const RingSpec& ring) {
    if (n < 1) throw ShapeError("diagshift: n must be >= 1");
    Tensor T(ring, {n, n, n});
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < n; ++j)
            if (i + j < n) T.at({i + j, i, j}) = poly_one(ring);
    return T;
}

Tensor gen_lm2(uint32_t k, const RingSpec& ring) {
    if (k < 1 || k > 20) throw ShapeError("lm2: k out of range");
    const uint32_t side = 1u << k;
    Tensor T(ring, {k + 1, side, side});
    for (uint32_t i = 0; i <= k; ++i) {
        const uint32_t s = (1u << i) - 1; // antidiagonal a + b = 2^i - 1
        for (uint32_t a = 0; a < side && a <= s; ++a) {
            const uint32_t b = s - a;
            if (b < side) T.at({i, a, b}) = poly_one(ring);
        }
    }
    return T;
}

Tensor gen_lm3(uint32_t k, const RingSpec& ring) {
    if (k < 1 || k > 20) throw ShapeError("lm3: k out of range");
    const uint32_t side = 1u << k;
    if (k + 1 > side) throw ShapeError("lm3: k out of range");
    Tensor T(ring, {side, side, side});
    Tensor base = gen_lm2(k, ring);
    for (uint32_t i = 0; i <= k; ++i)
        for (uint32_t a = 0; a < side; ++a)
            for (uint32_t b = 0; b < side; ++b)
                T.at({i, a, b}) = base.at({i, a, b});
    for (uint32_t i = k + 1; i < side; ++i)
        T.at({i, side - 1, side - 1 - (i - k)}) = poly_one(ring);
    return T;
}

Tensor gen_counterexample3(const RingSpec& ring) {
    return from_slices(ring, {{{1, 1, 0}, {0, 1, 0}, {0, 0, 0}},
                              {{0, 0, 0}, {0, 1, 1}, {0, 0, 1}},
                              {{1, 0, 0}, {0, 0, 0}, {1, 0, 1}}});
}

Tensor gen_t1(const RingSpec& ring) {
    return from_slices(ring, {{{1, 0, 0}, {0, 0, 0}, {0, 0, 0}},
                              {{1, 1, 0}, {0, 0, 0}, {0, 0, 0}},
                              {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}}});
}

Tensor gen_t2(const RingSpec& ring) {
    return from_slices(ring, {{{1, 0, 0}, {0, 0, 0}, {0, 0, 0}},
                              {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
                              {{0, 0, 1}, {0, 0, 1}, {1, 1, 0}}});
}

} // namespace

Tensor generate(const std::string& family, const std::vector<uint32_t>& params,
                const RingSpec& ring) {
    auto want = [&](size_t n) {
        if (params.size() != n)
            throw ShapeError("family '" + family + "' takes " + std::to_string(n) +
                             " parameter(s)");
    };
    if (family == "wstate") { want(0); return gen_wstate(ring); }
    if (family == "addmod2") { want(0); return gen_addmod2(ring); }
    if (family == "polymul") { want(1); return gen_polymul(params[0], ring); }
    if (family == "diagshift") { want(1); return gen_diagshift(params[0], ring); }
    if (family == "lm2") { want(1); return gen_lm2(params[0], ring); }
    if (family == "lm3") { want(1); return gen_lm3(params[0], ring); }
    if (family == "counterexample3") { want(0); return gen_counterexample3(ring); }
    if (family == "t1") { want(0); return gen_t1(ring); }
    if (family == "t2") { want(0); return gen_t2(ring); }
    if (family == "wstate_sq") {
        want(0);
        Tensor w = gen_wstate(ring);
        return tensor_kron(w, w);
    }
    if (family == "mm") { want(3); return mm_tensor(params[0], params[1], params[2], ring); }
    throw UnknownFamilyError("unknown tensor family '" + family + "'");
}

} // namespace cpd
