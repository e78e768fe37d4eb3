#include "engine_internal.hpp"

#include <algorithm>

#include "cpd/errors.hpp"

namespace cpd::eng {

namespace {

uint64_t prod_tail(const std::vector<uint32_t>& shape) {
    uint64_t m = 1;
    for (size_t d = 1; d < shape.size(); ++d) m *= shape[d];
    return m;
}

void pack_slice(const uint32_t* s, uint32_t n1, uint32_t n2, uint64_t* out) {
    for (uint32_t i = 0; i < n1; ++i) {
        uint64_t w = 0;
        for (uint32_t j = 0; j < n2; ++j)
            if (s[i * n2 + j]) w |= uint64_t{1} << j;
        out[i] = w;
    }
}

} // namespace

Base::Base(const FieldSpec& f, std::vector<uint32_t> shp, std::vector<uint32_t> data)
    : field(f), shape(std::move(shp)), a(std::move(data)) {
    if (shape.empty()) throw ShapeError("engine tensor needs at least one axis");
    m = prod_tail(shape);
    if (a.size() != static_cast<uint64_t>(shape[0]) * m)
        throw ShapeError("engine tensor data size mismatch");
    if (field.p == 2 && shape.size() == 3 && shape[2] <= 64) {
        packed = true;
        n1 = shape[1];
        n2 = shape[2];
    }
}

uint32_t Base::tuple_digits() const {
    uint32_t t = 0;
    for (size_t d = 1; d < shape.size(); ++d) t += shape[d];
    return t;
}

Aug::Aug(const Base& b) : base(&b), r(b.n0()) {
    a.assign(b.a.begin(), b.a.end());
    if (b.packed) {
        rows.resize(static_cast<size_t>(r) * b.n1);
        for (uint32_t i = 0; i < r; ++i)
            pack_slice(slice(i), b.n1, b.n2, rows.data() + static_cast<size_t>(i) * b.n1);
    }
}

void Aug::push_tuple(const std::vector<uint32_t>& tuple) {
    const Base& b = *base;
    const FieldSpec& f = b.field;
    // New slice = -(y_1 (x) ... (x) y_{D-1}) built by expanding one axis at a
    // time: start with the negated y_1 digits, then multiply in each later
    // factor's digits.
    std::vector<uint32_t> cur;
    size_t off = 0;
    cur.reserve(b.m);
    for (uint32_t i = 0; i < b.shape[1]; ++i) cur.push_back(f.neg(tuple[off + i]));
    off += b.shape[1];
    std::vector<uint32_t> next;
    for (size_t d = 2; d < b.shape.size(); ++d) {
        const uint32_t nd = b.shape[d];
        next.clear();
        next.reserve(cur.size() * nd);
        for (uint32_t x : cur)
            for (uint32_t i = 0; i < nd; ++i) next.push_back(f.mul(x, tuple[off + i]));
        cur.swap(next);
        off += nd;
    }
    a.insert(a.end(), cur.begin(), cur.end());
    if (b.packed) {
        rows.resize(rows.size() + b.n1);
        pack_slice(a.data() + static_cast<size_t>(r) * b.m, b.n1, b.n2,
                   rows.data() + static_cast<size_t>(r) * b.n1);
    }
    tuples.push_back(tuple);
    ++r;
}

void Aug::pop_tuple() {
    const Base& b = *base;
    --r;
    a.resize(static_cast<size_t>(r) * b.m);
    if (b.packed) rows.resize(static_cast<size_t>(r) * b.n1);
    tuples.pop_back();
}

Mat Aug::y_block(uint32_t d) const {
    const Base& b = *base;
    uint32_t off = 0;
    for (uint32_t e = 1; e < d; ++e) off += b.shape[e];
    Mat y(b.shape[d], static_cast<uint32_t>(tuples.size()));
    for (uint32_t j = 0; j < y.cols; ++j)
        for (uint32_t i = 0; i < y.rows; ++i) y.at(i, j) = tuples[j][off + i];
    return y;
}

void Odometer::init(const Aug& aug, uint32_t first, uint32_t count) {
    const Base& b = *aug.base;
    p = b.field.p;
    k = count;
    m = b.m;
    slices = aug.a.data() + static_cast<size_t>(first) * b.m;
    digits.assign(k, 0);
    packed = b.packed;
    if (packed) {
        words = b.n1;
        pslices = aug.rows.data() + static_cast<size_t>(first) * b.n1;
        psum.assign(words, 0);
        sum.clear();
    } else {
        sum.assign(m, 0);
    }
}

void Odometer::init_offset(const Aug& aug, uint32_t first, uint32_t count,
                           const std::vector<uint32_t>& sum0,
                           const std::vector<uint64_t>& psum0) {
    init(aug, first, count);
    if (packed)
        psum = psum0;
    else
        sum = sum0;
}

bool Odometer::step() {
    // Incrementing digit i always adds slice i once; after p consecutive adds
    // the contribution is p * slice = 0, so a wrap needs no correction.
    for (int32_t pos = static_cast<int32_t>(k) - 1; pos >= 0; --pos) {
        if (packed) {
            const uint64_t* s = pslices + static_cast<size_t>(pos) * words;
            for (uint32_t w = 0; w < words; ++w) psum[w] ^= s[w];
        } else {
            const uint32_t* s = slices + static_cast<size_t>(pos) * m;
            for (uint64_t q = 0; q < m; ++q) {
                uint32_t v = sum[q] + s[q];
                sum[q] = v >= p ? v - p : v;
            }
        }
        if (++digits[pos] < p) return true;
        digits[pos] = 0;
    }
    return false;
}

uint32_t rank_field(const uint32_t* data, uint32_t rows, uint32_t cols,
                    const FieldSpec& f, std::vector<uint32_t>& scratch) {
    scratch.assign(data, data + static_cast<size_t>(rows) * cols);
    uint32_t rank = 0;
    for (uint32_t c = 0; c < cols && rank < rows; ++c) {
        uint32_t pr = rank;
        while (pr < rows && scratch[static_cast<size_t>(pr) * cols + c] == 0) ++pr;
        if (pr == rows) continue;
        if (pr != rank)
            for (uint32_t j = c; j < cols; ++j)
                std::swap(scratch[static_cast<size_t>(pr) * cols + j],
                          scratch[static_cast<size_t>(rank) * cols + j]);
        const uint32_t inv = f.inv(scratch[static_cast<size_t>(rank) * cols + c]);
        for (uint32_t i = rank + 1; i < rows; ++i) {
            const uint32_t x = scratch[static_cast<size_t>(i) * cols + c];
            if (x == 0) continue;
            const uint32_t s = f.mul(x, inv);
            for (uint32_t j = c; j < cols; ++j) {
                uint32_t& e = scratch[static_cast<size_t>(i) * cols + j];
                e = f.sub(e, f.mul(s, scratch[static_cast<size_t>(rank) * cols + j]));
            }
        }
        ++rank;
    }
    return rank;
}

uint32_t rank_packed(const uint64_t* rows, uint32_t nrows) {
    Gf2Basis b;
    b.clear();
    for (uint32_t i = 0; i < nrows; ++i) b.insert(rows[i]);
    return b.rank;
}

bool rank1_factors(const uint32_t* s, const std::vector<uint32_t>& rest,
                   const FieldSpec& f,
                   std::vector<std::vector<uint32_t>>* factors) {
    const size_t E = rest.size();
    uint64_t total = 1;
    for (uint32_t n : rest) total *= n;
    uint64_t anchor = total;
    for (uint64_t q = 0; q < total; ++q)
        if (s[q] != 0) {
            anchor = q;
            break;
        }
    if (anchor == total) { // zero slice
        if (factors) {
            factors->resize(E);
            for (size_t e = 0; e < E; ++e) (*factors)[e].assign(rest[e], 0);
        }
        return true;
    }
    // Strides (row-major) and the anchor's multi-index.
    std::vector<uint64_t> stride(E, 1);
    for (size_t e = E; e-- > 1;) stride[e - 1] = stride[e] * rest[e];
    std::vector<uint32_t> pi(E);
    {
        uint64_t q = anchor;
        for (size_t e = 0; e < E; ++e) {
            pi[e] = static_cast<uint32_t>(q / stride[e]);
            q %= stride[e];
        }
    }
    const uint32_t s0 = s[anchor];
    // Fibers through the anchor, one per axis.
    std::vector<std::vector<uint32_t>> fib(E);
    for (size_t e = 0; e < E; ++e) {
        fib[e].resize(rest[e]);
        const uint64_t baseq = anchor - pi[e] * stride[e];
        for (uint32_t i = 0; i < rest[e]; ++i) fib[e][i] = s[baseq + i * stride[e]];
    }
    // s has rank <= 1 iff s * s0^(E-1) equals the outer product of the fibers.
    uint32_t scale = 1;
    for (size_t e = 0; e + 1 < E; ++e) scale = f.mul(scale, s0);
    std::vector<uint32_t> idx(E, 0);
    for (uint64_t q = 0; q < total; ++q) {
        uint32_t prod = 1;
        for (size_t e = 0; e < E; ++e) prod = f.mul(prod, fib[e][idx[e]]);
        if (f.mul(s[q], scale) != prod) return false;
        for (size_t e = E; e-- > 0;) {
            if (++idx[e] < rest[e]) break;
            idx[e] = 0;
        }
    }
    if (factors) {
        factors->resize(E);
        const uint32_t unscale = f.inv(scale);
        (*factors)[0].resize(rest[0]);
        for (uint32_t i = 0; i < rest[0]; ++i) (*factors)[0][i] = f.mul(fib[0][i], unscale);
        for (size_t e = 1; e < E; ++e) (*factors)[e] = fib[e];
    }
    return true;
}

bool rank1_packed(const uint64_t* rows, uint32_t n1) {
    uint64_t w = 0;
    for (uint32_t i = 0; i < n1; ++i) {
        if (rows[i] == 0) continue;
        if (w == 0)
            w = rows[i];
        else if (rows[i] != w)
            return false;
    }
    return true;
}

Base base_from_tensor(const Tensor& T) {
    if (T.ring.H != 1) throw UnsupportedError("engine tensors must live over a field");
    std::vector<uint32_t> data(T.data.size());
    for (size_t q = 0; q < T.data.size(); ++q)
        data[q] = T.data[q].empty() ? 0 : T.data[q][0];
    return Base(T.ring.field, T.shape, std::move(data));
}

Aug aug_from_blocks(const Base& b, const std::vector<RMat>& y) {
    Aug aug(b);
    const uint32_t extra = y.empty() ? 0 : y[0].cols;
    std::vector<uint32_t> tuple;
    for (uint32_t j = 0; j < extra; ++j) {
        tuple.clear();
        for (size_t d = 1; d < b.shape.size(); ++d)
            for (uint32_t i = 0; i < b.shape[d]; ++i) {
                const Poly& c = y[d - 1].at(i, j);
                tuple.push_back(c.empty() ? 0 : c[0]);
            }
        aug.push_tuple(tuple);
    }
    return aug;
}

void PrefixBasis::init(const FieldSpec& field, uint32_t width) {
    f = &field;
    n = width;
    packed = field.p == 2 && width <= 64;
    gb.clear();
    rows.clear();
    piv.clear();
}

bool PrefixBasis::insert(const uint32_t* v) {
    if (packed) {
        uint64_t w = 0;
        for (uint32_t i = 0; i < n; ++i)
            if (v[i]) w |= uint64_t{1} << i;
        return gb.insert(w);
    }
    std::vector<uint32_t> row(v, v + n);
    for (size_t t = 0; t < rows.size(); ++t) {
        const uint32_t x = row[piv[t]];
        if (x == 0) continue;
        for (uint32_t j = 0; j < n; ++j) row[j] = f->sub(row[j], f->mul(x, rows[t][j]));
    }
    uint32_t lead = n;
    for (uint32_t j = 0; j < n; ++j)
        if (row[j] != 0) {
            lead = j;
            break;
        }
    if (lead == n) return false;
    const uint32_t inv = f->inv(row[lead]);
    for (uint32_t j = lead; j < n; ++j) row[j] = f->mul(row[j], inv);
    rows.push_back(std::move(row));
    piv.push_back(lead);
    return true;
}

} // namespace cpd::eng
