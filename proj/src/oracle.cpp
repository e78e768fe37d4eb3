#include "cpd/oracle.hpp"

#include "cpd/errors.hpp"

namespace cpd {

namespace {

// Flat field representation of a tiny tensor: entry values in [0, p).
using Flat = std::vector<uint32_t>;

// All nonzero vectors of the given length whose first nonzero entry is 1
// (one representative per scaling class).
std::vector<Flat> projective_vectors(uint32_t len, uint32_t p) {
    std::vector<Flat> out;
    Flat v(len, 0);
    while (true) {
        // increment base p
        int32_t i = static_cast<int32_t>(len) - 1;
        for (; i >= 0; --i) {
            if (++v[i] < p) break;
            v[i] = 0;
        }
        if (i < 0) break;
        uint32_t lead = 0;
        while (lead < len && v[lead] == 0) ++lead;
        if (v[lead] == 1) out.push_back(v);
    }
    return out;
}

// All nonzero vectors of the given length.
std::vector<Flat> nonzero_vectors(uint32_t len, uint32_t p) {
    std::vector<Flat> out;
    Flat v(len, 0);
    while (true) {
        int32_t i = static_cast<int32_t>(len) - 1;
        for (; i >= 0; --i) {
            if (++v[i] < p) break;
            v[i] = 0;
        }
        if (i < 0) break;
        out.push_back(v);
    }
    return out;
}

struct BruteCtx {
    FieldSpec field;
    std::vector<uint32_t> shape;
    // factor_choices[d]: candidate axis-d vectors of rank-1 terms. Scaling is
    // normalized away on every axis but the last.
    std::vector<std::vector<Flat>> factor_choices;
    uint64_t steps = 0, budget = 0;

    BruteCtx(const FieldSpec& f, const std::vector<uint32_t>& shp, uint64_t bud)
        : field(f), shape(shp), budget(bud) {
        const uint32_t D = static_cast<uint32_t>(shape.size());
        for (uint32_t d = 0; d < D; ++d)
            factor_choices.push_back(d + 1 < D ? projective_vectors(shape[d], field.p)
                                               : nonzero_vectors(shape[d], field.p));
    }

    // T minus the rank-1 term with the given per-axis vectors.
    Flat subtract_term(const Flat& T, const std::vector<const Flat*>& vecs) const {
        Flat out(T);
        const uint32_t D = static_cast<uint32_t>(shape.size());
        std::vector<uint32_t> idx(D, 0);
        for (size_t f = 0; f < out.size(); ++f) {
            uint32_t prod = 1;
            for (uint32_t d = 0; d < D; ++d) prod = field.mul(prod, (*vecs[d])[idx[d]]);
            out[f] = field.sub(out[f], prod);
            for (uint32_t d = D; d-- > 0;) {
                if (++idx[d] < shape[d]) break;
                idx[d] = 0;
            }
        }
        return out;
    }

    bool is_zero(const Flat& T) const {
        for (uint32_t x : T)
            if (x != 0) return false;
        return true;
    }

    bool rank_le(const Flat& T, uint32_t R) {
        if (is_zero(T)) return true;
        if (R == 0) return false;
        const uint32_t D = static_cast<uint32_t>(shape.size());
        std::vector<uint32_t> pick(D, 0);
        std::vector<const Flat*> vecs(D);
        while (true) {
            if (++steps > budget) throw BudgetError("brute_rank budget exceeded");
            for (uint32_t d = 0; d < D; ++d) vecs[d] = &factor_choices[d][pick[d]];
            if (rank_le(subtract_term(T, vecs), R - 1)) return true;
            uint32_t d = D;
            for (; d-- > 0;) {
                if (++pick[d] < factor_choices[d].size()) break;
                pick[d] = 0;
            }
            if (d == UINT32_MAX) return false;
        }
    }
};

} // namespace

uint32_t brute_rank(const Tensor& T, uint64_t budget) {
    if (!T.ring.is_field())
        throw UnsupportedError("brute_rank works over fields only");
    Flat flat(T.data.size());
    for (size_t i = 0; i < flat.size(); ++i) flat[i] = T.data[i][0];

    BruteCtx ctx(T.ring.field, T.shape, budget);
    for (uint32_t R = 0;; ++R)
        if (ctx.rank_le(flat, R)) return R;
}

TensorEnumerator::TensorEnumerator(const RingSpec& ring, std::vector<uint32_t> shape)
    : cur_(ring, std::move(shape)) {
    if (!ring.is_field())
        throw UnsupportedError("enumerate_all_tensors works over fields only");
    total(); // validates size up front
}

uint64_t TensorEnumerator::total() const {
    const uint64_t n = cur_.numel();
    uint64_t t = 1;
    for (uint64_t i = 0; i < n; ++i) {
        if (t > (1ull << 48)) throw BudgetError("tensor enumeration too large");
        t *= cur_.ring.field.p;
    }
    if (t > (1ull << 48)) throw BudgetError("tensor enumeration too large");
    return t;
}

std::optional<Tensor> TensorEnumerator::next() {
    if (done_) return std::nullopt;
    if (first_) {
        first_ = false;
        return cur_; // all-zero tensor
    }
    // Increment the entries as base-p digits, last entry least significant.
    const uint32_t p = cur_.ring.field.p;
    size_t i = cur_.data.size();
    for (; i-- > 0;) {
        uint32_t& digit = cur_.data[i][0];
        if (++digit < p) break;
        digit = 0;
    }
    if (i == SIZE_MAX) {
        done_ = true;
        return std::nullopt;
    }
    return cur_;
}

bool verify_cpd(const Tensor& T, const Cpd& cpd) {
    if (!(cpd.ring == T.ring)) throw ShapeError("verify_cpd: ring mismatch");
    return cpd_eval(cpd, T.shape) == T;
}

} // namespace cpd
