#include "cpd/concise.hpp"

#include <algorithm>
#include <numeric>

#include "cpd/errors.hpp"

namespace cpd {

std::pair<Tensor, ConcisenessCertificate> make_concise(const Tensor& T,
                                                       bool sort_axes) {
    if (!T.ring.is_field())
        throw UnsupportedError("make_concise requires a field (H = 1)");
    const RingSpec& ring = T.ring;
    const FieldSpec& field = ring.field;
    const uint32_t D = T.ndim();

    ConcisenessCertificate cert(ring);
    cert.original_shape = T.shape;
    cert.axis_perm.resize(D);
    std::iota(cert.axis_perm.begin(), cert.axis_perm.end(), 0u);
    if (sort_axes) {
        std::stable_sort(cert.axis_perm.begin(), cert.axis_perm.end(),
                         [&](uint32_t a, uint32_t b) { return T.shape[a] > T.shape[b]; });
    }

    Tensor cur = permute_axes(T, cert.axis_perm);
    for (uint32_t d = 0; d < D; ++d) {
        const Mat U = rmat_to_field(unfold(cur, d));
        if (mat_rank(U, field) == U.rows) {
            // Axis already concise: keep it untouched (identity transform).
            cert.fwd.push_back(RMat::identity(U.rows, ring));
            cert.back.push_back(RMat::identity(U.rows, ring));
            cert.r.push_back(U.rows);
            continue;
        }
        RrefResult rr = rref(U, field);
        RMat Q = rmat_from_field(rr.Q, ring);
        cert.fwd.push_back(Q);
        RMat Qinv = rmat_from_field(mat_invert(rr.Q, field), ring);
        RMat back(Qinv.rows, rr.rank, ring);
        for (uint32_t i = 0; i < Qinv.rows; ++i)
            for (uint32_t j = 0; j < rr.rank; ++j)
                back.at(i, j) = Qinv.at(i, j);
        cert.back.push_back(back);
        cert.r.push_back(rr.rank);
        // Q x_d cur concentrates the row space in the first `rank` slices;
        // the rest are zero and can be dropped without changing any rank.
        cur = take_slices(contract(Q, d, cur), d, rr.rank);
    }
    return {cur, cert};
}

Cpd expand_cpd(const ConcisenessCertificate& cert, const Cpd& cpd) {
    const uint32_t D = static_cast<uint32_t>(cert.original_shape.size());
    if (cpd.ndim() != D)
        throw CertificateMismatchError("expand_cpd: factor count mismatch");
    if (!(cpd.ring == cert.ring))
        throw CertificateMismatchError("expand_cpd: ring mismatch");
    for (uint32_t d = 0; d < D; ++d)
        if (cpd.factors[d].rows != cert.r[d])
            throw CertificateMismatchError("expand_cpd: factor row count mismatch");

    Cpd out(cert.ring);
    out.factors.assign(D, RMat());
    for (uint32_t d = 0; d < D; ++d)
        out.factors[cert.axis_perm[d]] =
            ring_mat_mul(cert.back[d], cpd.factors[d], cert.ring);
    return out;
}

std::optional<Cpd> rank1_decompose(const Tensor& T) {
    auto [tc, cert] = make_concise(T);
    const uint32_t D = T.ndim();
    for (uint32_t d = 0; d < D; ++d)
        if (cert.r[d] != 1) return std::nullopt; // 0 => zero tensor; >1 => rank > 1

    // Concise tensor is 1 x ... x 1 with a single nonzero entry c:
    // T = c * back_0[:,0] (x) back_1[:,0] (x) ... after lifting.
    Cpd core(T.ring);
    for (uint32_t d = 0; d < D; ++d) {
        RMat f(1, 1, T.ring);
        f.at(0, 0) = d == 0 ? tc.data[0] : poly_one(T.ring);
        core.factors.push_back(f);
    }
    return expand_cpd(cert, core);
}

} // namespace cpd
