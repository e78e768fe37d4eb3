#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cpd/tensor.hpp"

namespace cpd {

// Witness of the reduction T -> concise T. Axis d of the concise tensor came
// from axis axis_perm[d] of the original; along it, the invertible transform
// fwd[d] was applied and the first r[d] slices kept. back[d] holds the first
// r[d] columns of fwd[d]^{-1}, so a factor matrix A of the concise tensor
// lifts to back[d] * A for the original.
struct ConcisenessCertificate {
    RingSpec ring;
    std::vector<uint32_t> original_shape;
    std::vector<uint32_t> axis_perm;
    std::vector<RMat> fwd;
    std::vector<RMat> back;
    std::vector<uint32_t> r;

    explicit ConcisenessCertificate(const RingSpec& rg) : ring(rg) {}
};

// Reduce a tensor over a field (H = 1) to concise form: every unfolding of the
// result has full row rank, and rank is preserved. With sort_axes, axes are
// first reordered so side lengths are nonincreasing (stable on ties); the
// reorder is recorded in the certificate. A zero tensor reduces to all-zero
// side lengths.
std::pair<Tensor, ConcisenessCertificate> make_concise(const Tensor& T,
                                                       bool sort_axes = false);

// Lift a CPD of the concise tensor to one of the original tensor (same rank,
// original side lengths). Throws CertificateMismatchError when the CPD does
// not match the certificate's concise shape or ring.
Cpd expand_cpd(const ConcisenessCertificate& cert, const Cpd& cpd);

// Rank-1 CPD of T if one exists (i.e. T nonzero and every concise side length
// is 1), otherwise nullopt. The zero tensor has rank 0, not 1, so it returns
// nullopt. Field tensors only (H = 1).
std::optional<Cpd> rank1_decompose(const Tensor& T);

} // namespace cpd
