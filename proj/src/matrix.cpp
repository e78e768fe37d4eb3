#include "cpd/matrix.hpp"

#include <algorithm>

namespace cpd {

RrefResult rref(const Mat& M, const FieldSpec& field) {
    RrefResult res;
    res.R = M;
    res.Q = Mat::identity(M.rows);
    Mat& R = res.R;
    Mat& Q = res.Q;
    uint32_t r = 0;
    for (uint32_t c = 0; c < M.cols && r < M.rows; ++c) {
        // Pivot: first nonzero entry in this column at or below row r.
        uint32_t pi = r;
        while (pi < M.rows && R.at(pi, c) == 0) ++pi;
        if (pi == M.rows) continue;
        if (pi != r) {
            for (uint32_t j = 0; j < M.cols; ++j) std::swap(R.at(r, j), R.at(pi, j));
            for (uint32_t j = 0; j < M.rows; ++j) std::swap(Q.at(r, j), Q.at(pi, j));
        }
        uint32_t s = field.inv(R.at(r, c));
        if (s != 1) {
            for (uint32_t j = 0; j < M.cols; ++j) R.at(r, j) = field.mul(R.at(r, j), s);
            for (uint32_t j = 0; j < M.rows; ++j) Q.at(r, j) = field.mul(Q.at(r, j), s);
        }
        for (uint32_t i = 0; i < M.rows; ++i) {
            if (i == r) continue;
            uint32_t f = R.at(i, c);
            if (f == 0) continue;
            for (uint32_t j = 0; j < M.cols; ++j)
                R.at(i, j) = field.sub(R.at(i, j), field.mul(f, R.at(r, j)));
            for (uint32_t j = 0; j < M.rows; ++j)
                Q.at(i, j) = field.sub(Q.at(i, j), field.mul(f, Q.at(r, j)));
        }
        res.pivot_cols.push_back(c);
        ++r;
    }
    res.rank = r;
    return res;
}

uint32_t mat_rank(const Mat& M, const FieldSpec& field) {
    // Plain elimination without transform bookkeeping.
    Mat W = M;
    uint32_t r = 0;
    for (uint32_t c = 0; c < W.cols && r < W.rows; ++c) {
        uint32_t pi = r;
        while (pi < W.rows && W.at(pi, c) == 0) ++pi;
        if (pi == W.rows) continue;
        if (pi != r)
            for (uint32_t j = c; j < W.cols; ++j) std::swap(W.at(r, j), W.at(pi, j));
        uint32_t s = field.inv(W.at(r, c));
        for (uint32_t i = pi + 1 > r + 1 ? pi + 1 : r + 1; i < W.rows; ++i) {
            uint32_t f = W.at(i, c);
            if (f == 0) continue;
            uint32_t fs = field.mul(f, s);
            for (uint32_t j = c; j < W.cols; ++j)
                W.at(i, j) = field.sub(W.at(i, j), field.mul(fs, W.at(r, j)));
        }
        ++r;
    }
    return r;
}

Mat kernel_basis(const Mat& M, const FieldSpec& field) {
    RrefResult rr = rref(M, field);
    std::vector<bool> is_pivot(M.cols, false);
    for (uint32_t c : rr.pivot_cols) is_pivot[c] = true;
    Mat K(M.cols - rr.rank, M.cols);
    uint32_t out = 0;
    for (uint32_t f = 0; f < M.cols; ++f) {
        if (is_pivot[f]) continue;
        K.at(out, f) = 1;
        for (uint32_t r = 0; r < rr.rank; ++r)
            K.at(out, rr.pivot_cols[r]) = field.neg(rr.R.at(r, f));
        ++out;
    }
    return K;
}

Mat mat_mul(const Mat& A, const Mat& B, const FieldSpec& field) {
    if (A.cols != B.rows) throw ShapeError("mat_mul: inner dimensions disagree");
    Mat C(A.rows, B.cols);
    for (uint32_t i = 0; i < A.rows; ++i)
        for (uint32_t k = 0; k < A.cols; ++k) {
            uint32_t v = A.at(i, k);
            if (v == 0) continue;
            for (uint32_t j = 0; j < B.cols; ++j)
                C.at(i, j) = field.add(C.at(i, j), field.mul(v, B.at(k, j)));
        }
    return C;
}

Mat mat_transpose(const Mat& A) {
    Mat T(A.cols, A.rows);
    for (uint32_t i = 0; i < A.rows; ++i)
        for (uint32_t j = 0; j < A.cols; ++j) T.at(j, i) = A.at(i, j);
    return T;
}

Mat mat_invert(const Mat& M, const FieldSpec& field) {
    if (M.rows != M.cols) throw ShapeError("mat_invert: matrix not square");
    RrefResult rr = rref(M, field);
    if (rr.rank != M.rows) throw SingularError("matrix is singular over the field");
    return rr.Q; // full-rank square rref is the identity, so Q * M = I
}

RMat rmat_from_field(const Mat& M, const RingSpec& ring) {
    RMat R(M.rows, M.cols, ring);
    for (size_t i = 0; i < M.a.size(); ++i) R.a[i][0] = M.a[i] % ring.field.p;
    return R;
}

Mat rmat_to_field(const RMat& M) {
    Mat R(M.rows, M.cols);
    for (size_t i = 0; i < M.a.size(); ++i) {
        for (size_t h = 1; h < M.a[i].size(); ++h)
            if (M.a[i][h] != 0) throw ShapeError("rmat_to_field: entry has x-terms");
        R.a[i] = M.a[i][0];
    }
    return R;
}

RMat ring_mat_mul(const RMat& A, const RMat& B, const RingSpec& ring) {
    if (A.cols != B.rows) throw ShapeError("ring_mat_mul: inner dimensions disagree");
    RMat C(A.rows, B.cols, ring);
    for (uint32_t i = 0; i < A.rows; ++i)
        for (uint32_t k = 0; k < A.cols; ++k) {
            const Poly& v = A.at(i, k);
            if (poly_is_zero(v)) continue;
            for (uint32_t j = 0; j < B.cols; ++j) {
                if (poly_is_zero(B.at(k, j))) continue;
                C.at(i, j) = poly_add(C.at(i, j), poly_mul(v, B.at(k, j), ring), ring);
            }
        }
    return C;
}

RMat ring_mat_add(const RMat& A, const RMat& B, const RingSpec& ring) {
    if (A.rows != B.rows || A.cols != B.cols) throw ShapeError("ring_mat_add: shape mismatch");
    RMat C(A.rows, A.cols, ring);
    for (size_t i = 0; i < A.a.size(); ++i) C.a[i] = poly_add(A.a[i], B.a[i], ring);
    return C;
}

namespace {

struct RowOp {
    enum Kind { Swap, Scale, AddMul } kind;
    uint32_t i, j;
    Poly c; // Scale: row i *= c;  AddMul: row i += c * row j
};

void apply_row_op(RMat& W, const RowOp& op, const RingSpec& ring) {
    switch (op.kind) {
        case RowOp::Swap:
            for (uint32_t t = 0; t < W.cols; ++t) std::swap(W.at(op.i, t), W.at(op.j, t));
            break;
        case RowOp::Scale:
            for (uint32_t t = 0; t < W.cols; ++t)
                W.at(op.i, t) = poly_mul(W.at(op.i, t), op.c, ring);
            break;
        case RowOp::AddMul:
            for (uint32_t t = 0; t < W.cols; ++t)
                W.at(op.i, t) =
                    poly_add(W.at(op.i, t), poly_mul(op.c, W.at(op.j, t), ring), ring);
            break;
    }
}

// Exponent of an entry that should be an exact power of x; returns H on failure.
uint32_t exact_power_of_x(const Poly& e, uint32_t H) {
    uint32_t power = H;
    for (uint32_t h = 0; h < H; ++h) {
        if (e[h] == 0) continue;
        if (e[h] != 1 || power != H) return H;
        power = h;
    }
    return power;
}

} // namespace

BorderReduction border_reduce(const RMat& M, const RingSpec& ring) {
    const uint32_t m = M.rows, n = M.cols;
    // Working copy. The divide-by-x steps are applied to W in place but are not
    // row/column operations, so W only guides pivot selection; the certified
    // reduced matrix is recomputed as Q*M*P below.
    RMat W = M;
    std::vector<RowOp> rowlog;
    std::vector<uint32_t> perm(n);
    for (uint32_t j = 0; j < n; ++j) perm[j] = j;

    auto swap_cols = [&](uint32_t a, uint32_t b) {
        if (a == b) return;
        for (uint32_t i = 0; i < m; ++i) std::swap(W.at(i, a), W.at(i, b));
        std::swap(perm[a], perm[b]);
    };
    auto do_row = [&](RowOp op) {
        apply_row_op(W, op, ring);
        rowlog.push_back(std::move(op));
    };

    uint32_t k = 0;
    while (k < m && k < n) {
        // Unit pivot with the smallest (row, col) in the trailing block.
        bool found = false;
        uint32_t pi = 0, pj = 0;
        for (uint32_t i = k; i < m && !found; ++i)
            for (uint32_t j = k; j < n && !found; ++j)
                if (poly_is_unit(W.at(i, j))) {
                    pi = i;
                    pj = j;
                    found = true;
                }
        if (!found) {
            // No unit means every block entry is a multiple of x (or the block
            // is zero, in which case the remaining rows are zero and we stop).
            bool all_zero = true;
            for (uint32_t i = k; i < m && all_zero; ++i)
                for (uint32_t j = k; j < n && all_zero; ++j)
                    if (!poly_is_zero(W.at(i, j))) all_zero = false;
            if (all_zero) break;
            for (uint32_t i = k; i < m; ++i)
                for (uint32_t j = k; j < n; ++j)
                    W.at(i, j) = poly_shift_down(W.at(i, j), ring);
            continue; // retry the same block corner on the divided block
        }
        if (pi != k) do_row({RowOp::Swap, k, pi, {}});
        swap_cols(k, pj);
        if (!(W.at(k, k).size() == ring.H && W.at(k, k) == poly_one(ring)))
            do_row({RowOp::Scale, k, 0, border_inverse(W.at(k, k), ring)});
        for (uint32_t i = k + 1; i < m; ++i)
            if (!poly_is_zero(W.at(i, k)))
                do_row({RowOp::AddMul, i, k, poly_neg(W.at(i, k), ring)});
        ++k;
    }

    BorderReduction out;
    out.col_perm = perm;
    out.Q = RMat::identity(m, ring);
    for (const RowOp& op : rowlog) apply_row_op(out.Q, op, ring);
    // reduced = Q * M * P (column j of M*P is column perm[j] of M).
    RMat QM = ring_mat_mul(out.Q, M, ring);
    out.reduced = RMat(m, n, ring);
    for (uint32_t i = 0; i < m; ++i)
        for (uint32_t j = 0; j < n; ++j) out.reduced.at(i, j) = QM.at(i, perm[j]);
    // Rank = nonzero rows; the rows that died under the divide-by-x replay sit
    // at the bottom because the diagonal powers are nondecreasing.
    uint32_t rank = 0;
    for (uint32_t i = 0; i < m; ++i) {
        bool nonzero = false;
        for (uint32_t j = 0; j < n && !nonzero; ++j)
            if (!poly_is_zero(out.reduced.at(i, j))) nonzero = true;
        if (nonzero) {
            if (i != rank)
                throw InternalError("border_reduce: nonzero row below a zero row");
            ++rank;
        }
    }
    out.rank = rank;
    for (uint32_t i = 0; i < rank; ++i) {
        uint32_t pw = exact_power_of_x(out.reduced.at(i, i), ring.H);
        if (pw >= ring.H)
            throw InternalError("border_reduce: diagonal entry is not a power of x");
        if (!out.diag_powers.empty() && pw < out.diag_powers.back())
            throw InternalError("border_reduce: diagonal powers decreased");
        out.diag_powers.push_back(pw);
    }
    return out;
}

RMat ring_invert(const RMat& M, const RingSpec& ring) {
    if (M.rows != M.cols) throw ShapeError("ring_invert: matrix not square");
    const uint32_t n = M.rows;
    BorderReduction br = border_reduce(M, ring);
    if (br.rank != n) throw SingularError("matrix is singular over the ring");
    for (uint32_t pw : br.diag_powers)
        if (pw != 0) throw SingularError("matrix determinant is a multiple of x");
    // U := reduced is upper-triangular with unit diagonal 1. Invert by back
    // substitution: X = U^{-1} with X also upper-triangular.
    const RMat& U = br.reduced;
    RMat X = RMat::identity(n, ring);
    for (int32_t i = static_cast<int32_t>(n) - 1; i >= 0; --i)
        for (uint32_t j = i + 1; j < n; ++j) {
            // X[i] = e_i - sum_{t>i} U[i][t] * X[t]
            Poly acc = poly_zero(ring);
            for (uint32_t t = i + 1; t <= j; ++t)
                acc = poly_add(acc, poly_mul(U.at(i, t), X.at(t, j), ring), ring);
            X.at(i, j) = poly_neg(acc, ring);
        }
    // M = Q^{-1} U P^{-1}  =>  M^{-1} = P U^{-1} Q, where row i of P*Y is row
    // inv_perm[i] of Y for the recorded column permutation.
    std::vector<uint32_t> inv_perm(n);
    for (uint32_t j = 0; j < n; ++j) inv_perm[br.col_perm[j]] = j;
    RMat XQ = ring_mat_mul(X, br.Q, ring);
    RMat R(n, n, ring);
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < n; ++j) R.at(i, j) = XQ.at(inv_perm[i], j);
    return R;
}

} // namespace cpd
