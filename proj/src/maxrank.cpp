#include "cpd/maxrank.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cpd/errors.hpp"

namespace cpd {

namespace {

uint64_t checked_mul(uint64_t a, uint64_t b) {
    if (b != 0 && a > UINT64_MAX / b) throw ShapeError("shape product overflows");
    return a * b;
}

uint32_t to_u32(uint64_t v, const char* what) {
    if (v > UINT32_MAX) throw ShapeError(std::string(what) + " exceeds 32 bits");
    return static_cast<uint32_t>(v);
}

void require_axes(const std::vector<uint32_t>& shape) {
    if (shape.empty()) throw ShapeError("bound needs at least one axis");
    for (uint32_t n : shape)
        if (n == 0) throw ShapeError("bound needs axis lengths >= 1");
}

uint32_t howell_rec(std::array<uint32_t, 3> s,
                    std::map<std::array<uint32_t, 3>, uint32_t>& memo) {
    std::sort(s.begin(), s.end());
    if (s[0] == 0) return 0;
    auto it = memo.find(s);
    if (it != memo.end()) return it->second;
    uint64_t best = std::min({static_cast<uint64_t>(s[0]) * s[1],
                              static_cast<uint64_t>(s[0]) * s[2],
                              static_cast<uint64_t>(s[1]) * s[2]});
    for (uint32_t a = 0; a < 3; ++a)
        for (uint32_t b = a + 1; b < 3; ++b) {
            uint32_t c = 3 - a - b;
            std::array<uint32_t, 3> t = s;
            --t[a];
            --t[b];
            best = std::min(best, static_cast<uint64_t>(howell_rec(t, memo)) + s[c]);
        }
    uint32_t v = to_u32(best, "recursive rank bound");
    memo.emplace(s, v);
    return v;
}

} // namespace

uint32_t bound_counting(const std::vector<uint32_t>& shape) {
    require_axes(shape);
    uint64_t prod = 1, sum = 0;
    for (uint32_t n : shape) {
        prod = checked_mul(prod, n);
        sum += n;
    }
    return to_u32((prod + sum - 1) / sum, "counting bound");
}

uint32_t bound_trivial_upper(const std::vector<uint32_t>& shape) {
    require_axes(shape);
    uint64_t best = UINT64_MAX;
    for (size_t d = 0; d < shape.size(); ++d) {
        uint64_t prod = 1;
        for (size_t e = 0; e < shape.size(); ++e)
            if (e != d) prod = checked_mul(prod, shape[e]);
        best = std::min(best, prod);
    }
    return to_u32(best, "slicewise bound");
}

uint32_t bound_howell_upper(const std::vector<uint32_t>& shape) {
    if (shape.size() != 3) throw ShapeError("corner-peeling bound needs exactly 3 axes");
    std::map<std::array<uint32_t, 3>, uint32_t> memo;
    return howell_rec({shape[0], shape[1], shape[2]}, memo);
}

uint32_t bound_nn2(uint32_t m, uint32_t n, const FieldSpec& field) {
    if (n < 2 || m < n) throw ShapeError("two-layer bound needs m >= n >= 2");
    if (m >= 2 * n) return 2 * n;
    if (field.p == 2) {
        if (m == 2 * n - 1) return 2 * n - 1;
        return n + (m + 1) / 2;
    }
    return n + m / 2;
}

uint32_t bound_skinny_lower(uint32_t m, uint32_t n, uint32_t k) {
    if (m == 0 || n == 0) throw ShapeError("singleton-padding bound needs m, n >= 1");
    uint64_t mn = static_cast<uint64_t>(m) * n;
    if (k > mn) throw ShapeError("singleton-padding bound needs k <= m*n");
    uint64_t best = 0;
    for (uint32_t r = 1; r <= m; ++r)
        for (uint32_t s = 1; s <= n; ++s) {
            uint64_t rs = static_cast<uint64_t>(r) * s;
            if (rs < k) continue;
            uint32_t q = static_cast<uint32_t>(rs - k);
            uint64_t inner = (q == 0) ? 0 : bound_counting({r, s, q});
            best = std::max(best, inner + (mn - rs));
        }
    return to_u32(best, "singleton-padding bound");
}

uint32_t bound_improved_nnn(uint32_t n) {
    if (n == 0) throw ShapeError("chained cube bound needs n >= 1");
    const FieldSpec worst(2); // the larger two-layer branch, valid over every field
    uint64_t best = UINT64_MAX;
    for (uint32_t k = 0; 2 * k <= n; ++k) {
        uint32_t q = n - k; // peel k row/column pairs, leaving shape (n, q, q)
        uint64_t tail;
        if (q < 2)
            tail = static_cast<uint64_t>(q) * q;
        else
            tail = static_cast<uint64_t>(q / 2) * bound_nn2(n, q, worst) + (q % 2) * q;
        best = std::min(best, tail + static_cast<uint64_t>(k) * n);
    }
    return to_u32(best, "chained cube bound");
}

ShapeBounds shape_bounds(const std::vector<uint32_t>& shape, const FieldSpec& field) {
    require_axes(shape);
    ShapeBounds out;
    out.shape = shape;
    out.lower = {bound_counting(shape), "counting"};
    out.upper = {bound_trivial_upper(shape), "slicewise"};
    if (shape.size() == 3) {
        uint32_t peel = bound_howell_upper(shape);
        if (peel < out.upper.value) out.upper = {peel, "corner-peeling"};
        std::array<uint32_t, 3> s{shape[0], shape[1], shape[2]};
        std::sort(s.begin(), s.end(), std::greater<>());
        if (s[2] == 2) {
            // The two-layer value is exact, so it takes the label on ties.
            uint32_t exact = bound_nn2(s[0], s[1], field);
            if (exact >= out.lower.value) out.lower = {exact, "two-layer"};
            if (exact <= out.upper.value) out.upper = {exact, "two-layer"};
        }
        for (uint32_t c = 0; c < 3; ++c) {
            uint32_t a = (c + 1) % 3, b = (c + 2) % 3;
            uint64_t ab = static_cast<uint64_t>(shape[a]) * shape[b];
            if (shape[c] > ab) continue;
            uint32_t pad =
                bound_skinny_lower(shape[a], shape[b], static_cast<uint32_t>(ab - shape[c]));
            if (pad > out.lower.value) out.lower = {pad, "singleton-padding"};
        }
    }
    if (out.lower.value > out.upper.value)
        throw InternalError("shape bounds crossed: lower " + std::to_string(out.lower.value) +
                            " > upper " + std::to_string(out.upper.value));
    return out;
}

// ---------------------------------------------------------------------------
// Canonical enumeration.

namespace {

// All invertible k x k matrices over the field, by filtering every candidate.
std::vector<Mat> all_invertible(uint32_t k, const FieldSpec& field) {
    std::vector<Mat> out;
    if (k == 0) {
        out.emplace_back(0, 0);
        return out;
    }
    long double log2_total = static_cast<long double>(k) * k * std::log2(static_cast<long double>(field.p));
    if (log2_total > 20)
        throw BudgetError("enumerating " + std::to_string(k) + "x" + std::to_string(k) +
                          " matrices over GF(" + std::to_string(field.p) + ") is too large");
    Mat cand(k, k);
    while (true) {
        if (mat_rank(cand, field) == k) out.push_back(cand);
        size_t t = cand.a.size();
        while (t > 0) {
            --t;
            if (++cand.a[t] < field.p) break;
            cand.a[t] = 0;
        }
        if (t == 0 && cand.a[0] == 0) break;
    }
    return out;
}

// Odometer over all rows x cols matrices over the field.
template <typename Fn> void for_each_mat(uint32_t rows, uint32_t cols, const FieldSpec& field, Fn fn) {
    Mat cand(rows, cols);
    if (cand.a.empty()) {
        fn(cand);
        return;
    }
    while (true) {
        fn(cand);
        size_t t = cand.a.size();
        while (t > 0) {
            --t;
            if (++cand.a[t] < field.p) break;
            cand.a[t] = 0;
        }
        if (t == 0 && cand.a[0] == 0) break;
    }
}

// Number of invertible k x k matrices over GF(p): prod_{i<k} (p^k - p^i).
uint64_t gl_order(uint32_t k, uint32_t p) {
    uint64_t pk = 1;
    for (uint32_t i = 0; i < k; ++i) pk = checked_mul(pk, p);
    uint64_t count = 1, pi = 1;
    for (uint32_t i = 0; i < k; ++i) {
        count = checked_mul(count, pk - pi);
        pi *= p;
    }
    return count;
}

uint64_t int_pow(uint32_t base, uint64_t exp) {
    uint64_t v = 1;
    for (uint64_t i = 0; i < exp; ++i) v = checked_mul(v, base);
    return v;
}

uint64_t stabilizer_order(uint32_t r, uint32_t n, uint32_t p, uint32_t q) {
    uint64_t count = checked_mul(gl_order(r, q), gl_order(n - r, q));
    count = checked_mul(count, gl_order(p - r, q));
    count = checked_mul(count, int_pow(q, static_cast<uint64_t>(r) * (n - r)));
    return checked_mul(count, int_pow(q, static_cast<uint64_t>(r) * (p - r)));
}

} // namespace

std::vector<std::pair<Mat, Mat>> seed_slice_stabilizer(uint32_t r, uint32_t n, uint32_t p,
                                                       const FieldSpec& field) {
    if (r > n || r > p) throw ShapeError("slice rank exceeds the slice sides");
    std::vector<std::pair<Mat, Mat>> out;
    out.reserve(stabilizer_order(r, n, p, field.p));
    auto gl_r = all_invertible(r, field);
    auto gl_rows = all_invertible(n - r, field);
    auto gl_cols = all_invertible(p - r, field);
    for (const Mat& p11 : gl_r) {
        Mat q11 = r ? mat_transpose(mat_invert(p11, field)) : Mat(0, 0);
        for (const Mat& p22 : gl_rows)
            for_each_mat(r, n - r, field, [&](const Mat& p12) {
                Mat P(n, n);
                for (uint32_t i = 0; i < r; ++i) {
                    for (uint32_t j = 0; j < r; ++j) P.at(i, j) = p11.at(i, j);
                    for (uint32_t j = r; j < n; ++j) P.at(i, j) = p12.at(i, j - r);
                }
                for (uint32_t i = r; i < n; ++i)
                    for (uint32_t j = r; j < n; ++j) P.at(i, j) = p22.at(i - r, j - r);
                for (const Mat& q22 : gl_cols)
                    for_each_mat(r, p - r, field, [&](const Mat& q12) {
                        Mat Q(p, p);
                        for (uint32_t i = 0; i < r; ++i) {
                            for (uint32_t j = 0; j < r; ++j) Q.at(i, j) = q11.at(i, j);
                            for (uint32_t j = r; j < p; ++j) Q.at(i, j) = q12.at(i, j - r);
                        }
                        for (uint32_t i = r; i < p; ++i)
                            for (uint32_t j = r; j < p; ++j) Q.at(i, j) = q22.at(i - r, j - r);
                        out.emplace_back(P, Q);
                    });
            });
    }
    return out;
}

struct CanonicalStream::Impl {
    std::vector<uint32_t> shape;
    RingSpec ring;
    uint32_t r0 = 0;
    CanonicalStreamConfig cfg;

    uint32_t m = 0, n = 0, p = 0, np = 0, rmax = 0;
    uint32_t limit = 0;          // 1 << np, exclusive code bound
    uint64_t yielded_count = 0;

    uint32_t r = 0;              // slice-0 rank currently enumerated
    bool r_ready = false;
    bool root_pending = false;   // m == 1: the lone slice-0 tensor not yet emitted
    bool done = false;

    struct Level {
        std::vector<uint64_t> visited;
        uint32_t cursor = 0;
        uint32_t code = 0;
        std::vector<uint32_t> img; // pairs x np basis-image codes
        size_t pairs = 0;
    };
    std::vector<Level> levels;   // level i chooses slice i + 1
    int depth = 0;

    Impl(std::vector<uint32_t> shp, const RingSpec& rg, uint32_t rank_floor,
         CanonicalStreamConfig c)
        : shape(std::move(shp)), ring(rg), r0(rank_floor), cfg(c) {
        if (!ring.is_field() || ring.field.p != 2)
            throw UnsupportedError("canonical enumeration is implemented over GF(2) only");
        if (shape.size() != 3) throw ShapeError("canonical enumeration needs exactly 3 axes");
        for (uint32_t s : shape)
            if (s == 0) throw ShapeError("canonical enumeration needs axis lengths >= 1");
        m = shape[0];
        n = shape[1];
        p = shape[2];
        np = n * p;
        if (np > 25) throw ShapeError("slice has more than 25 entries");
        limit = 1u << np;
        rmax = std::min(n, p);
        for (uint32_t rr = r0; rr <= rmax; ++rr) {
            uint64_t order = stabilizer_order(rr, n, p, 2);
            if (order > cfg.stabilizer_budget)
                throw BudgetError("slice-0 stabilizer for rank " + std::to_string(rr) + " has " +
                                  std::to_string(order) + " pairs, exceeding the budget of " +
                                  std::to_string(cfg.stabilizer_budget));
        }
        r = r0;
        if (m >= 2) levels.resize(m - 1);
        done = r > rmax;
    }

    uint32_t bit_of(uint32_t i, uint32_t j) const { return np - 1 - (i * p + j); }

    uint32_t apply_pair(const uint32_t* row, uint32_t code) const {
        uint32_t out = 0;
        while (code) {
            out ^= row[std::countr_zero(code)];
            code &= code - 1;
        }
        return out;
    }

    void build_seed() {
        auto pairs = seed_slice_stabilizer(r, n, p, ring.field);
        if (!levels.empty()) {
            Level& lv = levels[0];
            lv.pairs = pairs.size();
            lv.img.assign(lv.pairs * np, 0);
            for (size_t t = 0; t < pairs.size(); ++t) {
                const Mat& P = pairs[t].first;
                const Mat& Q = pairs[t].second;
                for (uint32_t b = 0; b < np; ++b) {
                    uint32_t e = np - 1 - b;
                    uint32_t a = e / p, c = e % p;
                    uint32_t code = 0;
                    for (uint32_t i = 0; i < n; ++i) {
                        if (!P.at(i, a)) continue;
                        for (uint32_t j = 0; j < this->p; ++j)
                            if (Q.at(j, c)) code |= 1u << bit_of(i, j);
                    }
                    lv.img[t * np + b] = code;
                }
            }
            reset_level(0);
        } else {
            root_pending = true;
        }
        r_ready = true;
        depth = 0;
    }

    void reset_level(int d) {
        Level& lv = levels[d];
        lv.visited.assign((static_cast<size_t>(limit) + 63) / 64, 0);
        lv.cursor = 0;
    }

    uint32_t scan_unvisited(const Level& lv, uint32_t from) const {
        uint32_t c = from;
        while (c < limit) {
            uint64_t word = ~lv.visited[c >> 6] & (~0ull << (c & 63));
            if (word) {
                uint32_t hit = (c & ~63u) + static_cast<uint32_t>(std::countr_zero(word));
                return hit < limit ? hit : limit;
            }
            c = (c & ~63u) + 64;
        }
        return limit;
    }

    Tensor materialize() const {
        Tensor t(ring, shape);
        Poly one = poly_one(ring);
        for (uint32_t i = 0; i < r; ++i) t.data[static_cast<size_t>(i) * p + i] = one;
        for (uint32_t s = 1; s < m; ++s) {
            uint32_t code = levels[s - 1].code;
            while (code) {
                uint32_t b = std::countr_zero(static_cast<uint32_t>(code));
                uint32_t e = np - 1 - b;
                t.data[(static_cast<size_t>(s) * n + e / p) * p + e % p] = one;
                code &= code - 1;
            }
        }
        return t;
    }

    std::optional<Tensor> next() {
        while (!done) {
            if (!r_ready) {
                build_seed();
                continue;
            }
            if (root_pending) { // m == 1: just the normal-form slice
                root_pending = false;
                Tensor t = materialize();
                advance_r();
                ++yielded_count;
                return t;
            }
            if (levels.empty()) {
                advance_r();
                continue;
            }
            Level& lv = levels[depth];
            uint32_t c = scan_unvisited(lv, lv.cursor);
            if (c == limit) {
                if (depth == 0) {
                    advance_r();
                } else {
                    --depth;
                    levels[depth].cursor = levels[depth].code + 1;
                }
                continue;
            }
            // c is the smallest code of a fresh orbit: mark the whole orbit and
            // remember which pairs fix it (they act on later slices).
            lv.code = c;
            bool want_child = depth + 2 < static_cast<int>(m);
            std::vector<uint32_t> child_img;
            size_t child_pairs = 0;
            for (size_t t = 0; t < lv.pairs; ++t) {
                const uint32_t* row = lv.img.data() + t * np;
                uint32_t image = apply_pair(row, c);
                lv.visited[image >> 6] |= 1ull << (image & 63);
                if (want_child && image == c) {
                    child_img.insert(child_img.end(), row, row + np);
                    ++child_pairs;
                }
            }
            if (!want_child) {
                lv.cursor = c + 1;
                ++yielded_count;
                return materialize();
            }
            Level& child = levels[depth + 1];
            child.img = std::move(child_img);
            child.pairs = child_pairs;
            reset_level(depth + 1);
            ++depth;
        }
        return std::nullopt;
    }

    void advance_r() {
        ++r;
        r_ready = false;
        if (r > rmax) done = true;
    }
};

CanonicalStream::CanonicalStream(std::vector<uint32_t> shape, const RingSpec& ring, uint32_t r0,
                                 CanonicalStreamConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(shape), ring, r0, cfg)) {}
CanonicalStream::~CanonicalStream() = default;
CanonicalStream::CanonicalStream(CanonicalStream&&) noexcept = default;
CanonicalStream& CanonicalStream::operator=(CanonicalStream&&) noexcept = default;

std::optional<Tensor> CanonicalStream::next() { return impl_->next(); }
uint64_t CanonicalStream::yielded() const { return impl_->yielded_count; }

// ---------------------------------------------------------------------------
// Exhaustive maximum rank.

namespace {

struct ExactHit {
    uint64_t index;
    uint32_t rank;
    Tensor tensor;
};

} // namespace

MaxRankReport maxrank_exhaustive(const std::vector<uint32_t>& shape, const RingSpec& ring,
                                 uint32_t R0, const MaxRankConfig& cfg) {
    if (shape.size() != 3) throw ShapeError("exhaustive maximum rank needs exactly 3 axes");
    uint32_t m = shape[0];
    if (m == 0) throw ShapeError("exhaustive maximum rank needs axis lengths >= 1");
    uint32_t r0 = R0 / m + 1;
    CanonicalStream stream(shape, ring, r0, cfg.stream);

    SearchConfig sc = cfg.search;
    sc.threads = 1;               // parallelism lives across tensors, not inside one
    sc.progress_interval = 0;
    sc.progress = nullptr;

    std::mutex mu;
    uint64_t count = 0;
    uint32_t current_max = R0;
    std::vector<ExactHit> exacts;
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            std::optional<Tensor> t;
            uint32_t base;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (failure) return;
                t = stream.next();
                if (!t) return;
                ++count;
                base = current_max;
            }
            try {
                uint64_t index = count - 1;
                auto quick = search_rank_le(*t, base, sc);
                if (quick.witness) continue; // rank <= a rank already seen
                uint32_t R = base + 1;
                while (!search_rank_le(*t, R, sc).witness) {
                    ++R;
                    if (R > t->numel())
                        throw InternalError("rank escalation passed the tensor size");
                }
                std::lock_guard<std::mutex> lock(mu);
                exacts.push_back({index, R, std::move(*t)});
                current_max = std::max(current_max, R);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    uint32_t nthreads = std::max<uint32_t>(1, cfg.threads);
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (uint32_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    if (count == 0) throw ShapeError("the slice-rank filter left nothing to search");

    uint32_t max_rank = R0;
    for (const ExactHit& h : exacts) max_rank = std::max(max_rank, h.rank);

    std::optional<Tensor> witness;
    if (max_rank > R0) {
        // Dispatch is in stream order and the running maximum only grows, so
        // every tensor skipped before the first exact hit at max_rank was
        // proven strictly below it; the earliest exact hit is the witness.
        uint64_t best_index = UINT64_MAX;
        for (ExactHit& h : exacts)
            if (h.rank == max_rank && h.index < best_index) {
                best_index = h.index;
                witness = h.tensor;
            }
    } else {
        // Every streamed tensor has rank <= R0; find the first that attains it.
        CanonicalStream hunt(shape, ring, r0, cfg.stream);
        while (auto t = hunt.next()) {
            if (R0 == 0 || !search_rank_le(*t, R0 - 1, sc).witness) {
                witness = std::move(*t);
                break;
            }
        }
        if (!witness)
            throw UnsupportedError(
                "no canonicalized tensor attains the prior lower bound, so the run "
                "cannot produce a witness; rerun with a smaller R0");
    }

    MaxRankReport report{shape, ring.field, R0, r0, count, max_rank, std::move(*witness)};
    return report;
}

// ---------------------------------------------------------------------------
// Reports.

std::string char_matrix_text(const Tensor& T) {
    if (T.ndim() != 3) throw ShapeError("characteristic matrix needs exactly 3 axes");
    if (!T.ring.is_field())
        throw UnsupportedError("characteristic matrix rendering is field-only");
    uint32_t m = T.shape[0], n = T.shape[1], p = T.shape[2];
    std::vector<std::string> cells(static_cast<size_t>(n) * p);
    std::vector<size_t> width(p, 1);
    for (uint32_t j = 0; j < n; ++j)
        for (uint32_t k = 0; k < p; ++k) {
            std::string cell;
            for (uint32_t i = 0; i < m; ++i) {
                uint32_t c = T.data[(static_cast<size_t>(i) * n + j) * p + k][0];
                if (c == 0) continue;
                if (!cell.empty()) cell += "+";
                if (c != 1) cell += std::to_string(c);
                cell += "v" + std::to_string(i);
            }
            if (cell.empty()) cell = ".";
            width[k] = std::max(width[k], cell.size());
            cells[static_cast<size_t>(j) * p + k] = std::move(cell);
        }
    std::string out;
    for (uint32_t j = 0; j < n; ++j) {
        out += "[ ";
        for (uint32_t k = 0; k < p; ++k) {
            const std::string& cell = cells[static_cast<size_t>(j) * p + k];
            out += cell;
            out.append(width[k] - cell.size() + (k + 1 < p ? 2 : 0), ' ');
        }
        out += " ]\n";
    }
    return out;
}

std::string maxrank_report_text(const MaxRankReport& report) {
    std::ostringstream out;
    out << "maximum-rank search report\n";
    out << "shape:";
    for (uint32_t s : report.shape) out << " " << s;
    out << "\nfield: GF(" << report.field.p << ")\n";
    out << "prior lower bound R0: " << report.R0 << "\n";
    out << "slice-rank filter r0: " << report.r0 << "\n";
    out << "tensors searched: " << report.tensors_searched << "\n";
    out << "maximum rank: " << report.max_rank << "\n";
    out << "witness characteristic matrix:\n" << char_matrix_text(report.witness);
    return out.str();
}

std::string maxrank_report_json(const MaxRankReport& report) {
    std::ostringstream out;
    out << "{\"shape\":[";
    for (size_t d = 0; d < report.shape.size(); ++d)
        out << (d ? "," : "") << report.shape[d];
    out << "],\"field\":" << report.field.p << ",\"R0\":" << report.R0 << ",\"r0\":" << report.r0
        << ",\"tensors_searched\":" << report.tensors_searched
        << ",\"max_rank\":" << report.max_rank << ",\"witness\":[";
    const Tensor& w = report.witness;
    uint32_t m = w.shape[0], n = w.shape[1], p = w.shape[2];
    for (uint32_t i = 0; i < m; ++i) {
        out << (i ? ",[" : "[");
        for (uint32_t j = 0; j < n; ++j) {
            out << (j ? ",[" : "[");
            for (uint32_t k = 0; k < p; ++k)
                out << (k ? "," : "") << w.data[(static_cast<size_t>(i) * n + j) * p + k][0];
            out << "]";
        }
        out << "]";
    }
    out << "]}";
    return out.str();
}

} // namespace cpd
