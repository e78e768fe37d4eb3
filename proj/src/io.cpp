#include "cpd/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cpd/errors.hpp"

namespace cpd {

namespace {

constexpr uint64_t kMaxEntries = 1ull << 26; // refuse absurd text tensors
constexpr uint64_t kMaxSide = 1ull << 20;
constexpr uint64_t kMaxSymbols = 4096;

bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// ---------------------------------------------------------------------------
// Token stream with source positions. `#` comments run to end of line.

struct Token {
    std::string s;
    uint32_t line = 0, col = 0;
};

std::vector<Token> lex(const std::string& text) {
    std::vector<Token> out;
    uint32_t line = 1, col = 1;
    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (space(c)) {
            ++col;
            ++i;
            continue;
        }
        Token t{std::string(), line, col};
        while (i < text.size() && !space(text[i]) && text[i] != '#') {
            t.s += text[i];
            ++i;
            ++col;
        }
        out.push_back(std::move(t));
    }
    return out;
}

class TokenStream {
public:
    explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

    bool done() const { return pos_ >= toks_.size(); }
    const Token* peek() const { return done() ? nullptr : &toks_[pos_]; }
    Token next() { return toks_[pos_++]; }

    Token need(const std::string& what) {
        if (done()) fail_eof("expected " + what);
        return toks_[pos_++];
    }

    [[noreturn]] static void fail(const Token& t, const std::string& msg) {
        throw ParseError("line " + std::to_string(t.line) + ", column " +
                         std::to_string(t.col) + ": " + msg);
    }
    [[noreturn]] void fail_eof(const std::string& msg) const {
        throw ParseError("unexpected end of file: " + msg);
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
};

uint64_t parse_uint(const Token& t, const std::string& what, uint64_t max) {
    if (t.s.empty() || t.s.size() > 19)
        TokenStream::fail(t, what + " must be a nonnegative integer, got '" + t.s + "'");
    uint64_t v = 0;
    for (char c : t.s) {
        if (!digit(c))
            TokenStream::fail(t, what + " must be a nonnegative integer, got '" + t.s + "'");
        v = v * 10 + static_cast<uint64_t>(c - '0');
    }
    if (v > max)
        TokenStream::fail(t, what + " exceeds the supported maximum " + std::to_string(max));
    return v;
}

// Value of the header keyword `kw`, which must sit on the same source line.
uint64_t header_uint(TokenStream& ts, const Token& kw, const std::string& what,
                     uint64_t max) {
    const Token* nx = ts.peek();
    if (nx == nullptr || nx->line != kw.line)
        TokenStream::fail(kw, "header '" + kw.s + "' needs a value on the same line");
    return parse_uint(ts.next(), what, max);
}

void end_header(TokenStream& ts, const Token& kw) {
    const Token* nx = ts.peek();
    if (nx != nullptr && nx->line == kw.line)
        TokenStream::fail(*nx, "unexpected token after the '" + kw.s + "' header");
}

FieldSpec field_at(const Token& t, uint64_t p) {
    try {
        return FieldSpec(static_cast<uint32_t>(p));
    } catch (const Error& e) {
        TokenStream::fail(t, e.what());
    }
}

// `field <p>` and the optional `H <h>` shared by TensorFile and CpdFile.
RingSpec parse_ring_header(TokenStream& ts) {
    Token fkw = ts.need("'field' header");
    if (fkw.s != "field")
        TokenStream::fail(fkw, "expected 'field' header, got '" + fkw.s + "'");
    const uint64_t p = header_uint(ts, fkw, "field modulus", kMaxSide);
    end_header(ts, fkw);
    const FieldSpec field = field_at(fkw, p);
    uint32_t H = 1;
    if (ts.peek() != nullptr && ts.peek()->s == "H") {
        Token hk = ts.next();
        H = static_cast<uint32_t>(header_uint(ts, hk, "ring exponent threshold", 64));
        if (H < 1) TokenStream::fail(hk, "H must be >= 1");
        end_header(ts, hk);
    }
    return RingSpec(field, H);
}

// ---------------------------------------------------------------------------
// Polynomial entries.

// Grammar: terms joined by '+'; a term is `0`, a constant `c`, or
// [c ['*']] 'x' ['^' k]. Coefficients must already be reduced mod p and
// exponents must stay below H. Throws ParseError without a source position;
// entry_at() adds one.
Poly parse_poly_body(const std::string& s, const RingSpec& ring) {
    Poly out = poly_zero(ring);
    std::vector<bool> seen(ring.H, false);
    const uint32_t p = ring.field.p;
    size_t start = 0;
    while (true) {
        const size_t plus = s.find('+', start);
        const std::string piece =
            s.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
        if (piece.empty()) throw ParseError("empty term in entry '" + s + "'");
        if (piece != "0") {
            size_t j = 0;
            uint64_t coeff = 0;
            while (j < piece.size() && digit(piece[j])) {
                coeff = coeff * 10 + static_cast<uint64_t>(piece[j] - '0');
                if (coeff > kMaxSide)
                    throw ParseError("coefficient too large in term '" + piece + "'");
                ++j;
            }
            const bool has_coeff = j > 0;
            uint64_t expo = 0;
            uint64_t c = 0;
            if (j == piece.size()) { // pure constant (nonempty, all digits)
                c = coeff;
                if (c == 0)
                    throw ParseError("constant 0 must be written as the single term '0'");
            } else {
                if (piece[j] == '*') {
                    if (!has_coeff) throw ParseError("term '" + piece + "' starts with '*'");
                    ++j;
                }
                if (j >= piece.size() || piece[j] != 'x')
                    throw ParseError("expected 'x' in term '" + piece + "'");
                ++j;
                expo = 1;
                if (j < piece.size()) {
                    if (piece[j] != '^')
                        throw ParseError("unexpected character '" + std::string(1, piece[j]) +
                                         "' in term '" + piece + "'");
                    ++j;
                    if (j >= piece.size() || !digit(piece[j]))
                        throw ParseError("exponent missing in term '" + piece + "'");
                    expo = 0;
                    while (j < piece.size() && digit(piece[j])) {
                        expo = expo * 10 + static_cast<uint64_t>(piece[j] - '0');
                        if (expo > 64) throw ParseError("exponent too large in term '" + piece + "'");
                        ++j;
                    }
                    if (j != piece.size())
                        throw ParseError("unexpected trailing characters in term '" + piece + "'");
                }
                c = has_coeff ? coeff : 1;
                if (c == 0) throw ParseError("zero coefficient in term '" + piece + "'");
            }
            if (c >= p)
                throw ParseError("coefficient " + std::to_string(c) + " is not reduced mod " +
                                 std::to_string(p));
            if (expo >= ring.H)
                throw ParseError("exponent " + std::to_string(expo) + " needs H > " +
                                 std::to_string(expo) + ", but H = " + std::to_string(ring.H));
            if (seen[expo])
                throw ParseError("exponent " + std::to_string(expo) + " appears twice in entry '" +
                                 s + "'");
            seen[expo] = true;
            out[expo] = static_cast<uint32_t>(c);
        }
        if (plus == std::string::npos) break;
        start = plus + 1;
    }
    return out;
}

Poly entry_at(const Token& t, const RingSpec& ring) {
    try {
        return parse_poly_body(t.s, ring);
    } catch (const ParseError& e) {
        TokenStream::fail(t, e.what());
    }
}

void guard_numel(const Token& where, uint64_t numel) {
    if (numel > kMaxEntries)
        TokenStream::fail(where, "tensor too large for the text format (more than 2^26 entries)");
}

} // namespace

std::string poly_text(const Poly& a) {
    std::string out;
    for (size_t h = 0; h < a.size(); ++h) {
        if (a[h] == 0) continue;
        if (!out.empty()) out += '+';
        if (h == 0) {
            out += std::to_string(a[h]);
            continue;
        }
        if (a[h] != 1) {
            out += std::to_string(a[h]);
            out += '*';
        }
        out += 'x';
        if (h >= 2) {
            out += '^';
            out += std::to_string(h);
        }
    }
    return out.empty() ? std::string("0") : out;
}

// ---------------------------------------------------------------------------
// TensorFile.

Tensor parse_tensor_file(const std::string& text) {
    TokenStream ts(lex(text));
    const RingSpec ring = parse_ring_header(ts);
    Token skw = ts.need("'shape' header");
    if (skw.s != "shape")
        TokenStream::fail(skw, "expected 'shape' header, got '" + skw.s + "'");
    std::vector<uint32_t> shape;
    uint64_t numel = 1;
    while (ts.peek() != nullptr && ts.peek()->line == skw.line) {
        Token t = ts.next();
        const uint64_t n = parse_uint(t, "axis length", kMaxSide);
        shape.push_back(static_cast<uint32_t>(n));
        numel = (n == 0) ? 0 : numel * n;
        guard_numel(t, numel);
    }
    if (shape.empty())
        TokenStream::fail(skw, "'shape' header needs at least one axis length");
    Tensor T(ring, shape);
    for (uint64_t k = 0; k < T.numel(); ++k) {
        if (ts.done())
            ts.fail_eof("missing tensor entry " + std::to_string(k + 1) + " of " +
                        std::to_string(T.numel()));
        Token e = ts.next();
        T.data[k] = entry_at(e, ring);
    }
    if (!ts.done())
        TokenStream::fail(*ts.peek(), "unexpected token after the last tensor entry");
    return T;
}

std::string write_tensor_file(const Tensor& T) {
    std::string out = "field " + std::to_string(T.ring.field.p) + "\n";
    if (T.ring.H > 1) out += "H " + std::to_string(T.ring.H) + "\n";
    out += "shape";
    for (uint32_t n : T.shape) out += " " + std::to_string(n);
    out += "\n";
    const uint32_t D = T.ndim();
    const uint64_t row = (D > 0) ? T.shape[D - 1] : 1;
    const uint64_t slab = (D >= 3 && T.shape[0] > 0) ? T.numel() / T.shape[0] : 0;
    for (uint64_t k = 0; k < T.numel(); ++k) {
        if (k > 0) {
            if (row > 0 && k % row == 0) {
                out += '\n';
                if (slab > 0 && k % slab == 0) out += '\n'; // blank line between slices
            } else {
                out += ' ';
            }
        }
        out += poly_text(T.data[k]);
    }
    if (T.numel() > 0) out += '\n';
    return out;
}

// ---------------------------------------------------------------------------
// CharMatrixFile.

namespace {

struct CharCell {
    std::string s;      // whitespace stripped
    uint32_t line, col; // position of the first non-space character
};

// One term list of a cell: (symbol index, coefficient) pairs.
std::vector<std::pair<uint32_t, uint32_t>> parse_cell_body(const std::string& s,
                                                           const FieldSpec& field) {
    std::vector<std::pair<uint32_t, uint32_t>> out;
    if (s.empty()) throw ParseError("empty cell");
    size_t start = 0;
    while (true) {
        const size_t plus = s.find('+', start);
        const std::string piece =
            s.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
        if (piece.empty()) throw ParseError("empty term in cell '" + s + "'");
        if (piece != "0") {
            size_t j = 0;
            uint64_t coeff = 0;
            while (j < piece.size() && digit(piece[j])) {
                coeff = coeff * 10 + static_cast<uint64_t>(piece[j] - '0');
                if (coeff > kMaxSide)
                    throw ParseError("coefficient too large in term '" + piece + "'");
                ++j;
            }
            const bool has_coeff = j > 0;
            if (j < piece.size() && piece[j] == '*') {
                if (!has_coeff) throw ParseError("term '" + piece + "' starts with '*'");
                ++j;
            }
            if (j >= piece.size() || piece[j] != 'v')
                throw ParseError("expected a symbol 'v<i>' in term '" + piece + "'");
            ++j;
            if (j >= piece.size() || !digit(piece[j]))
                throw ParseError("symbol index missing in term '" + piece + "'");
            uint64_t idx = 0;
            while (j < piece.size() && digit(piece[j])) {
                idx = idx * 10 + static_cast<uint64_t>(piece[j] - '0');
                if (idx >= kMaxSymbols)
                    throw ParseError("symbol index too large in term '" + piece + "'");
                ++j;
            }
            if (j != piece.size())
                throw ParseError("unexpected trailing characters in term '" + piece + "'");
            const uint64_t c = has_coeff ? coeff : 1;
            if (c == 0) throw ParseError("zero coefficient in term '" + piece + "'");
            if (c >= field.p)
                throw ParseError("coefficient " + std::to_string(c) + " is not reduced mod " +
                                 std::to_string(field.p));
            for (const auto& prev : out)
                if (prev.first == idx)
                    throw ParseError("symbol v" + std::to_string(idx) + " appears twice in cell '" +
                                     s + "'");
            out.emplace_back(static_cast<uint32_t>(idx), static_cast<uint32_t>(c));
        }
        if (plus == std::string::npos) break;
        start = plus + 1;
    }
    return out;
}

[[noreturn]] void fail_cell(const CharCell& c, const std::string& msg) {
    throw ParseError("line " + std::to_string(c.line) + ", column " + std::to_string(c.col) +
                     ": " + msg);
}

} // namespace

Tensor parse_char_matrix(const std::string& text, const FieldSpec& field) {
    // Strip comments but keep newlines so positions stay faithful.
    std::string clean;
    clean.reserve(text.size());
    bool comment = false;
    for (char ch : text) {
        if (ch == '\n') {
            comment = false;
            clean += ch;
        } else if (!comment && ch == '#') {
            comment = true;
        } else if (!comment) {
            clean += ch;
        }
    }

    // Rows split on newlines or ';', cells on ','. Blank segments are allowed
    // and skipped; blank cells are errors.
    std::vector<std::vector<CharCell>> rows;
    uint32_t line = 1;
    size_t line_begin = 0; // offset in `clean` where the current line starts
    size_t i = 0;
    while (i <= clean.size()) {
        // collect one segment (up to '\n', ';', or end)
        const size_t seg_begin = i;
        while (i < clean.size() && clean[i] != '\n' && clean[i] != ';') ++i;
        const std::string seg = clean.substr(seg_begin, i - seg_begin);
        bool blank = true;
        for (char ch : seg)
            if (!space(ch)) blank = false;
        if (!blank) {
            std::vector<CharCell> cells;
            size_t cstart = 0;
            while (true) {
                const size_t comma = seg.find(',', cstart);
                const size_t cend = (comma == std::string::npos) ? seg.size() : comma;
                size_t a = cstart, b = cend;
                while (a < b && space(seg[a])) ++a;
                while (b > a && space(seg[b - 1])) --b;
                CharCell cell;
                cell.line = line;
                cell.col = static_cast<uint32_t>(seg_begin + a - line_begin) + 1;
                for (size_t t = a; t < b; ++t)
                    if (!space(seg[t])) cell.s += seg[t];
                if (cell.s.empty()) fail_cell(cell, "empty cell");
                cells.push_back(std::move(cell));
                if (comma == std::string::npos) break;
                cstart = comma + 1;
            }
            if (!rows.empty() && cells.size() != rows.front().size())
                fail_cell(cells.front(),
                          "row has " + std::to_string(cells.size()) + " cells, previous rows have " +
                              std::to_string(rows.front().size()));
            rows.push_back(std::move(cells));
        }
        if (i >= clean.size()) break;
        if (clean[i] == '\n') {
            ++line;
            line_begin = i + 1;
        }
        ++i;
    }
    if (rows.empty()) throw ParseError("empty characteristic matrix");

    uint32_t max_idx = 0;
    bool any_symbol = false;
    std::vector<std::vector<std::vector<std::pair<uint32_t, uint32_t>>>> parsed(rows.size());
    for (size_t j = 0; j < rows.size(); ++j) {
        parsed[j].resize(rows[j].size());
        for (size_t k = 0; k < rows[j].size(); ++k) {
            try {
                parsed[j][k] = parse_cell_body(rows[j][k].s, field);
            } catch (const ParseError& e) {
                fail_cell(rows[j][k], e.what());
            }
            for (const auto& term : parsed[j][k]) {
                any_symbol = true;
                max_idx = std::max(max_idx, term.first);
            }
        }
    }
    if (!any_symbol)
        throw ParseError("no symbols v<i> appear; cannot infer the tensor's first axis");

    const uint32_t m = max_idx + 1;
    const uint32_t n = static_cast<uint32_t>(rows.size());
    const uint32_t q = static_cast<uint32_t>(rows.front().size());
    if (static_cast<uint64_t>(m) * n * q > kMaxEntries)
        throw ParseError("characteristic matrix too large (more than 2^26 tensor entries)");
    Tensor T(RingSpec(field, 1), {m, n, q});
    for (uint32_t j = 0; j < n; ++j)
        for (uint32_t k = 0; k < q; ++k)
            for (const auto& term : parsed[j][k]) T.at({term.first, j, k})[0] = term.second;
    return T;
}

std::string write_char_matrix(const Tensor& T) {
    if (T.ndim() != 3) throw ShapeError("characteristic matrices need a 3-dimensional tensor");
    if (!T.ring.is_field())
        throw UnsupportedError("characteristic matrices are defined over the base field (H = 1)");
    const uint32_t m = T.shape[0], n = T.shape[1], q = T.shape[2];
    std::string out;
    for (uint32_t j = 0; j < n; ++j) {
        for (uint32_t k = 0; k < q; ++k) {
            std::string cell;
            for (uint32_t i = 0; i < m; ++i) {
                const uint32_t v = T.at({i, j, k})[0];
                if (v == 0) continue;
                if (!cell.empty()) cell += '+';
                if (v != 1) {
                    cell += std::to_string(v);
                    cell += '*';
                }
                cell += 'v';
                cell += std::to_string(i);
            }
            if (cell.empty()) cell = "0";
            if (k > 0) out += ", ";
            out += cell;
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// CpdFile.

Cpd parse_cpd_file(const std::string& text) {
    TokenStream ts(lex(text));
    const RingSpec ring = parse_ring_header(ts);
    Token rkw = ts.need("'rank' header");
    if (rkw.s != "rank")
        TokenStream::fail(rkw, "expected 'rank' header, got '" + rkw.s + "'");
    const uint64_t R = header_uint(ts, rkw, "rank", 1u << 16);
    end_header(ts, rkw);

    std::vector<RMat> factors;
    while (!ts.done()) {
        Token fk = ts.next();
        if (fk.s != "factor")
            TokenStream::fail(fk, "expected 'factor' block, got '" + fk.s + "'");
        const uint64_t rows = header_uint(ts, fk, "factor row count", kMaxSide);
        const uint64_t cols = header_uint(ts, fk, "factor column count", 1u << 16);
        end_header(ts, fk);
        if (cols != R)
            TokenStream::fail(fk, "factor block has " + std::to_string(cols) +
                                      " columns, expected rank " + std::to_string(R));
        guard_numel(fk, rows * cols);
        RMat M(static_cast<uint32_t>(rows), static_cast<uint32_t>(cols), ring);
        for (uint64_t k = 0; k < rows * cols; ++k) {
            if (ts.done())
                ts.fail_eof("missing factor entry " + std::to_string(k + 1) + " of " +
                            std::to_string(rows * cols));
            Token e = ts.next();
            M.a[k] = entry_at(e, ring);
        }
        factors.push_back(std::move(M));
    }
    if (factors.empty()) ts.fail_eof("expected at least one 'factor' block");
    return Cpd(ring, std::move(factors));
}

std::string write_cpd_file(const Cpd& cpd) {
    std::string out = "field " + std::to_string(cpd.ring.field.p) + "\n";
    if (cpd.ring.H > 1) out += "H " + std::to_string(cpd.ring.H) + "\n";
    out += "rank " + std::to_string(cpd.rank()) + "\n";
    for (const RMat& M : cpd.factors) {
        if (M.cols != cpd.rank())
            throw ShapeError("ragged CPD: a factor block disagrees with the rank");
        out += "factor " + std::to_string(M.rows) + " " + std::to_string(M.cols) + "\n";
        for (uint32_t i = 0; i < M.rows; ++i) {
            for (uint32_t j = 0; j < M.cols; ++j) {
                out += poly_text(M.at(i, j));
                out += (j + 1 == M.cols) ? '\n' : ' ';
            }
        }
    }
    return out;
}

} // namespace cpd
