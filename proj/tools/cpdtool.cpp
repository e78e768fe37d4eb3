// cpdtool: command-line front end for the exact CPD toolkit.
//
// Subcommands:
//   rank         exact tensor rank / rank <= R over a prime field
//   border-rank  rank of the x^(H-1)-scaled tensor over GF(p)[x]/(x^H)
//   maxrank      exhaustive maximum-rank search over a whole shape (GF(2))
//   bounds       closed-form rank bounds for a 3-dimensional shape
//   verify       check a CPD file against a tensor file entry by entry
//
// Exit codes: 0 answered, 1 verify mismatch, 2 usage or parse error,
// 3 budget refusal. Estimates and progress go to standard error; answers,
// witnesses, and stats go to standard output.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cpd/border.hpp"
#include "cpd/concise.hpp"
#include "cpd/errors.hpp"
#include "cpd/io.hpp"
#include "cpd/maxrank.hpp"
#include "cpd/oracle.hpp"
#include "cpd/search.hpp"
#include "cpd/tensor.hpp"

namespace {

using namespace cpd;

constexpr long double kLog2Budget = 34.0L; // refuse larger jobs without --long-ok

bool space_ch(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write file: " + path);
    f << content;
    if (!f) throw ParseError("cannot write file: " + path);
}

std::string fix1(long double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1Lf", v);
    return buf;
}

// First whitespace-separated word, skipping `#` comments: TensorFiles start
// with the `field` header, characteristic matrices cannot.
std::string first_word(const std::string& text) {
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (space_ch(text[i])) {
            ++i;
        } else {
            break;
        }
    }
    size_t j = i;
    while (j < text.size() && !space_ch(text[j]) && text[j] != '#') ++j;
    return text.substr(i, j - i);
}

uint32_t parse_small_uint(const std::string& s, const std::string& what) {
    if (s.empty() || s.size() > 7) throw ParseError(what + " must be an integer, got '" + s + "'");
    uint32_t v = 0;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw ParseError(what + " must be an integer, got '" + s + "'");
        v = v * 10 + static_cast<uint32_t>(c - '0');
    }
    return v;
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && space_ch(s[a])) ++a;
    while (b > a && space_ch(s[b - 1])) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t at = s.find(sep, start);
        out.push_back(s.substr(start, at == std::string::npos ? std::string::npos : at - start));
        if (at == std::string::npos) break;
        start = at + 1;
    }
    return out;
}

std::vector<uint32_t> parse_csv_u32(const std::string& s, const std::string& what) {
    std::vector<uint32_t> out;
    for (const std::string& piece : split(s, ','))
        out.push_back(parse_small_uint(trim(piece), what));
    return out;
}

// family[:p1,p2,...] -> generate()
Tensor tensor_from_gen(const std::string& spec, const FieldSpec& field) {
    const size_t colon = spec.find(':');
    const std::string family = spec.substr(0, colon);
    std::vector<uint32_t> params;
    if (colon != std::string::npos)
        params = parse_csv_u32(spec.substr(colon + 1), "--gen parameter");
    if (family.empty()) throw ParseError("--gen needs a family name");
    return generate(family, params, RingSpec(field, 1));
}

struct InputArgs {
    std::string path;
    std::string gen;
    uint32_t field = 2;
    bool field_given = false;
};

// TensorFile, CharMatrixFile, or generator; --field applies to generators and
// characteristic matrices and must agree with a TensorFile header.
Tensor load_tensor_input(const InputArgs& in) {
    if (!in.gen.empty() && !in.path.empty())
        throw ParseError("give either an input file or --gen, not both");
    if (in.gen.empty() && in.path.empty())
        throw ParseError("an input file or --gen is required");
    if (!in.gen.empty()) return tensor_from_gen(in.gen, FieldSpec(in.field));
    const std::string text = slurp(in.path);
    if (first_word(text) == "field") {
        Tensor T = parse_tensor_file(text);
        if (in.field_given && T.ring.field.p != in.field)
            throw ParseError("--field " + std::to_string(in.field) +
                             " conflicts with the file header (field " +
                             std::to_string(T.ring.field.p) + ")");
        return T;
    }
    return parse_char_matrix(text, FieldSpec(in.field));
}

std::set<std::string> parse_pruners(const std::string& s) {
    std::set<std::string> out;
    const std::string t = trim(s);
    if (t.empty() || t == "none") return out;
    static const std::set<std::string> known = {"rref", "lask", "heuristic", "rref-k",
                                               "frequency"};
    for (const std::string& piece : split(t, ',')) {
        const std::string name = trim(piece);
        if (!known.count(name))
            throw ParseError("unknown pruner '" + name +
                             "' (known: rref, lask, heuristic, rref-k, frequency, none)");
        out.insert(name);
    }
    return out;
}

Branch parse_branch(const std::string& s) {
    if (s == "auto") return Branch::Auto;
    if (s == "enum-v") return Branch::EnumerateV;
    if (s == "kernel") return Branch::Kernel;
    throw ParseError("unknown --branch mode '" + s + "' (auto, enum-v, kernel)");
}

void print_stats(const SearchStats& s) {
    std::cout << "stats: nodes=" << s.nodes << " test_calls=" << s.test_calls
              << " rref_hits=" << s.rref_hits << " lask_hits=" << s.lask_hits
              << " heuristic_hits=" << s.heuristic_hits << " kth_hits=" << s.kth_hits
              << " frequency_hits=" << s.frequency_hits << " wall_ms=" << fix1(s.wall_ms)
              << "\n";
}

void print_border_stats(const BorderSearchStats& s) {
    std::cout << "stats: wall_ms=" << fix1(s.wall_ms) << "\n";
    for (size_t d = 0; d < s.depth.size(); ++d) {
        const BorderDepthStats& ds = s.depth[d];
        std::cout << "depth " << d << ": nodes=" << ds.nodes
                  << " cut_overwide=" << ds.cut_overwide << " solved_zero=" << ds.solved_zero
                  << " solved_child=" << ds.solved_child << " exhausted=" << ds.exhausted
                  << "\n";
    }
}

void emit_witness(const Cpd& w, const std::string& out_path) {
    const std::string text = write_cpd_file(w);
    std::cout << "witness:\n" << text;
    if (!out_path.empty()) spill(out_path, text);
}

// ---------------------------------------------------------------------------
// rank

struct RankArgs {
    InputArgs in;
    uint32_t le = 0;
    bool le_set = false;
    bool exact = false; // default when neither is given
    std::string pruners = "rref,lask,heuristic";
    std::string branch = "auto";
    uint32_t threads = 1;
    bool deterministic = false;
    bool long_ok = false;
    uint64_t progress = 0;
    std::string witness_out;
};

int run_rank(const RankArgs& a) {
    const Tensor T = load_tensor_input(a.in);
    if (!T.ring.is_field())
        throw UnsupportedError("rank works on field tensors (H = 1); use border-rank for "
                               "scaled-ring questions");
    SearchConfig cfg;
    cfg.pruners = parse_pruners(a.pruners);
    cfg.branch = parse_branch(a.branch);
    cfg.threads = a.threads;
    cfg.deterministic = a.deterministic;
    if (a.progress > 0) {
        cfg.progress_interval = a.progress;
        cfg.progress = [](const SearchProgress& pr) {
            std::cerr << "progress: level=" << pr.level << " tuples=" << pr.tuples_done << "/"
                      << pr.tuples_total << " nodes=" << pr.stats.nodes
                      << " rref_hits=" << pr.stats.rref_hits << " lask_hits=" << pr.stats.lask_hits
                      << " heuristic_hits=" << pr.stats.heuristic_hits << "\n";
        };
    }

    // Cost estimates use the concise shape, axes sorted descending, exactly
    // like the engine's own reduction.
    const std::vector<uint32_t> core_shape = make_concise(T, /*sort_axes=*/true).first.shape;
    const uint32_t p = T.ring.field.p;
    auto allowed = [&](uint32_t R) {
        const long double est = log2_search_cost(core_shape, p, R);
        std::cerr << "estimate: log2 rank computations at R=" << R << ": " << fix1(est) << "\n";
        if (est > kLog2Budget && !a.long_ok) {
            std::cerr << "budget: the estimate exceeds 2^34 steps; rerun with --long-ok\n";
            return false;
        }
        return true;
    };

    if (a.le_set) {
        if (!allowed(a.le)) return 3;
        const SearchOutcome out = search_rank_le(T, a.le, cfg);
        std::cout << "rank <= " << a.le << ": " << (out.witness ? "yes" : "no") << "\n";
        if (out.witness) emit_witness(*out.witness, a.witness_out);
        print_stats(out.stats);
        return 0;
    }

    // Exact rank: climb thresholds from the largest concise side.
    SearchStats total;
    uint32_t R = core_shape.empty() ? 0 : core_shape[0];
    while (true) {
        if (!allowed(R)) return 3;
        const SearchOutcome out = search_rank_le(T, R, cfg);
        total.nodes += out.stats.nodes;
        total.test_calls += out.stats.test_calls;
        total.rref_hits += out.stats.rref_hits;
        total.lask_hits += out.stats.lask_hits;
        total.heuristic_hits += out.stats.heuristic_hits;
        total.kth_hits += out.stats.kth_hits;
        total.frequency_hits += out.stats.frequency_hits;
        total.wall_ms += out.stats.wall_ms;
        if (out.witness) {
            std::cout << "rank = " << R << "\n";
            emit_witness(*out.witness, a.witness_out);
            print_stats(total);
            return 0;
        }
        if (R > T.numel())
            throw InternalError("exceeded the trivial rank upper bound without a witness");
        ++R;
    }
}

// ---------------------------------------------------------------------------
// border-rank

struct BorderArgs {
    InputArgs in;
    uint32_t H = 1;
    uint32_t le = 0;
    bool le_set = false;
    bool exact = false;
    uint64_t budget = 1ull << 34;
    bool long_ok = false;
    std::string witness_out;
    std::string scaled_out;
};

// x^(H-1) * T embedded into GF(p)[x]/(x^H).
Tensor scale_embed(const Tensor& T, uint32_t H) {
    const RingSpec ring(T.ring.field, H);
    Tensor S(ring, T.shape);
    for (size_t k = 0; k < T.data.size(); ++k) S.data[k][H - 1] = T.data[k][0];
    return S;
}

int run_border(const BorderArgs& a) {
    const Tensor T = load_tensor_input(a.in);
    if (!T.ring.is_field())
        throw UnsupportedError("border-rank input must be a field tensor; the ring comes "
                               "from --H");
    const Tensor S = scale_embed(T, a.H);
    if (!a.scaled_out.empty()) spill(a.scaled_out, write_tensor_file(S));

    BorderSearchConfig bcfg;
    bcfg.budget = a.budget;
    bcfg.force = a.long_ok;
    const std::vector<uint32_t> core_shape = border_concise(S).core.shape;
    const uint32_t p = T.ring.field.p;
    auto estimate = [&](uint32_t R) {
        std::cerr << "estimate: log2 recursion steps at R=" << R << ": "
                  << fix1(log2_border_search_cost(core_shape, p, a.H, R)) << "\n";
    };

    if (a.le_set) {
        estimate(a.le);
        const BorderSearchOutcome out = border_search_rank_le(S, a.le, bcfg);
        std::cout << "border-rank(H=" << a.H << ") <= " << a.le << ": "
                  << (out.witness ? "yes" : "no") << "\n";
        if (out.witness) emit_witness(*out.witness, a.witness_out);
        print_border_stats(out.stats);
        return 0;
    }

    for (uint32_t R = 0;; ++R) {
        estimate(R);
        const BorderSearchOutcome out = border_search_rank_le(S, R, bcfg);
        if (out.witness) {
            std::cout << "border-rank(H=" << a.H << ") = " << R << "\n";
            emit_witness(*out.witness, a.witness_out);
            print_border_stats(out.stats);
            return 0;
        }
        if (R > S.numel())
            throw InternalError("exceeded the trivial rank upper bound without a witness");
    }
}

// ---------------------------------------------------------------------------
// maxrank

struct MaxRankArgs {
    std::string shape;
    uint32_t field = 2;
    uint32_t R0 = 0;
    bool count_only = false;
    uint32_t threads = 1;
    bool json = false;
    uint64_t progress = 0;
    std::string witness_out;
};

int run_maxrank(const MaxRankArgs& a) {
    const std::vector<uint32_t> shape = parse_csv_u32(a.shape, "--shape length");
    if (shape.size() != 3 || shape[0] == 0)
        throw ParseError("--shape needs three comma-separated positive lengths");
    const RingSpec ring(FieldSpec(a.field), 1);

    if (a.count_only) {
        const uint32_t r0 = a.R0 / shape[0] + 1; // matches the search's seed filter
        CanonicalStream stream(shape, ring, r0);
        uint64_t count = 0;
        while (stream.next()) {
            ++count;
            if (a.progress > 0 && count % a.progress == 0)
                std::cerr << "progress: " << count << " tensors\n";
        }
        std::cout << count << "\n";
        return 0;
    }

    MaxRankConfig cfg;
    cfg.threads = a.threads;
    const MaxRankReport rep = maxrank_exhaustive(shape, ring, a.R0, cfg);
    if (a.json)
        std::cout << maxrank_report_json(rep) << "\n";
    else
        std::cout << maxrank_report_text(rep);
    if (!a.witness_out.empty()) spill(a.witness_out, write_tensor_file(rep.witness));
    return 0;
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsArgs {
    std::string shape;
    uint32_t field = 2;
};

int run_bounds(const BoundsArgs& a) {
    const std::vector<uint32_t> shape = parse_csv_u32(a.shape, "--shape length");
    if (shape.size() != 3)
        throw ParseError("--shape needs exactly three comma-separated lengths");
    const FieldSpec field(a.field);

    std::cout << "shape: " << shape[0] << " " << shape[1] << " " << shape[2] << "  (field GF("
              << field.p << "))\n";
    std::cout << "counting lower bound: " << bound_counting(shape) << "\n";

    uint32_t padding = 0;
    for (uint32_t c = 0; c < 3; ++c) {
        const uint32_t m = shape[(c + 1) % 3], n = shape[(c + 2) % 3];
        const uint64_t mn = static_cast<uint64_t>(m) * n;
        // The padding bound's shapes are (m, n, mn - k); k is the deficit.
        if (shape[c] <= mn)
            padding = std::max(
                padding, bound_skinny_lower(m, n, static_cast<uint32_t>(mn - shape[c])));
    }
    std::cout << "singleton-padding lower bound: " << padding << "\n";
    std::cout << "slicewise upper bound: " << bound_trivial_upper(shape) << "\n";
    std::cout << "corner-peeling upper bound: " << bound_howell_upper(shape) << "\n";

    std::vector<uint32_t> sorted = shape;
    std::sort(sorted.begin(), sorted.end(), std::greater<uint32_t>());
    if (sorted[2] == 2)
        std::cout << "two-layer exact value: " << bound_nn2(sorted[0], sorted[1], field) << "\n";

    const ShapeBounds sb = shape_bounds(shape, field);
    if (sb.lower.value == sb.upper.value)
        std::cout << "max rank = " << sb.lower.value << "  (" << sb.upper.source << ", exact)\n";
    else
        std::cout << "max rank in [" << sb.lower.value << ", " << sb.upper.value << "]  ("
                  << sb.lower.source << " / " << sb.upper.source << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::string tensor_path;
    std::string cpd_path;
    uint32_t field = 2;
    bool field_given = false;
};

int run_verify(const VerifyArgs& a) {
    InputArgs in;
    in.path = a.tensor_path;
    in.field = a.field;
    in.field_given = a.field_given;
    const Tensor T = load_tensor_input(in);
    const Cpd w = parse_cpd_file(slurp(a.cpd_path));

    if (!(w.ring == T.ring))
        throw ShapeError("cpd ring GF(" + std::to_string(w.ring.field.p) + ")[x]/(x^" +
                         std::to_string(w.ring.H) + ") does not match the tensor's GF(" +
                         std::to_string(T.ring.field.p) + ")[x]/(x^" +
                         std::to_string(T.ring.H) + ")");
    if (w.ndim() != T.ndim())
        throw ShapeError("cpd has " + std::to_string(w.ndim()) + " factor blocks, tensor has " +
                         std::to_string(T.ndim()) + " axes");
    for (uint32_t d = 0; d < T.ndim(); ++d)
        if (w.factors[d].rows != T.shape[d])
            throw ShapeError("factor " + std::to_string(d) + " has " +
                             std::to_string(w.factors[d].rows) + " rows, tensor axis " +
                             std::to_string(d) + " has length " + std::to_string(T.shape[d]));

    const Tensor E = cpd_eval(w, T.shape);
    for (uint64_t k = 0; k < T.numel(); ++k) {
        if (E.data[k] == T.data[k]) continue;
        std::vector<uint32_t> idx(T.ndim());
        uint64_t rem = k;
        for (uint32_t d = T.ndim(); d-- > 0;) {
            idx[d] = static_cast<uint32_t>(rem % T.shape[d]);
            rem /= T.shape[d];
        }
        std::cout << "MISMATCH at (";
        for (uint32_t d = 0; d < idx.size(); ++d)
            std::cout << (d ? "," : "") << idx[d];
        std::cout << ")\n";
        return 1;
    }
    std::cout << "OK\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact CPD toolkit: tensor rank search over finite fields and border rings"};
    app.require_subcommand(1);

    RankArgs ra;
    CLI::App* rank_sc = app.add_subcommand("rank", "exact rank or rank <= R over a prime field");
    rank_sc->add_option("input", ra.in.path, "TensorFile or CharMatrixFile path");
    rank_sc->add_option("--gen", ra.in.gen, "generate the input: family[:p1,p2,...]");
    CLI::Option* ra_field = rank_sc->add_option(
        "--field", ra.in.field, "prime modulus for --gen and characteristic matrices");
    CLI::Option* ra_le = rank_sc->add_option("--le", ra.le, "decide rank <= R");
    CLI::Option* ra_exact = rank_sc->add_flag("--exact", ra.exact, "compute the exact rank (default)");
    ra_le->excludes(ra_exact);
    ra_exact->excludes(ra_le);
    rank_sc->add_option("--pruners", ra.pruners,
                        "comma list: rref,lask,heuristic,rref-k,frequency or none");
    rank_sc->add_option("--branch", ra.branch, "child enumeration: auto, enum-v, kernel");
    rank_sc->add_option("--threads", ra.threads, "worker threads for the top level")
        ->check(CLI::Range(1u, 256u));
    rank_sc->add_flag("--deterministic", ra.deterministic, "force the sequential node order");
    rank_sc->add_flag("--long-ok", ra.long_ok, "run even when the estimate exceeds 2^34 steps");
    rank_sc->add_option("--progress", ra.progress, "progress line to stderr every N nodes");
    rank_sc->add_option("--witness-out", ra.witness_out, "also write the witness CPD to this file");

    BorderArgs ba;
    CLI::App* border_sc =
        app.add_subcommand("border-rank", "rank of x^(H-1) * T over GF(p)[x]/(x^H)");
    border_sc->add_option("input", ba.in.path, "TensorFile or CharMatrixFile path");
    border_sc->add_option("--gen", ba.in.gen, "generate the input: family[:p1,p2,...]");
    CLI::Option* ba_field = border_sc->add_option(
        "--field", ba.in.field, "prime modulus for --gen and characteristic matrices");
    border_sc->add_option("--H", ba.H, "exponent threshold of the border ring")
        ->check(CLI::Range(1u, 64u));
    CLI::Option* ba_le = border_sc->add_option("--le", ba.le, "decide border-rank <= R");
    CLI::Option* ba_exact =
        border_sc->add_flag("--exact", ba.exact, "compute the exact border rank (default)");
    ba_le->excludes(ba_exact);
    ba_exact->excludes(ba_le);
    border_sc->add_option("--budget", ba.budget, "refuse runs over this many recursion steps");
    border_sc->add_flag("--long-ok", ba.long_ok, "run regardless of the step estimate");
    border_sc->add_option("--witness-out", ba.witness_out,
                          "also write the witness CPD to this file");
    border_sc->add_option("--scaled-out", ba.scaled_out,
                          "write the scaled ring tensor x^(H-1) * T to this file");

    MaxRankArgs ma;
    CLI::App* max_sc =
        app.add_subcommand("maxrank", "exhaustive maximum rank over a shape (GF(2))");
    max_sc->add_option("--shape", ma.shape, "axis lengths m,n,q")->required();
    max_sc->add_option("--field", ma.field, "field modulus (2)");
    max_sc->add_option("--R0", ma.R0, "prior lower bound; seeds the slice-rank filter");
    max_sc->add_flag("--count-only", ma.count_only, "stream canonical tensors, print the count");
    max_sc->add_option("--threads", ma.threads, "parallel rank searches")
        ->check(CLI::Range(1u, 256u));
    max_sc->add_flag("--json", ma.json, "print the report as JSON");
    max_sc->add_option("--progress", ma.progress,
                       "with --count-only: progress line to stderr every N tensors");
    max_sc->add_option("--witness-out", ma.witness_out,
                       "write the witness tensor as a TensorFile");

    BoundsArgs oa;
    CLI::App* bounds_sc =
        app.add_subcommand("bounds", "closed-form rank bounds for a 3-dimensional shape");
    bounds_sc->add_option("--shape", oa.shape, "axis lengths m,n,q")->required();
    bounds_sc->add_option("--field", oa.field, "prime modulus");

    VerifyArgs va;
    CLI::App* verify_sc = app.add_subcommand("verify", "check a CPD file against a tensor file");
    verify_sc->add_option("tensor-file", va.tensor_path, "TensorFile or CharMatrixFile path")
        ->required();
    verify_sc->add_option("cpd-file", va.cpd_path, "CpdFile path")->required();
    CLI::Option* va_field = verify_sc->add_option(
        "--field", va.field, "prime modulus for characteristic-matrix input");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    ra.le_set = ra_le->count() > 0;
    ra.in.field_given = ra_field->count() > 0;
    ba.le_set = ba_le->count() > 0;
    ba.in.field_given = ba_field->count() > 0;
    va.field_given = va_field->count() > 0;

    try {
        if (rank_sc->parsed()) return run_rank(ra);
        if (border_sc->parsed()) return run_border(ba);
        if (max_sc->parsed()) return run_maxrank(ma);
        if (bounds_sc->parsed()) return run_bounds(oa);
        if (verify_sc->parsed()) return run_verify(va);
    } catch (const BudgetError& e) {
        std::cerr << "budget: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2; // no subcommand matched (require_subcommand should prevent this)
}
