#pragma once

#include <cstdint>
#include <optional>

#include "cpd/tensor.hpp"

namespace cpd {

// Brute-force baselines for differential testing. Deliberately simple and
// independent of the search engine: nothing here calls into cpd_search,
// pruners, or border_search.

// Exact rank of a field tensor by exhaustive rank-1 subtraction with
// iterative deepening. Every candidate rank-1 term visited costs one step;
// exceeding `budget` steps throws BudgetError. Only for tiny instances.
uint32_t brute_rank(const Tensor& T, uint64_t budget = 1ull << 28);

// All p^(prod shape) tensors of a shape over GF(p), in lex order (entries
// read row-major as base-p digits, first entry most significant).
struct TensorEnumerator {
    TensorEnumerator(const RingSpec& ring, std::vector<uint32_t> shape);

    // Total number of tensors (throws BudgetError if it cannot fit a u64).
    uint64_t total() const;

    // Next tensor, or nullopt when exhausted.
    std::optional<Tensor> next();

  private:
    Tensor cur_;
    bool done_ = false;
    bool first_ = true;
};

// Entrywise (coefficientwise, over a border ring) check cpd_eval(cpd) == T.
// Throws ShapeError if the CPD's arity or row counts do not match T.
bool verify_cpd(const Tensor& T, const Cpd& cpd);

} // namespace cpd
