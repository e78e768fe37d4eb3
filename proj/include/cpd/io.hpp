#pragma once

// Plain-text file formats: tensors, characteristic matrices, and CPDs.
//
// Each format has a canonical writer and a whitespace-tolerant parser; the
// writers emit exactly the text the parsers accept, so write(parse(text))
// reproduces canonical text byte for byte and parse(write(x)) == x for every
// value. Parse errors carry the line and column of the offending token.

#include <string>

#include "cpd/tensor.hpp"

namespace cpd {

// One ring element as a polynomial in x: terms in increasing exponent joined
// by `+`, each `c`, `x`, `c*x`, `x^k`, or `c*x^k` with the coefficient 1
// elided except at exponent 0; the zero element is `0`. A plain field element
// (H = 1) prints as the bare residue.
std::string poly_text(const Poly& a);

// TensorFile: one header line each (`#` starts a comment anywhere)
//   field <p>
//   H <h>          (optional; omitted means 1)
//   shape <n0> <n1> ...
// followed by the row-major entries as whitespace-separated tokens in the
// poly_text syntax. Coefficients must be reduced mod p and exponents must
// stay below H; entry count must match the shape.
Tensor parse_tensor_file(const std::string& text);
std::string write_tensor_file(const Tensor& T);

// CharMatrixFile: a grid of cells, rows split on newlines or `;`, cells on
// `,`. Each cell is a GF(p)-linear combination of the symbols v0, v1, ...:
// terms joined by `+`, each `0`, `v<i>`, `c*v<i>`, or `cv<i>` with 0 < c < p.
// A grid of n rows and q cells per row using symbols v0..v_{m-1} parses to
// the m x n x q tensor with T[i][j][k] = coefficient of v_i in cell (j, k);
// at least one symbol must appear somewhere. The field comes from the caller.
Tensor parse_char_matrix(const std::string& text, const FieldSpec& field);
std::string write_char_matrix(const Tensor& T);

// CpdFile: header lines
//   field <p>
//   H <h>          (optional; omitted means 1)
//   rank <R>
// then one block per axis: a line `factor <n_d> <R>` followed by n_d * R
// entries (row-major, poly_text syntax). Every block must have R columns.
Cpd parse_cpd_file(const std::string& text);
std::string write_cpd_file(const Cpd& cpd);

} // namespace cpd
