#pragma once

#include <cstdint>
#include <vector>

#include "cpd/field.hpp"

namespace cpd {

// The border ring GF(p)[x]/(x^H). H = 1 degenerates to the base field.
struct RingSpec {
    FieldSpec field;
    uint32_t H;

    RingSpec(FieldSpec f, uint32_t exponent_threshold) : field(f), H(exponent_threshold) {
        if (H < 1) throw ShapeError("ring exponent threshold H must be >= 1");
    }
    bool is_field() const { return H == 1; }
    bool operator==(const RingSpec& o) const { return field == o.field && H == o.H; }
};

// A ring element: exactly H coefficients, c[h] = coefficient of x^h, each in [0, p).
using Poly = std::vector<uint32_t>;

inline Poly poly_zero(const RingSpec& ring) { return Poly(ring.H, 0); }
inline Poly poly_one(const RingSpec& ring) {
    Poly c(ring.H, 0);
    c[0] = 1;
    return c;
}
// The scalar v embedded as a constant polynomial.
inline Poly poly_const(uint32_t v, const RingSpec& ring) {
    Poly c(ring.H, 0);
    c[0] = v % ring.field.p;
    return c;
}

inline bool poly_is_zero(const Poly& a) {
    for (uint32_t c : a)
        if (c != 0) return false;
    return true;
}
// Units of GF(p)[x]/(x^H) are exactly the elements with nonzero constant coefficient.
inline bool poly_is_unit(const Poly& a) { return a[0] != 0; }

Poly poly_add(const Poly& a, const Poly& b, const RingSpec& ring);
Poly poly_sub(const Poly& a, const Poly& b, const RingSpec& ring);
Poly poly_neg(const Poly& a, const RingSpec& ring);
Poly poly_mul(const Poly& a, const Poly& b, const RingSpec& ring);
// Multiplication by x (coefficients shift up; the x^{H-1} coefficient falls off).
Poly poly_shift_up(const Poly& a, const RingSpec& ring);
// Exact division by x for elements that are multiples of x (coefficients shift
// down; the new x^{H-1} coefficient is 0).
Poly poly_shift_down(const Poly& a, const RingSpec& ring);
// True iff every nonzero coefficient sits at exponent >= 1, i.e. a ∈ x·ring.
inline bool poly_multiple_of_x(const Poly& a) { return a[0] == 0; }

// Inverse of a unit via the triangular recurrence
//   β_0 = 1/α_0,   β_h = −(1/α_0) · Σ_{h'<h} α_{h−h'} β_{h'}
// in O(H^2) coefficient operations. Throws NotInvertibleError when α_0 = 0.
Poly border_inverse(const Poly& a, const RingSpec& ring);

} // namespace cpd
