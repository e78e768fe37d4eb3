#include "cpd/ring.hpp"

namespace cpd {

Poly poly_add(const Poly& a, const Poly& b, const RingSpec& ring) {
    Poly r(ring.H);
    for (uint32_t h = 0; h < ring.H; ++h) r[h] = ring.field.add(a[h], b[h]);
    return r;
}

Poly poly_sub(const Poly& a, const Poly& b, const RingSpec& ring) {
    Poly r(ring.H);
    for (uint32_t h = 0; h < ring.H; ++h) r[h] = ring.field.sub(a[h], b[h]);
    return r;
}

Poly poly_neg(const Poly& a, const RingSpec& ring) {
    Poly r(ring.H);
    for (uint32_t h = 0; h < ring.H; ++h) r[h] = ring.field.neg(a[h]);
    return r;
}

Poly poly_mul(const Poly& a, const Poly& b, const RingSpec& ring) {
    Poly r(ring.H, 0);
    for (uint32_t i = 0; i < ring.H; ++i) {
        if (a[i] == 0) continue;
        for (uint32_t j = 0; i + j < ring.H; ++j) {
            if (b[j] == 0) continue;
            r[i + j] = ring.field.add(r[i + j], ring.field.mul(a[i], b[j]));
        }
    }
    return r;
}

Poly poly_shift_up(const Poly& a, const RingSpec& ring) {
    Poly r(ring.H, 0);
    for (uint32_t h = 0; h + 1 < ring.H; ++h) r[h + 1] = a[h];
    return r;
}

Poly poly_shift_down(const Poly& a, const RingSpec& ring) {
    Poly r(ring.H, 0);
    for (uint32_t h = 1; h < ring.H; ++h) r[h - 1] = a[h];
    return r;
}

Poly border_inverse(const Poly& a, const RingSpec& ring) {
    if (a[0] == 0) throw NotInvertibleError("ring element is a multiple of x");
    const FieldSpec& f = ring.field;
    uint32_t inv0 = f.inv(a[0]);
    Poly b(ring.H, 0);
    b[0] = inv0;
    for (uint32_t h = 1; h < ring.H; ++h) {
        uint32_t acc = 0;
        for (uint32_t hp = 0; hp < h; ++hp) acc = f.add(acc, f.mul(a[h - hp], b[hp]));
        b[h] = f.neg(f.mul(inv0, acc));
    }
    return b;
}

} // namespace cpd
