#include "cpd/field.hpp"

namespace cpd {

bool is_prime_u32(uint32_t n) {
    if (n < 2) return false;
    if (n < 4) return true;
    if (n % 2 == 0) return false;
    for (uint64_t d = 3; d * d <= n; d += 2) {
        if (n % d == 0) return false;
    }
    return true;
}

FieldSpec::FieldSpec(uint32_t modulus) : p(modulus) {
    if (p > (1u << 31)) throw NotPrimeError("modulus too large (must be <= 2^31)");
    if (!is_prime_u32(p)) throw NotPrimeError("modulus " + std::to_string(p) + " is not prime");
}

uint32_t FieldSpec::inv(uint32_t a) const {
    a %= p;
    if (a == 0) throw ZeroInverseError("inverse of zero in GF(" + std::to_string(p) + ")");
    // Extended Euclid on (a, p); p prime guarantees gcd 1.
    int64_t r0 = a, r1 = p, s0 = 1, s1 = 0;
    while (r1 != 0) {
        int64_t q = r0 / r1;
        int64_t r2 = r0 - q * r1;
        int64_t s2 = s0 - q * s1;
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
    }
    return reduce(s0);
}

uint32_t field_inverse(uint32_t a, const FieldSpec& field) { return field.inv(a); }

} // namespace cpd
