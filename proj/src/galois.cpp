#include "feduv/galois.hpp"

#include <algorithm>
#include <string>

namespace feduv::ecc {

FieldSpec lookup_field(int m) {
    // Lowest-weight primitive polynomials (Lin & Costello, Appendix B).
    static const uint32_t table[] = {
        /* m=3  */ 0x0b,   // x^3 + x + 1
        /* m=4  */ 0x13,   // x^4 + x + 1
        /* m=5  */ 0x25,   // x^5 + x^2 + 1
        /* m=6  */ 0x43,   // x^6 + x + 1
        /* m=7  */ 0x89,   // x^7 + x^3 + 1
        /* m=8  */ 0x11d,  // x^8 + x^4 + x^3 + x^2 + 1
        /* m=9  */ 0x211,  // x^9 + x^4 + 1
        /* m=10 */ 0x409,  // x^10 + x^3 + 1
    };
    if (m < 3 || m > 10)
        throw FieldError("lookup_field: m must be in [3, 10], got " + std::to_string(m));
    return FieldSpec{m, table[m - 3]};
}

GaloisField::GaloisField(const FieldSpec& spec) : spec_(spec), n_((1 << spec.m) - 1) {
    if (spec.m < 3 || spec.m > 10) throw FieldError("GaloisField: m out of range");
    if ((spec.primitive_poly >> spec.m) != 1u)
        throw FieldError("GaloisField: primitive_poly degree != m");

    alpha_to_.assign(static_cast<size_t>(n_), 0);
    index_of_.assign(static_cast<size_t>(n_) + 1, -1);

    // Successive multiplication by alpha with reduction by the defining
    // polynomial: alpha^m = primitive_poly with the x^m term dropped.
    const int reduction = static_cast<int>(spec.primitive_poly & ((1u << spec.m) - 1u));
    int x = 1;
    for (int i = 0; i < n_; ++i) {
        alpha_to_[static_cast<size_t>(i)] = x;
        if (index_of_[static_cast<size_t>(x)] != -1)
            throw FieldError("GaloisField: polynomial is not primitive (cycle before 2^m - 1)");
        index_of_[static_cast<size_t>(x)] = i;
        x <<= 1;
        if (x > n_) x = (x ^ (1 << spec.m)) ^ reduction;
    }
    index_of_[0] = -1;
}

int GaloisField::alpha_pow(int i) const {
    int e = i % n_;
    if (e < 0) e += n_;
    return alpha_to_[static_cast<size_t>(e)];
}

int GaloisField::log_alpha(int x) const {
    if (x <= 0 || x > n_) throw FieldError("log_alpha: argument outside GF(2^m)*");
    return index_of_[static_cast<size_t>(x)];
}

int GaloisField::mul(int a, int b) const {
    if (a == 0 || b == 0) return 0;
    return alpha_pow(log_alpha(a) + log_alpha(b));
}

bool GaloisField::is_primitive(const FieldSpec& spec) {
    try {
        GaloisField gf(spec);
        // construction already walks the full orbit of alpha; double-check the
        // period is exactly 2^m - 1
        return gf.alpha_pow(gf.group_order()) == 1 && gf.alpha_pow(1) != 1;
    } catch (const FieldError&) {
        return false;
    }
}

int poly2_degree(const Poly2& p) {
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i)
        if (p[static_cast<size_t>(i)]) return i;
    return -1;
}

Poly2 poly2_trim(Poly2 p) {
    p.resize(static_cast<size_t>(poly2_degree(p) + 1));
    return p;
}

Poly2 poly2_mul(const Poly2& a, const Poly2& b) {
    int da = poly2_degree(a), db = poly2_degree(b);
    if (da < 0 || db < 0) return {};
    Poly2 out(static_cast<size_t>(da + db + 1), 0);
    for (int i = 0; i <= da; ++i) {
        if (!a[static_cast<size_t>(i)]) continue;
        for (int j = 0; j <= db; ++j)
            out[static_cast<size_t>(i + j)] ^= b[static_cast<size_t>(j)];
    }
    return out;
}

Poly2 poly2_mod(const Poly2& a, const Poly2& divisor) {
    int dd = poly2_degree(divisor);
    if (dd < 0) throw FieldError("poly2_mod: division by zero polynomial");
    Poly2 r = a;
    for (int i = poly2_degree(r); i >= dd; --i) {
        if (!r[static_cast<size_t>(i)]) continue;
        for (int j = 0; j <= dd; ++j)
            r[static_cast<size_t>(i - dd + j)] ^= divisor[static_cast<size_t>(j)];
    }
    return poly2_trim(r);
}

std::vector<std::vector<int>> cyclotomic_cosets(int n) {
    std::vector<char> seen(static_cast<size_t>(n), 0);
    seen[0] = 1;
    std::vector<std::vector<int>> cosets;
    for (int s = 1; s < n; ++s) {
        if (seen[static_cast<size_t>(s)]) continue;
        std::vector<int> coset;
        int j = s;
        do {
            coset.push_back(j);
            seen[static_cast<size_t>(j)] = 1;
            j = (2 * j) % n;
        } while (j != s);
        cosets.push_back(std::move(coset));
    }
    return cosets;
}

}  // namespace feduv::ecc
