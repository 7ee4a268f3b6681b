#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace feduv::ecc {

struct FieldError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Degree-m primitive polynomial over GF(2) defining GF(2^m).
// Bitmask convention: bit i of primitive_poly is the coefficient of x^i,
// so the mask always has bits 0 and m set.
struct FieldSpec {
    int m = 0;
    uint32_t primitive_poly = 0;
};

// Built-in primitive polynomial per extension degree, m = 3..10.
// Fixed table keeps field construction identical across runs and platforms.
FieldSpec lookup_field(int m);

// GF(2^m) arithmetic through log/antilog tables. alpha = x is the primitive
// element; elements are represented as m-bit polynomial masks.
class GaloisField {
public:
    explicit GaloisField(const FieldSpec& spec);

    int m() const { return spec_.m; }
    int group_order() const { return n_; }  // 2^m - 1

    // alpha^i for any integer exponent (reduced mod 2^m - 1)
    int alpha_pow(int i) const;
    // discrete log of a nonzero element
    int log_alpha(int x) const;
    int mul(int a, int b) const;

    // true iff x (as a polynomial mask) generates the full multiplicative
    // group, i.e. the defining polynomial is primitive; exhaustive order test
    static bool is_primitive(const FieldSpec& spec);

private:
    FieldSpec spec_;
    int n_;
    std::vector<int> alpha_to_;  // alpha_to_[i] = alpha^i, i in [0, n)
    std::vector<int> index_of_;  // inverse map, index_of_[0] = -1
};

// Polynomial over GF(2), coefficient of x^i at index i.
using Poly2 = std::vector<uint8_t>;

int poly2_degree(const Poly2& p);  // -1 for the zero polynomial
Poly2 poly2_mul(const Poly2& a, const Poly2& b);
Poly2 poly2_mod(const Poly2& a, const Poly2& divisor);
Poly2 poly2_trim(Poly2 p);

// Cyclotomic cosets of 2 modulo n, keyed by their smallest representative,
// sorted by representative; coset of 0 is excluded.
std::vector<std::vector<int>> cyclotomic_cosets(int n);

}  // namespace feduv::ecc
