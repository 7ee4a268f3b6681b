#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "feduv/galois.hpp"

namespace feduv::ecc {

struct NoValidCode : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct TooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

using Bits = std::vector<uint8_t>;

// Narrow-sense primitive binary BCH code of length c = 2^m - 1.
struct CodeSpec {
    FieldSpec field;
    int c = 0;                   // code length in bits
    int k = 0;                   // message length in bits
    int t = 0;                   // designed error-correcting capability
    Poly2 generator_poly;        // degree c - k, coefficient of x^i at index i

    int designed_distance() const { return 2 * t + 1; }
};

// Codeword with both representations. bits[i] is the coefficient of
// x^(c-1-i), so bits[0..k-1] are the systematic message prefix. The bipolar
// map is fixed as 0 -> +1, 1 -> -1.
struct Codeword {
    Bits bits;
    std::vector<double> bipolar;
};

std::vector<double> to_bipolar(const Bits& bits);

// Constructs the BCH code of length 2^m - 1 whose dimension is the smallest
// achievable k >= k_min, with the generator polynomial built as the product
// of the distinct minimal polynomials of alpha^1 .. alpha^2t for the largest
// t that still leaves dimension k.
CodeSpec build_code(int m, int k_min);

// Systematic encoding: message bits first, parity bits last.
Codeword encode(const CodeSpec& spec, const Bits& message);

int hamming_distance(const Bits& a, const Bits& b);

// True minimum distance by enumerating all 2^k codeword weights.
int min_distance_exhaustive(const CodeSpec& spec);

// Polynomial divisibility check under the bit layout above.
bool divisible_by_generator(const CodeSpec& spec, const Bits& codeword_bits);

// --- codeword file format -------------------------------------------------
// Header line "c=<c>,k=<k>,m=<m>", then one record per line:
// "<user_index>,<hex>". The hex string is MSB-first: its most significant
// bit is bit index 0 (the first message bit); unused low bits of the last
// nibble are zero.

std::string bits_to_hex(const Bits& bits);
Bits hex_to_bits(const std::string& hex, int nbits);

struct CodewordRecord {
    int user_index;
    Bits bits;
};

void write_codeword_file(std::ostream& os, const CodeSpec& spec,
                         const std::vector<CodewordRecord>& records);
std::vector<CodewordRecord> read_codeword_file(std::istream& is, CodeSpec* spec_out = nullptr);

}  // namespace feduv::ecc
