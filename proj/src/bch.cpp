#include "feduv/bch.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

namespace feduv::ecc {

std::vector<double> to_bipolar(const Bits& bits) {
    std::vector<double> v(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) v[i] = bits[i] ? -1.0 : 1.0;
    return v;
}

namespace {

// Roots alpha^j of the generator for capability t: the union of the
// cyclotomic cosets meeting {1 .. 2t}.
std::set<int> generator_roots(const std::vector<std::vector<int>>& cosets, int t) {
    std::set<int> roots;
    for (const auto& coset : cosets) {
        bool hit = false;
        for (int e : coset) {
            if (e >= 1 && e <= 2 * t) {
                hit = true;
                break;
            }
        }
        if (hit) roots.insert(coset.begin(), coset.end());
    }
    return roots;
}

// g(x) = prod_{j in roots} (x - alpha^j), expanded over GF(2^m). For a union
// of full cosets all coefficients land in {0, 1}.
Poly2 expand_generator(const GaloisField& gf, const std::set<int>& roots) {
    std::vector<int> g = {1};  // coefficients in GF(2^m), index = power
    for (int j : roots) {
        int a = gf.alpha_pow(j);
        std::vector<int> next(g.size() + 1, 0);
        for (size_t i = 0; i < g.size(); ++i) {
            next[i + 1] ^= g[i];            // x * g
            next[i] ^= gf.mul(a, g[i]);     // alpha^j * g
        }
        g = std::move(next);
    }
    Poly2 out(g.size());
    for (size_t i = 0; i < g.size(); ++i) {
        if (g[i] != 0 && g[i] != 1)
            throw FieldError("expand_generator: coefficient outside GF(2)");
        out[i] = static_cast<uint8_t>(g[i]);
    }
    return out;
}

}  // namespace

CodeSpec build_code(int m, int k_min) {
    if (k_min < 1) throw NoValidCode("build_code: k_min must be >= 1");
    FieldSpec field = lookup_field(m);  // throws for m outside [3, 10]
    const int c = (1 << m) - 1;
    auto cosets = cyclotomic_cosets(c);

    // Dimension is non-increasing in t; scan for the largest t whose
    // dimension is still >= k_min, which also yields the smallest valid
    // dimension >= k_min.
    int best_t = -1, best_k = -1;
    for (int t = 1; 2 * t + 1 <= c; ++t) {
        int deg = static_cast<int>(generator_roots(cosets, t).size());
        int k = c - deg;
        if (k < k_min || k < 1) break;
        best_t = t;
        best_k = k;
    }
    if (best_t < 0)
        throw NoValidCode("build_code: no BCH dimension >= " + std::to_string(k_min) +
                          " exists for m = " + std::to_string(m));

    GaloisField gf(field);
    auto roots = generator_roots(cosets, best_t);
    CodeSpec spec;
    spec.field = field;
    spec.c = c;
    spec.k = best_k;
    spec.t = best_t;
    spec.generator_poly = expand_generator(gf, roots);
    if (poly2_degree(spec.generator_poly) != c - best_k)
        throw FieldError("build_code: generator degree inconsistent with dimension");
    return spec;
}

Codeword encode(const CodeSpec& spec, const Bits& message) {
    if (static_cast<int>(message.size()) != spec.k)
        throw LengthMismatch("encode: message length " + std::to_string(message.size()) +
                             " != k = " + std::to_string(spec.k));
    const int r = spec.c - spec.k;  // parity bits

    // LFSR division: parity(x) = x^r * msg(x) mod g(x), message bit 0 being
    // the coefficient of x^(c-1). rem[j] holds the coefficient of x^j.
    Bits rem(static_cast<size_t>(r), 0);
    for (int i = 0; i < spec.k; ++i) {
        uint8_t feedback = message[static_cast<size_t>(i)] ^ rem[static_cast<size_t>(r - 1)];
        for (int j = r - 1; j > 0; --j)
            rem[static_cast<size_t>(j)] =
                rem[static_cast<size_t>(j - 1)] ^
                (feedback & spec.generator_poly[static_cast<size_t>(j)]);
        rem[0] = feedback & spec.generator_poly[0];
    }

    Codeword cw;
    cw.bits.resize(static_cast<size_t>(spec.c));
    std::copy(message.begin(), message.end(), cw.bits.begin());
    for (int j = 0; j < r; ++j)
        cw.bits[static_cast<size_t>(spec.k + j)] = rem[static_cast<size_t>(r - 1 - j)];
    cw.bipolar = to_bipolar(cw.bits);
    return cw;
}

int hamming_distance(const Bits& a, const Bits& b) {
    if (a.size() != b.size())
        throw LengthMismatch("hamming_distance: lengths differ");
    int d = 0;
    for (size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
    return d;
}

int min_distance_exhaustive(const CodeSpec& spec) {
    if (spec.k > 16)
        throw TooLarge("min_distance_exhaustive: k = " + std::to_string(spec.k) + " > 16");
    // Linearity: d_min equals the minimum nonzero codeword weight.
    int best = spec.c + 1;
    Bits message(static_cast<size_t>(spec.k), 0);
    for (uint32_t msg = 1; msg < (1u << spec.k); ++msg) {
        for (int i = 0; i < spec.k; ++i)
            message[static_cast<size_t>(i)] = static_cast<uint8_t>((msg >> i) & 1u);
        Codeword cw = encode(spec, message);
        int w = 0;
        for (uint8_t bit : cw.bits) w += bit;
        best = std::min(best, w);
    }
    return best;
}

bool divisible_by_generator(const CodeSpec& spec, const Bits& codeword_bits) {
    if (static_cast<int>(codeword_bits.size()) != spec.c) return false;
    Poly2 p(static_cast<size_t>(spec.c), 0);
    for (int i = 0; i < spec.c; ++i)
        p[static_cast<size_t>(spec.c - 1 - i)] = codeword_bits[static_cast<size_t>(i)];
    return poly2_degree(poly2_mod(p, spec.generator_poly)) < 0;
}

std::string bits_to_hex(const Bits& bits) {
    static const char* digits = "0123456789abcdef";
    const size_t nibbles = (bits.size() + 3) / 4;
    std::vector<int> nib(nibbles, 0);
    for (size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) nib[i / 4] |= 8 >> (i % 4);
    std::string hex(nibbles, '0');
    for (size_t i = 0; i < nibbles; ++i) hex[i] = digits[nib[i]];
    return hex;
}

Bits hex_to_bits(const std::string& hex, int nbits) {
    if (static_cast<int>(hex.size() * 4) < nbits)
        throw LengthMismatch("hex_to_bits: hex string too short");
    Bits bits(static_cast<size_t>(nbits), 0);
    for (int i = 0; i < nbits; ++i) {
        char ch = hex[static_cast<size_t>(i) / 4];
        int val;
        if (ch >= '0' && ch <= '9') val = ch - '0';
        else if (ch >= 'a' && ch <= 'f') val = ch - 'a' + 10;
        else if (ch >= 'A' && ch <= 'F') val = ch - 'A' + 10;
        else throw LengthMismatch("hex_to_bits: invalid hex digit");
        bits[static_cast<size_t>(i)] = static_cast<uint8_t>((val >> (3 - i % 4)) & 1);
    }
    return bits;
}

void write_codeword_file(std::ostream& os, const CodeSpec& spec,
                         const std::vector<CodewordRecord>& records) {
    os << "c=" << spec.c << ",k=" << spec.k << ",m=" << spec.field.m << "\n";
    for (const auto& rec : records)
        os << rec.user_index << "," << bits_to_hex(rec.bits) << "\n";
}

std::vector<CodewordRecord> read_codeword_file(std::istream& is, CodeSpec* spec_out) {
    std::string header;
    if (!std::getline(is, header))
        throw LengthMismatch("read_codeword_file: empty file");
    int c = 0, k = 0, m = 0;
    if (std::sscanf(header.c_str(), "c=%d,k=%d,m=%d", &c, &k, &m) != 3)
        throw LengthMismatch("read_codeword_file: malformed header: " + header);
    if (spec_out) {
        spec_out->c = c;
        spec_out->k = k;
        spec_out->field.m = m;
    }
    std::vector<CodewordRecord> records;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw LengthMismatch("read_codeword_file: malformed record: " + line);
        CodewordRecord rec;
        rec.user_index = std::stoi(line.substr(0, comma));
        rec.bits = hex_to_bits(line.substr(comma + 1), c);
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace feduv::ecc
