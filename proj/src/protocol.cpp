#include "feduv/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "feduv/rng.hpp"

namespace feduv::protocol {

namespace {

ecc::Bits uint_to_bits_msb(uint64_t value, int nbits) {
    ecc::Bits bits(static_cast<size_t>(nbits), 0);
    for (int i = 0; i < nbits; ++i)
        bits[static_cast<size_t>(i)] = static_cast<uint8_t>((value >> (nbits - 1 - i)) & 1u);
    return bits;
}

}  // namespace

std::vector<BaseVectorAssignment> assign_base_vectors(int K, int l_b, uint64_t server_seed) {
    if (K < 1) throw PrefixSpaceExhausted("assign_base_vectors: K must be >= 1");
    if (l_b < 1 || l_b > 63 || (l_b < 63 && (uint64_t{1} << l_b) < static_cast<uint64_t>(K)))
        throw PrefixSpaceExhausted("assign_base_vectors: 2^l_b < K (l_b = " + std::to_string(l_b) +
                                   ", K = " + std::to_string(K) + ")");

    // Counters 0..K-1 shuffled by the server seed: uniqueness by construction,
    // no rejection sampling.
    std::vector<uint64_t> values(static_cast<size_t>(K));
    for (int i = 0; i < K; ++i) values[static_cast<size_t>(i)] = static_cast<uint64_t>(i);
    Rng rng(derive_seed(server_seed, 0x6261u /* "ba" */));
    rng.shuffle(values);

    std::vector<BaseVectorAssignment> out(static_cast<size_t>(K));
    for (int u = 0; u < K; ++u) {
        out[static_cast<size_t>(u)].user_index = u;
        out[static_cast<size_t>(u)].base_bits = uint_to_bits_msb(values[static_cast<size_t>(u)], l_b);
    }
    return out;
}

SecretAssignment derive_secret(const ecc::CodeSpec& spec, const BaseVectorAssignment& base,
                               uint64_t client_seed) {
    const int l_b = static_cast<int>(base.base_bits.size());
    const int l_r = spec.k - l_b;
    if (l_r < 1)
        throw CodeTooShort("derive_secret: k = " + std::to_string(spec.k) +
                           " leaves no random bits after l_b = " + std::to_string(l_b));

    SecretAssignment sa;
    sa.base = base;
    sa.random_bits.resize(static_cast<size_t>(l_r));
    Rng rng(derive_seed(client_seed, 0x7275u /* "ru" */, static_cast<uint64_t>(base.user_index)));
    for (auto& b : sa.random_bits) b = static_cast<uint8_t>(rng.bounded(2));

    ecc::Bits message = base.base_bits;
    message.insert(message.end(), sa.random_bits.begin(), sa.random_bits.end());
    sa.codeword = ecc::encode(spec, message);
    return sa;
}

UniquenessReport audit_uniqueness(const std::vector<SecretAssignment>& assignments) {
    UniquenessReport report;
    for (size_t i = 0; i < assignments.size(); ++i) {
        for (size_t j = i + 1; j < assignments.size(); ++j) {
            int d = ecc::hamming_distance(assignments[i].codeword.bits,
                                          assignments[j].codeword.bits);
            ++report.pairs_checked;
            if (report.min_distance < 0 || d < report.min_distance) report.min_distance = d;
            if (d == 0)
                report.collisions.emplace_back(assignments[i].base.user_index,
                                               assignments[j].base.user_index);
        }
    }
    return report;
}

void write_assignment_file(std::ostream& os, const std::vector<BaseVectorAssignment>& assignments,
                           int l_b) {
    os << "l_b=" << l_b << ",K=" << assignments.size() << "\n";
    for (const auto& a : assignments)
        os << a.user_index << "," << ecc::bits_to_hex(a.base_bits) << "\n";
}

std::vector<BaseVectorAssignment> read_assignment_file(std::istream& is, int* l_b_out) {
    std::string header;
    if (!std::getline(is, header))
        throw PrefixSpaceExhausted("read_assignment_file: empty file");
    int l_b = 0;
    long k = 0;
    if (std::sscanf(header.c_str(), "l_b=%d,K=%ld", &l_b, &k) != 2)
        throw PrefixSpaceExhausted("read_assignment_file: malformed header: " + header);
    if (l_b_out) *l_b_out = l_b;

    std::vector<BaseVectorAssignment> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw PrefixSpaceExhausted("read_assignment_file: malformed record: " + line);
        BaseVectorAssignment a;
        a.user_index = std::stoi(line.substr(0, comma));
        a.base_bits = ecc::hex_to_bits(line.substr(comma + 1), l_b);
        out.push_back(std::move(a));
    }
    return out;
}

void write_secret_file(std::ostream& os, const ecc::CodeSpec& spec, const SecretAssignment& sa) {
    ecc::write_codeword_file(os, spec, {{sa.base.user_index, sa.codeword.bits}});
}

SecretAssignment read_secret_file(std::istream& is, const ecc::CodeSpec& spec, int l_b) {
    auto records = ecc::read_codeword_file(is);
    if (records.size() != 1)
        throw CodeTooShort("read_secret_file: expected exactly one record");
    const auto& rec = records.front();
    SecretAssignment sa;
    sa.base.user_index = rec.user_index;
    sa.base.base_bits.assign(rec.bits.begin(), rec.bits.begin() + l_b);
    sa.random_bits.assign(rec.bits.begin() + l_b, rec.bits.begin() + spec.k);
    sa.codeword.bits = rec.bits;
    sa.codeword.bipolar = ecc::to_bipolar(rec.bits);
    return sa;
}

}  // namespace feduv::protocol
