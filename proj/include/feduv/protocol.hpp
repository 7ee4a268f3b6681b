#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "feduv/bch.hpp"

namespace feduv::protocol {

struct PrefixSpaceExhausted : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct CodeTooShort : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Server-visible half of a user's identity: a unique l_b-bit prefix.
struct BaseVectorAssignment {
    int user_index = 0;
    ecc::Bits base_bits;
};

// Client-side secret: prefix plus a private random suffix, encoded. Never
// serialized into server state; see write_assignment_file.
struct SecretAssignment {
    BaseVectorAssignment base;
    ecc::Bits random_bits;
    ecc::Codeword codeword;
};

// Unique base vectors for K users: counters 0..K-1 under a seeded
// permutation, written MSB-first into l_b bits. Values >= K stay unused so
// late-joining users can be added without reassignment.
std::vector<BaseVectorAssignment> assign_base_vectors(int K, int l_b, uint64_t server_seed);

// Client-local step: draw l_r = k - l_b random bits from the client seed,
// concatenate base || random, and encode. Same (base, seed) always yields
// the same codeword.
SecretAssignment derive_secret(const ecc::CodeSpec& spec, const BaseVectorAssignment& base,
                               uint64_t client_seed);

// Simulation-only oracle. A deployment server never sees codewords; this
// exists so tests can quantify separation and detect collisions.
struct UniquenessReport {
    size_t pairs_checked = 0;
    int min_distance = -1;  // -1 when fewer than two assignments
    std::vector<std::pair<int, int>> collisions;  // user index pairs at distance 0
    bool ok() const { return collisions.empty(); }
};

UniquenessReport audit_uniqueness(const std::vector<SecretAssignment>& assignments);

// Server assignment file: header "l_b=<l_b>,K=<K>", then
// "<user_index>,<hex(base_bits)>" lines. Contains base vectors only.
void write_assignment_file(std::ostream& os, const std::vector<BaseVectorAssignment>& assignments,
                           int l_b);
std::vector<BaseVectorAssignment> read_assignment_file(std::istream& is, int* l_b_out = nullptr);

// Client secret file (client-local in simulation): the codeword file format
// of the ECC module with a single record. Reading reconstructs the base and
// random halves from the systematic prefix, which requires l_b.
void write_secret_file(std::ostream& os, const ecc::CodeSpec& spec, const SecretAssignment& sa);
SecretAssignment read_secret_file(std::istream& is, const ecc::CodeSpec& spec, int l_b);

}  // namespace feduv::protocol
