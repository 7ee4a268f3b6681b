#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "feduv/linalg.hpp"

namespace feduv::synth {

struct BadSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct CorruptFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VersionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Procedural per-user clusters standing in for the biometric corpora: one
// Gaussian prototype per user, per-user rotated nonlinearly-warped noise
// around it, disjoint train/val/test splits, plus held-out unknown users.
struct DatasetSpec {
    int K_train = 50;
    int K_unknown = 20;
    int dim = 32;
    int n_train = 20;
    int n_val = 10;
    int n_test = 10;
    double intra_sigma = 1.0;
    double inter_scale = 6.0;
    uint64_t seed = 1;
};

struct UserDataset {
    int user_index = 0;
    bool known = true;
    std::vector<Vec> train;
    std::vector<Vec> val;
    std::vector<Vec> test;
};

// (known users, unknown users). Unknown users occupy indices
// K_train .. K_train + K_unknown - 1. Deterministic per (seed, user_index).
std::pair<std::vector<UserDataset>, std::vector<UserDataset>> generate(const DatasetSpec& spec);

// Versioned binary, round-trips bit exactly.
void save_user(const UserDataset& user, const std::string& path);
UserDataset load_user(const std::string& path);

}  // namespace feduv::synth
