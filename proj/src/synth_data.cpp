#include "feduv/synth_data.hpp"

#include <cmath>
#include <fstream>

#include "feduv/binio.hpp"
#include "feduv/rng.hpp"

namespace feduv::synth {

namespace {

constexpr uint32_t kDataMagic = 0x44565546;  // "FUVD" little-endian
constexpr uint32_t kDataVersion = 1;
constexpr double kWarpGain = 0.4;

void validate(const DatasetSpec& spec) {
    if (spec.K_train < 1 || spec.K_unknown < 0 || spec.dim < 1 || spec.n_train < 1 ||
        spec.n_val < 1 || spec.n_test < 1)
        throw BadSpec("DatasetSpec: all counts must be >= 1");
    if (spec.intra_sigma <= 0.0) throw BadSpec("DatasetSpec: intra_sigma must be positive");
}

// Random rotation via Gram-Schmidt on a Gaussian matrix; columns become an
// orthonormal basis.
Mat random_rotation(Rng& rng, int dim) {
    Mat q(static_cast<size_t>(dim), static_cast<size_t>(dim));
    for (int col = 0; col < dim; ++col) {
        Vec v = rng.gaussian_vec(static_cast<size_t>(dim));
        for (int prev = 0; prev < col; ++prev) {
            double proj = 0.0;
            for (int i = 0; i < dim; ++i)
                proj += v[static_cast<size_t>(i)] * q(static_cast<size_t>(i),
                                                      static_cast<size_t>(prev));
            for (int i = 0; i < dim; ++i)
                v[static_cast<size_t>(i)] -= proj * q(static_cast<size_t>(i),
                                                      static_cast<size_t>(prev));
        }
        double n = norm(v);
        if (n < 1e-9) {  // essentially impossible; restart the column
            --col;
            continue;
        }
        for (int i = 0; i < dim; ++i) q(static_cast<size_t>(i), static_cast<size_t>(col)) =
            v[static_cast<size_t>(i)] / n;
    }
    return q;
}

// Quadratic cross-coordinate warp so each user's cloud is curved rather than
// an axis-aligned Gaussian; E[g^2 - 1] = 0 keeps the cluster centered.
Vec warp(const Vec& g) {
    const size_t d = g.size();
    Vec out(d);
    for (size_t i = 0; i < d; ++i) {
        double neighbor = g[(i + 1) % d];
        out[i] = g[i] + kWarpGain * (neighbor * neighbor - 1.0);
    }
    return out;
}

UserDataset make_user(const DatasetSpec& spec, int user_index, bool known) {
    Rng rng(derive_seed(spec.seed, 0x64617461u /* "data" */, static_cast<uint64_t>(user_index)));
    Vec prototype = rng.gaussian_vec(static_cast<size_t>(spec.dim), spec.inter_scale);
    Mat rotation = random_rotation(rng, spec.dim);

    auto draw = [&]() {
        Vec g = rng.gaussian_vec(static_cast<size_t>(spec.dim));
        Vec w = matvec(rotation, warp(g));
        Vec x(static_cast<size_t>(spec.dim));
        for (size_t i = 0; i < x.size(); ++i) x[i] = prototype[i] + spec.intra_sigma * w[i];
        return x;
    };

    UserDataset user;
    user.user_index = user_index;
    user.known = known;
    for (int i = 0; i < spec.n_train; ++i) user.train.push_back(draw());
    for (int i = 0; i < spec.n_val; ++i) user.val.push_back(draw());
    for (int i = 0; i < spec.n_test; ++i) user.test.push_back(draw());
    return user;
}

void write_split(std::ostream& os, const std::vector<Vec>& split) {
    for (const auto& row : split)
        for (double x : row) write_f64(os, x);
}

void read_split(std::istream& is, std::vector<Vec>& split, uint32_t count, uint32_t dim) {
    split.resize(count);
    for (auto& row : split) {
        row.resize(dim);
        for (auto& x : row) x = read_f64(is);
    }
}

}  // namespace

std::pair<std::vector<UserDataset>, std::vector<UserDataset>> generate(const DatasetSpec& spec) {
    validate(spec);
    std::vector<UserDataset> known, unknown;
    for (int u = 0; u < spec.K_train; ++u) known.push_back(make_user(spec, u, true));
    for (int u = 0; u < spec.K_unknown; ++u)
        unknown.push_back(make_user(spec, spec.K_train + u, false));
    return {std::move(known), std::move(unknown)};
}

void save_user(const UserDataset& user, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw CorruptFile("save_user: cannot open " + path);
    const uint32_t dim = user.train.empty() ? 0 : static_cast<uint32_t>(user.train.front().size());
    write_u32(os, kDataMagic);
    write_u32(os, kDataVersion);
    write_u32(os, static_cast<uint32_t>(user.user_index));
    write_u32(os, user.known ? 1 : 0);
    write_u32(os, dim);
    write_u32(os, static_cast<uint32_t>(user.train.size()));
    write_u32(os, static_cast<uint32_t>(user.val.size()));
    write_u32(os, static_cast<uint32_t>(user.test.size()));
    write_split(os, user.train);
    write_split(os, user.val);
    write_split(os, user.test);
    if (!os) throw CorruptFile("save_user: write failed for " + path);
}

UserDataset load_user(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CorruptFile("load_user: cannot open " + path);
    try {
        if (read_u32(is) != kDataMagic) throw CorruptFile("load_user: bad magic in " + path);
        uint32_t version = read_u32(is);
        if (version != kDataVersion)
            throw VersionMismatch("load_user: unsupported version " + std::to_string(version) +
                                  " in " + path);
        UserDataset user;
        user.user_index = static_cast<int>(read_u32(is));
        user.known = read_u32(is) != 0;
        uint32_t dim = read_u32(is);
        uint32_t n_train = read_u32(is);
        uint32_t n_val = read_u32(is);
        uint32_t n_test = read_u32(is);
        read_split(is, user.train, n_train, dim);
        read_split(is, user.val, n_val, dim);
        read_split(is, user.test, n_test, dim);
        return user;
    } catch (const VersionMismatch&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw CorruptFile(std::string("load_user: ") + e.what());
    }
}

}  // namespace feduv::synth
