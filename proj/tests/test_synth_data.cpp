#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "feduv/synth_data.hpp"

using namespace feduv;
using namespace feduv::synth;

namespace {

// independent oracle: classify test examples by the nearest train centroid
double nearest_centroid_accuracy(const std::vector<UserDataset>& users) {
    std::vector<Vec> centroids;
    for (const auto& u : users) {
        Vec c(u.train.front().size(), 0.0);
        for (const auto& x : u.train) axpy(c, 1.0, x);
        scale_inplace(c, 1.0 / static_cast<double>(u.train.size()));
        centroids.push_back(std::move(c));
    }
    size_t correct = 0, total = 0;
    for (size_t u = 0; u < users.size(); ++u) {
        for (const auto& x : users[u].test) {
            size_t best = 0;
            double best_d = -1.0;
            for (size_t v = 0; v < centroids.size(); ++v) {
                double d = 0.0;
                for (size_t i = 0; i < x.size(); ++i) {
                    double diff = x[i] - centroids[v][i];
                    d += diff * diff;
                }
                if (best_d < 0.0 || d < best_d) {
                    best_d = d;
                    best = v;
                }
            }
            correct += (best == u);
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("generate respects spec counts and index layout") {
    DatasetSpec spec;
    spec.K_train = 5;
    spec.K_unknown = 3;
    spec.dim = 8;
    spec.n_train = 4;
    spec.n_val = 2;
    spec.n_test = 3;
    auto [known, unknown] = generate(spec);
    REQUIRE(known.size() == 5);
    REQUIRE(unknown.size() == 3);
    for (int u = 0; u < 5; ++u) {
        CHECK(known[static_cast<size_t>(u)].user_index == u);
        CHECK(known[static_cast<size_t>(u)].known);
        CHECK(known[static_cast<size_t>(u)].train.size() == 4);
        CHECK(known[static_cast<size_t>(u)].val.size() == 2);
        CHECK(known[static_cast<size_t>(u)].test.size() == 3);
    }
    for (int u = 0; u < 3; ++u) {
        CHECK(unknown[static_cast<size_t>(u)].user_index == 5 + u);
        CHECK_FALSE(unknown[static_cast<size_t>(u)].known);
    }
}

TEST_CASE("generate is deterministic per seed") {
    DatasetSpec spec;
    spec.K_train = 4;
    spec.K_unknown = 2;
    spec.dim = 6;
    auto [k1, u1] = generate(spec);
    auto [k2, u2] = generate(spec);
    for (size_t u = 0; u < k1.size(); ++u) {
        CHECK(k1[u].train == k2[u].train);
        CHECK(k1[u].val == k2[u].val);
        CHECK(k1[u].test == k2[u].test);
    }
    spec.seed = 2;
    auto [k3, u3] = generate(spec);
    CHECK(k1[0].train != k3[0].train);
}

TEST_CASE("vanishing intra_sigma collapses a user to its prototype") {
    DatasetSpec spec;
    spec.K_train = 2;
    spec.K_unknown = 1;
    spec.dim = 5;
    spec.intra_sigma = 1e-12;
    auto [known, unknown] = generate(spec);
    for (const auto& u : known) {
        const Vec& first = u.train.front();
        for (const auto& x : u.train)
            for (size_t i = 0; i < x.size(); ++i)
                CHECK(x[i] == doctest::Approx(first[i]).epsilon(1e-6));
        for (const auto& x : u.test)
            for (size_t i = 0; i < x.size(); ++i)
                CHECK(x[i] == doctest::Approx(first[i]).epsilon(1e-6));
    }
}

TEST_CASE("separation ratio 10 yields > 95% nearest-centroid accuracy") {
    DatasetSpec spec;
    spec.K_train = 20;
    spec.K_unknown = 1;
    spec.dim = 16;
    spec.intra_sigma = 1.0;
    spec.inter_scale = 10.0;
    auto [known, unknown] = generate(spec);
    CHECK(nearest_centroid_accuracy(known) > 0.95);
}

TEST_CASE("difficulty knob: accuracy non-increasing in intra_sigma") {
    DatasetSpec spec;
    spec.K_train = 20;
    spec.K_unknown = 1;
    spec.dim = 16;
    spec.inter_scale = 6.0;
    double prev = 2.0;
    for (double sigma : {0.5, 2.0, 8.0}) {
        spec.intra_sigma = sigma;
        auto [known, unknown] = generate(spec);
        double acc = nearest_centroid_accuracy(known);
        CHECK(acc <= prev + 0.01);  // 1% noise allowance
        prev = acc;
    }
}

TEST_CASE("save/load round trip is exact") {
    DatasetSpec spec;
    spec.K_train = 1;
    spec.K_unknown = 1;
    spec.dim = 7;
    auto [known, unknown] = generate(spec);
    auto path = (std::filesystem::temp_directory_path() / "feduv_user_test.bin").string();

    save_user(unknown[0], path);
    auto back = load_user(path);
    CHECK(back.user_index == unknown[0].user_index);
    CHECK(back.known == unknown[0].known);
    CHECK(back.train == unknown[0].train);
    CHECK(back.val == unknown[0].val);
    CHECK(back.test == unknown[0].test);

    SUBCASE("truncated file is corrupt") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
        CHECK_THROWS_AS(load_user(path), CorruptFile);
    }
    SUBCASE("wrong version is reported distinctly") {
        FILE* f = std::fopen(path.c_str(), "r+b");
        REQUIRE(f);
        std::fseek(f, 4, SEEK_SET);
        unsigned char v2[4] = {9, 0, 0, 0};
        std::fwrite(v2, 1, 4, f);
        std::fclose(f);
        CHECK_THROWS_AS(load_user(path), VersionMismatch);
    }
    std::filesystem::remove(path);
}

TEST_CASE("invalid specs are rejected") {
    DatasetSpec spec;
    spec.n_train = 0;
    CHECK_THROWS_AS(generate(spec), BadSpec);
    spec = DatasetSpec{};
    spec.intra_sigma = 0.0;
    CHECK_THROWS_AS(generate(spec), BadSpec);
}
