#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace feduv {

// One SplitMix64 step. Used for seed mixing only.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Folds up to three tags into a base seed so that independent consumers
// (clients, rounds, users) get decorrelated deterministic streams.
inline uint64_t derive_seed(uint64_t base, uint64_t a = 0, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = base;
    uint64_t h = splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b + 0xd1b54a32d192ed03ULL;
    h ^= splitmix64(s);
    s ^= c + 0x8cb92ba72f3d8dd7ULL;
    h ^= splitmix64(s);
    return h;
}

// Deterministic random source. mt19937_64 has a fully specified output
// sequence; the distributions below are implemented by hand because the
// std:: distribution algorithms are implementation-defined and would break
// byte-identical reproducibility across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1], safe as a log() argument
    double uniform_open01() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // standard normal via Box-Muller; the second value of each pair is cached
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    // [0, n), multiply-shift bounding
    uint64_t bounded(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    std::vector<double> gaussian_vec(size_t n, double stddev = 1.0) {
        std::vector<double> v(n);
        for (auto& x : v) x = gaussian() * stddev;
        return v;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // identity permutation of size n shuffled in place
    std::vector<size_t> permutation(size_t n) {
        std::vector<size_t> p(n);
        for (size_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace feduv
