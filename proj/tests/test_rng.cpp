#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trustdyn/rng.hpp"

using namespace trustdyn;

TEST_CASE("identical seeds give identical streams", "[rng]") {
    Rng a(12345), b(12345);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.uniform01() == b.uniform01());
    Rng c(12345), d(54321);
    bool differ = false;
    for (int i = 0; i < 10; ++i) differ |= (c.next_u64() != d.next_u64());
    REQUIRE(differ);
}

TEST_CASE("uniform01 range and mean", "[rng]") {
    Rng rng(7);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    REQUIRE(sum / 100000 == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("bounded draw stays in range", "[rng]") {
    Rng rng(99);
    for (int n : {1, 2, 7, 100}) {
        for (int i = 0; i < 2000; ++i) {
            const auto v = rng.below(static_cast<std::uint64_t>(n));
            REQUIRE(v < static_cast<std::uint64_t>(n));
        }
    }
}

TEST_CASE("shuffle is a permutation", "[rng]") {
    Rng rng(3);
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    rng.shuffle(w);
    auto sorted = w;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == v);
    REQUIRE(w != v);  // 50! permutations; identity would be astonishing
}

TEST_CASE("normal and gamma moments", "[rng]") {
    Rng rng(11);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    REQUIRE(sum / n == Catch::Approx(0.0).margin(0.02));
    REQUIRE(sq / n == Catch::Approx(1.0).margin(0.03));

    for (double shape : {0.4, 1.0, 3.5}) {
        double gs = 0.0;
        for (int i = 0; i < n; ++i) gs += rng.gamma(shape);
        // mean of Gamma(shape, 1) is shape; se = sqrt(shape/n)
        REQUIRE(gs / n == Catch::Approx(shape).margin(4.0 * std::sqrt(shape / n)));
    }
}

TEST_CASE("beta variates match moments", "[rng]") {
    Rng rng(13);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.beta(2.0, 3.0);
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
        sum += x;
    }
    REQUIRE(sum / n == Catch::Approx(0.4).margin(0.004));
}

TEST_CASE("seed derivation decorrelates indices", "[rng]") {
    REQUIRE(derive_seed(42, 0) != derive_seed(42, 1));
    REQUIRE(derive_seed(42, 0) != derive_seed(43, 0));
    REQUIRE(derive_seed(42, 7) == derive_seed(42, 7));
}
