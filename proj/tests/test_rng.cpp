#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cowlink/rng.hpp"

using namespace cowlink;

TEST_CASE("mix_seed separates streams deterministically") {
    CHECK(mix_seed(42, 0) == mix_seed(42, 0));
    CHECK(mix_seed(42, 0) != mix_seed(42, 1));
    CHECK(mix_seed(42, 0) != mix_seed(43, 0));
}

TEST_CASE("identical seeds give identical draws") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.uniform01() == b.uniform01());
        CHECK(a.normal() == b.normal());
    }
}

TEST_CASE("uniform01 stays in the half-open unit interval") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform respects bounds and has the right mean") {
    Rng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(2.0, 6.0);
        CHECK(x >= 2.0);
        CHECK(x < 6.0);
        sum += x;
    }
    CHECK(sum / n == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("normal has the requested moments") {
    Rng rng(13);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal(1.0, 2.0);
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
    CHECK(var == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("below covers the full range without bias artifacts") {
    Rng rng(17);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) ++counts[rng.below(5)];
    for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("shuffle is a deterministic permutation") {
    std::vector<int> v(20);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> w = v;
    Rng a(99), b(99);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(20);
    std::iota(expect.begin(), expect.end(), 0);
    CHECK(sorted == expect);
    CHECK(v != expect);  // astronomically unlikely to be identity
}
