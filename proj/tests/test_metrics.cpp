#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "cowlink/metrics.hpp"

using namespace cowlink;

TEST_CASE("perfect predictions score zero on every metric") {
    const std::vector<double> v{100.0, 200.0, 300.0};
    const std::vector<double> s{0.0, 0.5, 1.0};
    const auto r = compute_metrics(v, v, s, s);
    CHECK(r.me == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(r.mre == 0.0);
    CHECK(r.mse == 0.0);
    CHECK(r.n == 3);
    CHECK(r.mre_defined);
}

TEST_CASE("symmetric errors cancel in the mean but not the magnitude") {
    const auto r = compute_metrics({100.0, 100.0}, {110.0, 90.0},
                                   {1.0, 1.0}, {1.1, 0.9});
    CHECK(r.me == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.mae == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(r.mre == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.mse == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("single-sample metrics are signed") {
    const auto r = compute_metrics({200.0}, {190.0}, {0.5}, {0.45});
    CHECK(r.me == doctest::Approx(-10.0).epsilon(1e-15));
    CHECK(r.mae == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(r.mre == doctest::Approx(-0.05).epsilon(1e-15));
    CHECK(r.n == 1);
}

TEST_CASE("zero measured values disable the relative error only") {
    const auto r = compute_metrics({0.0, 100.0}, {10.0, 110.0}, {0.0, 1.0}, {0.1, 1.1});
    CHECK_FALSE(r.mre_defined);
    CHECK(r.mre == 0.0);
    CHECK(r.me == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(r.mae == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(r.mse == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("the absolute error bounds the signed error") {
    const std::vector<double> meas{10, 20, 30, 40, 50};
    const std::vector<double> pred{12, 18, 33, 39, 55};
    const std::vector<double> zeros(5, 0.0);
    const auto r = compute_metrics(meas, pred, zeros, zeros);
    CHECK(r.mae >= std::abs(r.me));
}

TEST_CASE("metrics are order invariant") {
    const auto a = compute_metrics({10, 20}, {12, 19}, {0.1, 0.2}, {0.12, 0.19});
    const auto b = compute_metrics({20, 10}, {19, 12}, {0.2, 0.1}, {0.19, 0.12});
    CHECK(a.me == doctest::Approx(b.me).epsilon(1e-15));
    CHECK(a.mae == doctest::Approx(b.mae).epsilon(1e-15));
    CHECK(a.mre == doctest::Approx(b.mre).epsilon(1e-15));
    CHECK(a.mse == doctest::Approx(b.mse).epsilon(1e-15));
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(compute_metrics({}, {}, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(compute_metrics({1.0}, {1.0, 2.0}, {1.0}, {1.0}), std::invalid_argument);
}
