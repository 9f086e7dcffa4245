#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "relprop/bounds.hpp"
#include "relprop/rng.hpp"

using namespace relprop;

namespace {

std::vector<double> random_simplex(std::size_t m, Rng& rng) {
    std::vector<double> p(m);
    double sum = 0.0;
    for (double& v : p) {
        v = -std::log(rng.uniform_pos());
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

std::vector<double> one_hot(std::size_t m, std::size_t k) {
    std::vector<double> p(m, 0.0);
    p[k] = 1.0;
    return p;
}

} // namespace

TEST_CASE("identical uniform views give zero variance and full entropy") {
    const std::vector<double> u(4, 0.25);
    const ViewStats s = view_stats({u, u, u});
    for (double v : s.variance) CHECK(v == 0.0);
    for (double v : s.mean) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.peak == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.entropy == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(variance_bound_holds(s));
    CHECK(entropy_bound_holds(s));
}

TEST_CASE("repeated one-hot views give zero variance and zero entropy") {
    const auto p = one_hot(5, 2);
    const ViewStats s = view_stats({p, p});
    for (double v : s.variance) CHECK(v == 0.0);
    CHECK(s.peak == 1.0);
    CHECK(s.entropy == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(variance_bound_holds(s));
    CHECK(entropy_bound_holds(s));
}

TEST_CASE("opposing one-hot views sit exactly on the variance bound arithmetic") {
    const ViewStats s = view_stats({one_hot(2, 0), one_hot(2, 1)});
    // mean (0.5, 0.5); population variance 0.25 per coordinate
    CHECK(s.mean[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.variance[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.variance[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.peak == doctest::Approx(0.5).epsilon(1e-15));
    // 0.25 <= 0.5 <= sqrt(0.75)
    CHECK(variance_bound_holds(s, 0.0));
    CHECK(s.entropy == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(entropy_bound_holds(s));
}

TEST_CASE("statistics match a direct recomputation") {
    Rng rng(101);
    const std::vector<std::vector<double>> views = {
        random_simplex(3, rng), random_simplex(3, rng), random_simplex(3, rng),
        random_simplex(3, rng)};
    const ViewStats s = view_stats(views);
    for (std::size_t k = 0; k < 3; ++k) {
        double mean = 0.0;
        for (const auto& v : views) mean += v[k];
        mean /= views.size();
        double var = 0.0;
        for (const auto& v : views) var += (v[k] - mean) * (v[k] - mean);
        var /= views.size();
        CHECK(s.mean[k] == doctest::Approx(mean).epsilon(1e-14));
        CHECK(s.variance[k] == doctest::Approx(var).epsilon(1e-12));
    }
    double peak = 0.0, ent = 0.0;
    for (double v : s.mean) peak = std::max(peak, v);
    for (double v : s.mean)
        if (v > 0.0) ent -= v * std::log(v) / std::log(3.0);
    CHECK(s.peak == doctest::Approx(peak).epsilon(1e-15));
    CHECK(s.entropy == doctest::Approx(ent).epsilon(1e-12));
}

TEST_CASE("both bounds hold across a large randomized sweep") {
    Rng rng(103);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t m = 2 + rng.below(9);
        const std::size_t n = 2 + rng.below(7);
        std::vector<std::vector<double>> views;
        views.reserve(n);
        const bool spiky = rng.uniform() < 0.3;
        for (std::size_t i = 0; i < n; ++i) {
            if (spiky && rng.uniform() < 0.5)
                views.push_back(one_hot(m, rng.below(m)));
            else
                views.push_back(random_simplex(m, rng));
        }
        const ViewStats s = view_stats(views);
        CHECK(variance_bound_holds(s));
        CHECK(entropy_bound_holds(s));
        CHECK(s.peak >= 1.0 / static_cast<double>(m) - 1e-12);
        CHECK(s.entropy <= 1.0 + 1e-12);
        CHECK(s.entropy >= -1e-12);
    }
}

TEST_CASE("the entropy envelope hits its endpoints") {
    for (std::size_t m : {2u, 3u, 5u, 10u}) {
        CHECK(entropy_envelope(1.0 / static_cast<double>(m), m) ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(entropy_envelope(1.0, m) == doctest::Approx(0.0).epsilon(1e-12));
    }
    // interior value checked by hand for m=2, c=0.75:
    // f = -(0.75 log2 0.75 + 0.25 log2 0.25)
    const double hand =
        -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    CHECK(entropy_envelope(0.75, 2) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("the envelope only goes downhill on its domain") {
    for (std::size_t m : {2u, 3u, 4u, 7u, 10u}) {
        CHECK(envelope_nonincreasing(m, 2000));
        const double lo = 1.0 / static_cast<double>(m);
        double prev = entropy_envelope(lo, m);
        for (int i = 1; i <= 500; ++i) {
            const double c = lo + (1.0 - lo) * i / 500.0;
            const double cur = entropy_envelope(c, m);
            CHECK(cur <= prev + 1e-9);
            prev = cur;
        }
    }
}

TEST_CASE("an artificial violation is detected") {
    ViewStats s;
    s.mean = {0.6, 0.4};
    s.variance = {0.9, 0.0}; // impossible: variance above the peak
    s.peak = 0.6;
    s.entropy = 0.2;
    CHECK_FALSE(variance_bound_holds(s));
    ViewStats e;
    e.mean = {0.97, 0.03};
    e.variance = {0.0, 0.0};
    e.peak = 0.97;
    e.entropy = 0.9; // way above f(0.97)
    CHECK_FALSE(entropy_bound_holds(e));
}

TEST_CASE("malformed view sets are rejected") {
    CHECK_THROWS_AS(view_stats({}), std::invalid_argument);
    CHECK_THROWS_AS(view_stats({{1.0}}), std::invalid_argument); // m = 1
    CHECK_THROWS_AS(view_stats({{0.5, 0.5}, {0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(view_stats({{0.7, 0.7}}), std::invalid_argument); // sum != 1
    CHECK_THROWS_AS(view_stats({{1.2, -0.2}}), std::invalid_argument);
    CHECK_THROWS_AS(entropy_envelope(0.3, 2), std::invalid_argument); // below 1/m
    CHECK_THROWS_AS(entropy_envelope(1.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(entropy_envelope(0.5, 1), std::invalid_argument);
}
