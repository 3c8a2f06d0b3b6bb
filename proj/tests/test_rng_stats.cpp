#include <doctest.h>

#include "dpconic/errors.hpp"
#include "dpconic/parallel.hpp"
#include "dpconic/rng.hpp"
#include "dpconic/stats.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

using namespace dpconic;

TEST_CASE("philox known-answer vectors") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
    Rng a(42, 0), b(42, 0), c(42, 1), d(43, 0);
    for (int i = 0; i < 10; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
        CHECK(va != d.next_u64());
    }
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("uniform, normal and laplace moments") {
    Rng rng(7);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, sl = 0, sl2 = 0;
    double umin = 1, umax = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        umin = std::min(umin, u);
        umax = std::max(umax, u);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        const double l = rng.laplace();
        sl += l;
        sl2 += l * l;
    }
    CHECK(umin > 0.0);
    CHECK(umax < 1.0);
    CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sn / n) < 4 * std::sqrt(1.0 / n));
    CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
    CHECK(std::abs(sl / n) < 4 * std::sqrt(2.0 / n));
    // Var[Lap(1)] = 2, fourth moment 24
    CHECK(std::abs(sl2 / n - 2.0) < 4 * std::sqrt((24.0 - 4.0) / n));
}

namespace {

double quantile_by_bisection(double p) {
    double lo = -40, hi = 40;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal quantile against bisection oracle") {
    for (double p : {1e-12, 1e-6, 0.001, 0.01, 0.02425, 0.05, 0.2, 0.5, 0.7, 0.95, 0.975, 0.999, 1 - 1e-9}) {
        INFO("p=" << p);
        // the erfc-based oracle itself loses digits as p approaches 1
        const double tol = p > 0.999 ? 1e-6 : 1e-9;
        CHECK(std::abs(normal_quantile(p) - quantile_by_bisection(p)) <= tol * std::max(1.0, std::abs(quantile_by_bisection(p))));
    }
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(normal_quantile(0.95) - 1.6448536269514722) < 1e-12);
    CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
    CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("summary statistics") {
    Vector v(4);
    v << 1, 2, 3, 4;
    CHECK(mean(v) == 2.5);
    CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0));
    CHECK(binomial_standard_error(0.5, 100) == doctest::Approx(0.05));
    CHECK_THROWS_AS(mean(Vector()), ValidationError);
}

TEST_CASE("parallel_for covers every index and reports the lowest failure") {
    setenv("DP_CONIC_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 1000);

    try {
        parallel_for(100, [](std::size_t i) {
            if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
        });
        CHECK(false);
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "17");
    }

    // nested loops stay on the calling worker
    std::vector<int> nested(40 * 25, 0);
    std::vector<char> same_thread(40, 1);
    parallel_for(40, [&](std::size_t i) {
        const auto outer = std::this_thread::get_id();
        parallel_for(25, [&](std::size_t j) {
            nested[i * 25 + j] += 1;
            if (std::this_thread::get_id() != outer) same_thread[i] = 0;
        });
    });
    CHECK(std::count(nested.begin(), nested.end(), 1) == 1000);
    CHECK(std::count(same_thread.begin(), same_thread.end(), 1) == 40);
    unsetenv("DP_CONIC_THREADS");
}
