#include <doctest.h>

#include <cmath>
#include <vector>

#include "refprior/rng.hpp"

using namespace refprior;

TEST_SUITE_BEGIN("rng");

TEST_CASE("identical seeds give identical streams") {
    RngStream a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    RngStream c(43);
    bool same = true;
    RngStream a2(42);
    for (int i = 0; i < 10; ++i) same = same && (a2.normal() == c.normal());
    CHECK_FALSE(same);
}

TEST_CASE("stream_seed separates indices") {
    CHECK(stream_seed(1, 0) != stream_seed(1, 1));
    CHECK(stream_seed(1, 0) != stream_seed(2, 0));
}

TEST_CASE("uniform01 stays inside the open interval") {
    RngStream rng(7);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.uniform01();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments") {
    RngStream rng(11);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        sum += z;
        sum2 += z * z;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("normal_cdf and normal_quantile invert each other") {
    for (double p : {0.001, 0.025, 0.3, 0.5, 0.9, 0.999}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("truncated normal respects bounds and conditional law") {
    RngStream rng(5);
    const double lo = -0.5, hi = 1.0;
    const int n = 100000;
    int below_zero = 0;
    for (int i = 0; i < n; ++i) {
        double x = rng.truncated_normal(0.0, 1.0, lo, hi);
        REQUIRE(x >= lo);
        REQUIRE(x <= hi);
        if (x < 0.0) ++below_zero;
    }
    // P(X < 0 | lo < X < hi) for a standard normal
    double expect = (normal_cdf(0.0) - normal_cdf(lo)) / (normal_cdf(hi) - normal_cdf(lo));
    CHECK(static_cast<double>(below_zero) / n == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("inverse gamma matches its CDF") {
    RngStream rng(9);
    const double shape = 3.0, rate = 2.0;
    const int n = 100000;
    int below_median = 0;
    double median = rate / gamma_p_inv(shape, 0.5);
    for (int i = 0; i < n; ++i) {
        double x = rng.inverse_gamma(shape, rate);
        REQUIRE(x > 0.0);
        if (x < median) ++below_median;
    }
    CHECK(static_cast<double>(below_median) / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(inverse_gamma_cdf(shape, rate, median) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("truncated inverse gamma stays in range with the right mass split") {
    RngStream rng(13);
    const double shape = 2.5, rate = 1.5, lo = 0.3, hi = 2.0;
    double mid = std::sqrt(lo * hi);
    double expect = (inverse_gamma_cdf(shape, rate, mid) - inverse_gamma_cdf(shape, rate, lo)) /
                    (inverse_gamma_cdf(shape, rate, hi) - inverse_gamma_cdf(shape, rate, lo));
    const int n = 100000;
    int below = 0;
    for (int i = 0; i < n; ++i) {
        double x = rng.truncated_inverse_gamma(shape, rate, lo, hi);
        REQUIRE(x >= lo);
        REQUIRE(x <= hi);
        if (x < mid) ++below;
    }
    CHECK(static_cast<double>(below) / n == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("chi square survival function") {
    // chi^2_1: P(X > 3.841458820694124) = 0.05
    CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi_square_sf(0.0, 5) == doctest::Approx(1.0));
}

TEST_SUITE_END();
