#include "refprior/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace refprior {

namespace {

// Keep boost evaluating in double; the default policy promotes to long double.
using FastPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

constexpr double kInvTwo53 = 1.0 / 9007199254740992.0;  // 2^-53

}  // namespace

RngStream::RngStream(std::uint64_t seed) {
    // Expand the seed through splitmix64 so nearby seeds give unrelated state.
    std::uint64_t s0 = stream_seed(seed, 0);
    std::uint64_t s1 = stream_seed(seed, 0x51A7);
    std::seed_seq seq{static_cast<std::uint32_t>(s0), static_cast<std::uint32_t>(s0 >> 32),
                      static_cast<std::uint32_t>(s1), static_cast<std::uint32_t>(s1 >> 32)};
    gen_.seed(seq);
}

double RngStream::uniform01() {
    // (x + 0.5) / 2^53 lies strictly inside (0, 1); safe for quantile transforms.
    return (static_cast<double>(gen_() >> 11) + 0.5) * kInvTwo53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
    return boost::math::erf_inv(2.0 * uniform01() - 1.0, FastPolicy{}) * 1.4142135623730951;
}

double RngStream::normal(double mean, double sd) {
    return mean + sd * normal();
}

double RngStream::truncated_normal(double mean, double sd, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("truncated_normal: lo must be < hi");
    double a = normal_cdf((lo - mean) / sd);
    double b = normal_cdf((hi - mean) / sd);
    if (b - a < 1e-300) {
        // Window is numerically invisible; fall back to the nearest endpoint.
        return std::clamp(mean, lo, hi);
    }
    double u = a + (b - a) * uniform01();
    u = std::clamp(u, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
    return mean + sd * normal_quantile(u);
}

double RngStream::inverse_gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::invalid_argument("inverse_gamma: shape and rate must be > 0");
    double y = gamma_p_inv(shape, uniform01());  // Gamma(shape, 1)
    return rate / y;
}

double RngStream::truncated_inverse_gamma(double shape, double rate, double lo, double hi) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::invalid_argument("truncated_inverse_gamma: shape and rate must be > 0");
    if (!(0.0 < lo && lo < hi)) throw std::invalid_argument("truncated_inverse_gamma: need 0 < lo < hi");
    // X in [lo, hi]  <=>  Y = rate/X in [rate/hi, rate/lo] with Y ~ Gamma(shape, 1).
    double pa = gamma_p(shape, rate / hi);
    double pb = gamma_p(shape, rate / lo);
    if (pb - pa < 1e-300) {
        double mode = rate / (shape + 1.0);
        return std::clamp(mode, lo, hi);
    }
    double u = pa + (pb - pa) * uniform01();
    u = std::clamp(u, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
    double y = gamma_p_inv(shape, u);
    return std::clamp(rate / y, lo, hi);
}

double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.7071067811865476);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    return -1.4142135623730951 * boost::math::erfc_inv(2.0 * p, FastPolicy{});
}

double gamma_p(double shape, double x) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(shape, x, FastPolicy{});
}

double gamma_p_inv(double shape, double p) {
    return boost::math::gamma_p_inv(shape, p, FastPolicy{});
}

double inverse_gamma_cdf(double shape, double rate, double x) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_q(shape, rate / x, FastPolicy{});
}

double chi_square_sf(double x, int dof) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x, FastPolicy{});
}

}  // namespace refprior
