#pragma once

#include <cstdint>
#include <random>

namespace refprior {

/// Derive an independent substream seed from a base seed and a stream index.
/// Golden-ratio mixing keeps nearby indices far apart in seed space.
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
    constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = base ^ ((index + 1) * kPhi);
    // splitmix64 finalizer
    z += kPhi;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seeded random stream. All continuous draws go through inverse-CDF
/// transforms of the raw 64-bit integer stream, so a given seed produces the
/// same sequence independent of standard-library distribution internals.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t raw() { return gen_(); }

    /// Uniform on the open interval (0, 1).
    double uniform01();
    double uniform(double lo, double hi);

    double normal();  // standard normal
    double normal(double mean, double sd);
    double truncated_normal(double mean, double sd, double lo, double hi);

    /// Inverse gamma with shape/rate parametrization:
    /// density ∝ x^{-shape-1} exp(-rate/x).
    double inverse_gamma(double shape, double rate);
    double truncated_inverse_gamma(double shape, double rate, double lo, double hi);

private:
    std::mt19937_64 gen_;
};

// Distribution functions shared by diagnostics and tests.
double normal_cdf(double z);
double normal_quantile(double p);
/// Regularized lower incomplete gamma P(shape, x).
double gamma_p(double shape, double x);
/// Quantile of the unit-scale gamma distribution.
double gamma_p_inv(double shape, double p);
/// CDF of InverseGamma(shape, rate) at x.
double inverse_gamma_cdf(double shape, double rate, double x);
/// Upper tail probability of a chi-square variate with dof degrees of freedom.
double chi_square_sf(double x, int dof);

}  // namespace refprior
