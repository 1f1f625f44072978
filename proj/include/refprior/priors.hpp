#pragma once

#include <functional>
#include <optional>
#include <string>

#include "refprior/likelihood.hpp"
#include "refprior/rng.hpp"
#include "refprior/types.hpp"

namespace refprior {

enum class PriorKind { Reference, Jeffreys, Flat };

std::string to_string(PriorKind k);
PriorKind prior_kind_from_string(const std::string& s);

struct PriorBox {
    double psi2_lo = 1e-2, psi2_hi = 1e2;
    double phi2_lo = 1e-2, phi2_hi = 1e2;
    double q_lo = 1e-3, q_hi = 1e3;

    void validate() const;
};

/// Prior over theta_N = (psi2, phi2, q). All three kinds factorize into
/// power-law marginals:
///   Reference: (psi2)^{-3/2} (phi2)^{-3/2} q^{-1}
///   Jeffreys:  (psi2)^{-1}   (phi2)^{-1}   q^{-1}
///   Flat:      1
/// A truncated spec is proper with a closed-form normalizer.
struct PriorSpec {
    PriorKind kind = PriorKind::Reference;
    std::optional<PriorBox> box;

    bool normalized() const { return box.has_value(); }
    double log_normalizer() const;  // requires a box
    double exponent_psi2() const;
    double exponent_phi2() const;
    double exponent_q() const;
};

/// Log prior density in (psi2, phi2, q) coordinates. Truncated specs are
/// normalized and return -inf outside the box; nonpositive parameters give
/// -inf for every kind.
double log_prior(const PriorSpec& spec, const NuisanceParams& params);

/// Exact inverse-CDF draw from a truncated spec.
NuisanceParams sample_prior(const PriorSpec& spec, int A, RngStream& rng);

/// log of integral_{lo}^{hi} x^expo dx.
double power_law_log_normalizer(double expo, double lo, double hi);
double sample_power_law(double expo, double lo, double hi, RngStream& rng);

enum class Psi2Mode { Exact, Conjugate };

/// Full-conditional posterior of one component of theta_N.
struct ConditionalPosterior {
    enum class Family { Normal, InverseGamma, NonConjugate };
    Family family = Family::Normal;
    double mean = 0.0, variance = 0.0;  // Normal
    double shape = 0.0, rate = 0.0;     // InverseGamma
    std::function<double(double)> log_density;  // NonConjugate, unnormalized
    double support_lo = 0.0;
    double support_hi = 0.0;
};

/// log q | phi2, D: Normal with mean (1/AT) sum_t (Jstar_t - Jtilde_t) and
/// variance phi2/(A^2 T). (The survey equations are the only ones involving
/// q, so the survey variance phi2 appears here.)
ConditionalPosterior logq_conditional(const PopulationState& state, const ObservedData& data,
                                      const NuisanceParams& params, const ModelConfig& cfg);

/// phi2 | q, D: InverseGamma((T+1)/2, (1/2) sum_t r_t^2) with survey
/// residuals r_t = Jstar_t - A log q - Jtilde_t; the +1/2 in the shape is the
/// contribution of the reference prior factor (phi2)^{-3/2}.
ConditionalPosterior phi2_conditional(const PopulationState& state, const ObservedData& data,
                                      const NuisanceParams& params, const ModelConfig& cfg);

/// psi2 | D. Exact mode returns the non-conjugate kernel
///   g(psi2) = -(T+3)/2 log psi2 - (1/(2 psi2)) sum_t (d_t + psi2/2)^2
/// with d_t = log Cstar_t - log C_t; Conjugate mode drops the bias shift and
/// returns InverseGamma((T+1)/2, (1/2) sum_t d_t^2).
ConditionalPosterior psi2_conditional(const PopulationState& state, const ObservedData& data,
                                      const NuisanceParams& params, const ModelConfig& cfg,
                                      Psi2Mode mode = Psi2Mode::Exact);

// Prior-kind generalizations used by the Gibbs sampler; the named Remark
// conditionals above are the PriorKind::Reference cases.
ConditionalPosterior logq_conditional(const DataSummary& s, const NuisanceParams& params,
                                      PriorKind kind = PriorKind::Reference);
ConditionalPosterior phi2_conditional(const DataSummary& s, double log_q,
                                      PriorKind kind = PriorKind::Reference);
ConditionalPosterior psi2_conditional(const DataSummary& s, Psi2Mode mode = Psi2Mode::Exact,
                                      PriorKind kind = PriorKind::Reference);

}  // namespace refprior
