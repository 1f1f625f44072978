#include "refprior/priors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace refprior {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(PriorKind k) {
    switch (k) {
        case PriorKind::Reference: return "reference";
        case PriorKind::Jeffreys: return "jeffreys";
        case PriorKind::Flat: return "flat";
    }
    return "?";
}

PriorKind prior_kind_from_string(const std::string& s) {
    if (s == "reference") return PriorKind::Reference;
    if (s == "jeffreys") return PriorKind::Jeffreys;
    if (s == "flat") return PriorKind::Flat;
    throw std::invalid_argument("unknown prior '" + s + "' (expected reference|jeffreys|flat)");
}

void PriorBox::validate() const {
    auto check = [](double lo, double hi, const char* name) {
        if (!(0.0 < lo && lo < hi))
            throw std::invalid_argument(std::string("prior.box: need 0 < lo < hi for ") + name);
    };
    check(psi2_lo, psi2_hi, "psi2");
    check(phi2_lo, phi2_hi, "phi2");
    check(q_lo, q_hi, "q");
}

double PriorSpec::exponent_psi2() const {
    switch (kind) {
        case PriorKind::Reference: return -1.5;
        case PriorKind::Jeffreys: return -1.0;
        case PriorKind::Flat: return 0.0;
    }
    return 0.0;
}

double PriorSpec::exponent_phi2() const { return exponent_psi2(); }

double PriorSpec::exponent_q() const { return kind == PriorKind::Flat ? 0.0 : -1.0; }

double power_law_log_normalizer(double expo, double lo, double hi) {
    if (expo == -1.0) return std::log(std::log(hi / lo));
    double p = expo + 1.0;
    return std::log((std::pow(hi, p) - std::pow(lo, p)) / p);
}

double sample_power_law(double expo, double lo, double hi, RngStream& rng) {
    double u = rng.uniform01();
    if (expo == -1.0) return lo * std::pow(hi / lo, u);
    double p = expo + 1.0;
    double lp = std::pow(lo, p);
    return std::pow(lp + u * (std::pow(hi, p) - lp), 1.0 / p);
}

double PriorSpec::log_normalizer() const {
    if (!box) throw std::invalid_argument("PriorSpec::log_normalizer: prior is not truncated");
    box->validate();
    return power_law_log_normalizer(exponent_psi2(), box->psi2_lo, box->psi2_hi) +
           power_law_log_normalizer(exponent_phi2(), box->phi2_lo, box->phi2_hi) +
           power_law_log_normalizer(exponent_q(), box->q_lo, box->q_hi);
}

double log_prior(const PriorSpec& spec, const NuisanceParams& params) {
    if (!(params.psi2 > 0.0 && params.phi2 > 0.0 && params.q > 0.0)) return -kInf;
    if (spec.box) {
        const PriorBox& b = *spec.box;
        if (params.psi2 < b.psi2_lo || params.psi2 > b.psi2_hi || params.phi2 < b.phi2_lo ||
            params.phi2 > b.phi2_hi || params.q < b.q_lo || params.q > b.q_hi)
            return -kInf;
    }
    double out = spec.exponent_psi2() * std::log(params.psi2) +
                 spec.exponent_phi2() * std::log(params.phi2) +
                 spec.exponent_q() * std::log(params.q);
    if (spec.box) out -= spec.log_normalizer();
    return out;
}

NuisanceParams sample_prior(const PriorSpec& spec, int A, RngStream& rng) {
    if (!spec.box) throw std::invalid_argument("sample_prior: prior must be truncated (proper)");
    spec.box->validate();
    double psi2 = sample_power_law(spec.exponent_psi2(), spec.box->psi2_lo, spec.box->psi2_hi, rng);
    double phi2 = sample_power_law(spec.exponent_phi2(), spec.box->phi2_lo, spec.box->phi2_hi, rng);
    double q = sample_power_law(spec.exponent_q(), spec.box->q_lo, spec.box->q_hi, rng);
    return NuisanceParams::from_phi2(psi2, phi2, q, A);
}

ConditionalPosterior logq_conditional(const DataSummary& s, const NuisanceParams& params,
                                      PriorKind kind) {
    if (s.T < 1) throw std::invalid_argument("logq_conditional: T >= 1 required");
    ConditionalPosterior c;
    c.family = ConditionalPosterior::Family::Normal;
    c.variance = params.phi2 / (static_cast<double>(s.A) * s.A * s.T);
    c.mean = s.S1 / (static_cast<double>(s.A) * s.T);
    // A flat prior in q is exp(log q) in log q and shifts the mean by the
    // conditional variance; the 1/q priors are flat in log q.
    if (kind == PriorKind::Flat) c.mean += c.variance;
    return c;
}

ConditionalPosterior phi2_conditional(const DataSummary& s, double log_q, PriorKind kind) {
    if (s.T < 1) throw std::invalid_argument("phi2_conditional: T >= 1 required");
    double alq = s.A * log_q;
    double rate = 0.5 * (s.S2 - 2.0 * alq * s.S1 + s.T * alq * alq);
    if (!(rate > 0.0))
        throw std::domain_error("phi2_conditional: degenerate rate (all residuals zero)");
    double prior_expo = PriorSpec{kind, std::nullopt}.exponent_phi2();
    double shape = 0.5 * s.T - prior_expo - 1.0;
    ConditionalPosterior c;
    if (shape > 0.0) {
        c.family = ConditionalPosterior::Family::InverseGamma;
        c.shape = shape;
        c.rate = rate;
    } else {
        // Kernel x^{prior-T/2} exp(-rate/x) is not inverse gamma; still a
        // proper density on any truncation box.
        c.family = ConditionalPosterior::Family::NonConjugate;
        double coef = prior_expo - 0.5 * s.T;
        c.log_density = [coef, rate](double x) { return coef * std::log(x) - rate / x; };
        c.support_lo = 0.0;
        c.support_hi = kInf;
    }
    return c;
}

ConditionalPosterior psi2_conditional(const DataSummary& s, Psi2Mode mode, PriorKind kind) {
    if (s.T < 1) throw std::invalid_argument("psi2_conditional: T >= 1 required");
    double prior_expo = PriorSpec{kind, std::nullopt}.exponent_psi2();
    ConditionalPosterior c;
    if (mode == Psi2Mode::Conjugate) {
        double rate = 0.5 * s.D2;
        if (!(rate > 0.0))
            throw std::domain_error("psi2_conditional: degenerate rate (all residuals zero)");
        double shape = 0.5 * s.T - prior_expo - 1.0;
        if (shape > 0.0) {
            c.family = ConditionalPosterior::Family::InverseGamma;
            c.shape = shape;
            c.rate = rate;
        } else {
            c.family = ConditionalPosterior::Family::NonConjugate;
            double coef = prior_expo - 0.5 * s.T;
            c.log_density = [coef, rate](double x) { return coef * std::log(x) - rate / x; };
            c.support_lo = 0.0;
            c.support_hi = kInf;
        }
        return c;
    }
    // Exact kernel including the -psi2/2 observation-bias shift:
    // (prior - T/2) log x - sum_t (d_t + x/2)^2 / (2x).
    double coef = prior_expo - 0.5 * s.T;
    double T = s.T, D1 = s.D1, D2 = s.D2;
    c.family = ConditionalPosterior::Family::NonConjugate;
    c.log_density = [coef, T, D1, D2](double x) {
        return coef * std::log(x) - (D2 + x * D1 + 0.25 * T * x * x) / (2.0 * x);
    };
    c.support_lo = 0.0;
    c.support_hi = kInf;
    return c;
}

ConditionalPosterior logq_conditional(const PopulationState& state, const ObservedData& data,
                                      const NuisanceParams& params, const ModelConfig& cfg) {
    return logq_conditional(DataSummary::from(state, data, cfg), params, PriorKind::Reference);
}

ConditionalPosterior phi2_conditional(const PopulationState& state, const ObservedData& data,
                                      const NuisanceParams& params, const ModelConfig& cfg) {
    return phi2_conditional(DataSummary::from(state, data, cfg), std::log(params.q),
                            PriorKind::Reference);
}

ConditionalPosterior psi2_conditional(const PopulationState& state, const ObservedData& data,
                                      const NuisanceParams& /*params*/, const ModelConfig& cfg,
                                      Psi2Mode mode) {
    return psi2_conditional(DataSummary::from(state, data, cfg), mode, PriorKind::Reference);
}

}  // namespace refprior
