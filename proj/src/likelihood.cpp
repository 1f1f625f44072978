#include "refprior/likelihood.hpp"

#include <cmath>
#include <stdexcept>

namespace refprior {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

void check_inputs(const PopulationState& state, const NuisanceParams& params,
                  const ObservedData& data, const ModelConfig& cfg) {
    if (state.Jtilde.size() != cfg.T || state.C.size() != cfg.T)
        throw std::invalid_argument("log_likelihood: state shape mismatch");
    if (data.Jstar.size() != cfg.T || data.Cstar.size() != cfg.T)
        throw std::invalid_argument("log_likelihood: data shape mismatch");
    if (!(params.psi2 > 0.0 && params.phi2 > 0.0 && params.q > 0.0))
        throw std::invalid_argument("log_likelihood: parameters must be > 0");
    if (!state.Jtilde.allFinite() || !state.C.allFinite() || !data.Jstar.allFinite() ||
        !data.Cstar.allFinite())
        throw std::invalid_argument("log_likelihood: nonfinite inputs");
}

}  // namespace

double survey_log_likelihood(const PopulationState& state, const NuisanceParams& params,
                             const ObservedData& data, const ModelConfig& cfg) {
    check_inputs(state, params, data, cfg);
    double a_log_q = cfg.A * std::log(params.q);
    double out = 0.0;
    for (int t = 0; t < cfg.T; ++t) {
        double r = data.Jstar[t] - state.Jtilde[t] - a_log_q;
        out += -0.5 * (kLogTwoPi + std::log(params.phi2)) - r * r / (2.0 * params.phi2);
    }
    return out;
}

double catch_log_likelihood(const PopulationState& state, const NuisanceParams& params,
                            const ObservedData& data, const ModelConfig& cfg) {
    check_inputs(state, params, data, cfg);
    double out = 0.0;
    for (int t = 0; t < cfg.T; ++t) {
        double log_cstar = std::log(data.Cstar[t]);
        double u = log_cstar - std::log(state.C[t]) + 0.5 * params.psi2;
        out += -0.5 * (kLogTwoPi + std::log(params.psi2)) - u * u / (2.0 * params.psi2) - log_cstar;
    }
    return out;
}

double log_likelihood(const PopulationState& state, const NuisanceParams& params,
                      const ObservedData& data, const ModelConfig& cfg) {
    return survey_log_likelihood(state, params, data, cfg) +
           catch_log_likelihood(state, params, data, cfg);
}

Eigen::VectorXd score(const PopulationState& state, const NuisanceParams& params,
                      const ObservedData& data, const ModelConfig& cfg) {
    check_inputs(state, params, data, cfg);
    ParamOrder ord(cfg.T);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ord.dim());
    const double phi2 = params.phi2;
    const double psi2 = params.psi2;
    const double a_log_q = cfg.A * std::log(params.q);
    for (int t = 0; t < cfg.T; ++t) {
        double r = data.Jstar[t] - state.Jtilde[t] - a_log_q;
        g[ord.phi2()] += -0.5 / phi2 + r * r / (2.0 * phi2 * phi2);
        g[ord.log_q()] += cfg.A * r / phi2;
        g[ord.jtilde(t)] = r / phi2;

        double u = std::log(data.Cstar[t]) - std::log(state.C[t]) + 0.5 * psi2;
        g[ord.psi2()] += -0.5 / psi2 - u / (2.0 * psi2) + u * u / (2.0 * psi2 * psi2);
        g[ord.log_c(t)] = u / psi2;
    }
    return g;
}

DataSummary DataSummary::from(const PopulationState& state, const ObservedData& data,
                              const ModelConfig& cfg) {
    DataSummary s;
    s.T = cfg.T;
    s.A = cfg.A;
    for (int t = 0; t < cfg.T; ++t) {
        double rj = data.Jstar[t] - state.Jtilde[t];
        s.S1 += rj;
        s.S2 += rj * rj;
        double log_cstar = std::log(data.Cstar[t]);
        double d = log_cstar - std::log(state.C[t]);
        s.D1 += d;
        s.D2 += d * d;
        s.sum_log_cstar += log_cstar;
    }
    return s;
}

double survey_log_likelihood(const DataSummary& s, double phi2, double log_q) {
    double alq = s.A * log_q;
    double ss = s.S2 - 2.0 * alq * s.S1 + s.T * alq * alq;
    return -0.5 * s.T * (kLogTwoPi + std::log(phi2)) - ss / (2.0 * phi2);
}

double catch_log_likelihood(const DataSummary& s, double psi2) {
    // sum (d_t + psi2/2)^2 = D2 + psi2 D1 + T psi2^2 / 4
    double ss = s.D2 + psi2 * s.D1 + 0.25 * s.T * psi2 * psi2;
    return -0.5 * s.T * (kLogTwoPi + std::log(psi2)) - ss / (2.0 * psi2) - s.sum_log_cstar;
}

double log_likelihood(const DataSummary& s, const NuisanceParams& params) {
    return survey_log_likelihood(s, params.phi2, std::log(params.q)) +
           catch_log_likelihood(s, params.psi2);
}

}  // namespace refprior
