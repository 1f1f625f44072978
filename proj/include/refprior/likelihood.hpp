#pragma once

#include <Eigen/Core>

#include "refprior/types.hpp"

namespace refprior {

/// Fixed parameter ordering used by the score and all information matrices:
/// (phi2, log q, Jtilde_1..Jtilde_T, psi2, log C_1..log C_T), dim 2T+3.
struct ParamOrder {
    int T;
    explicit ParamOrder(int T_) : T(T_) {}
    int dim() const { return 2 * T + 3; }
    int phi2() const { return 0; }
    int log_q() const { return 1; }
    int jtilde(int t) const { return 2 + t; }
    int psi2() const { return T + 2; }
    int log_c(int t) const { return T + 3 + t; }
};

/// Joint log density of the observed data given (theta_I, theta_N): the T
/// summed survey equations on the Jstar scale plus the T lognormal catch
/// densities for Cstar (Jacobian included).
double log_likelihood(const PopulationState& state, const NuisanceParams& params,
                      const ObservedData& data, const ModelConfig& cfg);

double survey_log_likelihood(const PopulationState& state, const NuisanceParams& params,
                             const ObservedData& data, const ModelConfig& cfg);
double catch_log_likelihood(const PopulationState& state, const NuisanceParams& params,
                            const ObservedData& data, const ModelConfig& cfg);

/// Gradient of log_likelihood in the ParamOrder coordinates.
Eigen::VectorXd score(const PopulationState& state, const NuisanceParams& params,
                      const ObservedData& data, const ModelConfig& cfg);

/// Per-dataset sufficient statistics for likelihood evaluation at many
/// parameter values (posterior grids, Gibbs conditionals).
///   S1 = sum(Jstar - Jtilde), S2 = sum((Jstar - Jtilde)^2)
///   D1 = sum(log Cstar - log C), D2 = sum((log Cstar - log C)^2)
struct DataSummary {
    int T = 0;
    int A = 0;
    double S1 = 0.0, S2 = 0.0;
    double D1 = 0.0, D2 = 0.0;
    double sum_log_cstar = 0.0;

    static DataSummary from(const PopulationState& state, const ObservedData& data,
                            const ModelConfig& cfg);
};

/// Identical value to log_likelihood(state, params, data, cfg) computed from
/// the sufficient statistics.
double log_likelihood(const DataSummary& summary, const NuisanceParams& params);
double survey_log_likelihood(const DataSummary& summary, double phi2, double log_q);
double catch_log_likelihood(const DataSummary& summary, double psi2);

}  // namespace refprior
