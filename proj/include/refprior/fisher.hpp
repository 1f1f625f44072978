#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "refprior/likelihood.hpp"
#include "refprior/types.hpp"

namespace refprior {

/// Expected information matrix in the ParamOrder coordinates, built from the
/// closed-form blocks: scalar phi^-4/2, then A phi^-2 Sigma_a over
/// (log q, Jtilde), then psi^-2 Sigma_b / 2 over (psi2, log C).
struct FisherMatrix {
    int T = 0;
    int A = 0;
    Eigen::MatrixXd m;
    int dim() const { return 2 * T + 3; }
};

/// Exact Hessian of log_likelihood at the given point (all nine analytic
/// second-derivative formulas, other cross terms zero).
Eigen::MatrixXd analytic_hessian(const PopulationState& state, const NuisanceParams& params,
                                 const ObservedData& data, const ModelConfig& cfg);

FisherMatrix expected_fisher(const NuisanceParams& params, int T, int A);

/// Signed closed-form determinant of the displayed block matrix:
/// (phi^-4/2) (A phi^-2)^{T+1} (A-T) (psi^-2/2)^{T+1} 2^T (psi^-2 + 1/2 - T/2).
double det_sigma_closed(const NuisanceParams& params, int T, int A);

/// Determinant of Sigma_2 = diag(phi^-2 I_T, psi^-2 I_T).
double det_sigma2_closed(const NuisanceParams& params, int T);

/// Lower-triangular factor Q_b with Sigma_b = Q_b^T Q_b, valid when
/// psi^-2 + 1/2 >= T/2; outside that regime the displayed factor no longer
/// reproduces the corner entry (diagnosed by fisher_check_report).
Eigen::MatrixXd qb_factor(int T, double psi2);

/// log pi^J(psi2, phi2, log q) up to an additive constant:
/// -(3/2) log phi2 - log psi2 + (1/2) log|(T-1) psi2 - 2|.
/// Returns -inf at psi2 = 2/(T-1). Does not depend on q or A.
double partial_jeffreys_log(const NuisanceParams& params, int T, int A);

/// Monte Carlo estimate of E[-hessian] per dataset of length cfg.T, with
/// per-entry standard errors. Samples are split into fixed-size chunks with
/// derived seeds and merged in chunk order, so results do not depend on the
/// worker count.
struct McHessian {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd se;
    std::int64_t n_samples = 0;
};
McHessian mc_expected_hessian(const NuisanceParams& params, const PopulationState& state,
                              const ModelConfig& cfg, std::int64_t n_samples, std::uint64_t seed);

/// Central finite differences of log_likelihood in the ParamOrder
/// coordinates; the numerical oracle for the analytic score and Hessian.
Eigen::VectorXd finite_difference_score(const PopulationState& state, const NuisanceParams& params,
                                        const ObservedData& data, const ModelConfig& cfg,
                                        double rel_step = 1e-6);
Eigen::MatrixXd finite_difference_hessian(const PopulationState& state,
                                          const NuisanceParams& params, const ObservedData& data,
                                          const ModelConfig& cfg, double rel_step = 1e-4);

/// One row per verified identity of the information algebra.
struct CheckRow {
    std::string identity;
    double max_abs_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};
std::vector<CheckRow> fisher_check_report(int T, int A, std::uint64_t seed, std::int64_t n_mc);

}  // namespace refprior
