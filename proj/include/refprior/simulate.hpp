#pragma once

#include <cstdint>
#include <utility>

#include "refprior/types.hpp"

namespace refprior {

/// Mean of the multiplicative catch observation error. LaurentCorrected puts
/// the lognormal mean at -psi2/2 so E[Cstar] = C; MeanZero is a diagnostic
/// switch that drops the correction.
enum class CatchBias { LaurentCorrected, MeanZero };

/// Forward-simulate abundances and catches.
///
/// Cohort sheet: column 1 is N_init; survivors of age a move to age a+1 the
/// next year (age-A survivors leave the population); for A >= 2 the first age
/// is refilled from `recruitment` (default: constant N_init[0]); for A == 1
/// the single class is a closed cohort aggregate evolving by pure survival
/// and `recruitment` must be empty.
///
/// Pope:    C = N (1-e^{-F}) e^{-M/2} e^{mu1},   surv = (N e^{-M} - C e^{-M/2}) e^{mu2}
/// Baranov: C = F/(F+M) N (1-e^{-(F+M)}) e^{mu1}, surv = N e^{-(F+M)} e^{mu2}
///
/// Throws std::domain_error naming (a, t) if an abundance falls below
/// cfg.n_floor. Identical seeds give bit-identical states.
PopulationState simulate_dynamics(const ModelConfig& cfg, const Eigen::VectorXd& N_init,
                                  const Eigen::MatrixXd& F, std::uint64_t seed,
                                  const Eigen::VectorXd& recruitment = Eigen::VectorXd());

/// Survey observation channel: I = q s_a N, log Istar = log I + eps + eta
/// with eps ~ N(0, sigma2) iid over (a,t) and eta ~ N(0, tau2) shared across
/// ages within a year. Jstar is the exact column sum of log Istar.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> observe_survey(const PopulationState& state,
                                                           const NuisanceParams& params,
                                                           const ModelConfig& cfg,
                                                           std::uint64_t seed);

/// Catch observation channel: Cstar = C exp(nu), nu ~ N(-psi2/2, psi2) under
/// the default bias correction.
Eigen::VectorXd observe_catch(const PopulationState& state, double psi2, std::uint64_t seed,
                              CatchBias bias = CatchBias::LaurentCorrected);

/// Both channels with substreams derived from one seed.
ObservedData simulate_observations(const PopulationState& state, const NuisanceParams& params,
                                   const ModelConfig& cfg, std::uint64_t seed,
                                   CatchBias bias = CatchBias::LaurentCorrected);

/// Assemble a state from externally supplied trajectories (Direct dynamics).
/// Jtilde is recomputed from N so the summation identity holds exactly.
PopulationState make_direct_state(const ModelConfig& cfg, Eigen::MatrixXd N, Eigen::MatrixXd F,
                                  Eigen::VectorXd C);

/// State carrying only (C, Jtilde) information, with N synthesized as the
/// equal-abundance representation of Jtilde and F = 0. Supports fitting in
/// nuisance-only mode when per-age abundances were never recorded.
PopulationState state_from_totals(const ModelConfig& cfg, const Eigen::VectorXd& C,
                                  const Eigen::VectorXd& Jtilde);

}  // namespace refprior
