#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refprior/priors.hpp"
#include "refprior/types.hpp"

namespace refprior {

/// Monte Carlo estimate of the expected posterior-prior Kullback-Leibler
/// divergence (mutual information between theta_N and the data) under a
/// proper prior, with theta_I held at a known truth.
struct MIEstimate {
    double value = 0.0;      // nats
    double std_error = 0.0;
    int n_outer = 0;
    std::int64_t n_inner = 0;  // grid nodes per replicate
    std::string grid_spec;
    bool boundary_warning = false;  // posterior mass > 1% on boundary nodes
};

/// For each replicate: theta ~ prior (inverse-CDF), data ~ f(.|theta), the
/// posterior is normalized on a log-midpoint lattice over the truncation box,
/// and KL(posterior || prior) is evaluated by the same quadrature. Returns
/// mean and standard error over replicates. `T` uses the first T columns of
/// the supplied state.
MIEstimate estimate_expected_kl(const PriorSpec& prior, const ModelConfig& cfg,
                                const PopulationState& state, int T, int n_outer, int grid_n,
                                std::uint64_t seed);

struct PriorComparisonRow {
    std::string prior;
    int T = 0;
    double mi = 0.0;
    double se = 0.0;
};

/// estimate_expected_kl for every (prior, T) combination; rows in input order.
std::vector<PriorComparisonRow> compare_priors(const ModelConfig& cfg,
                                               const PopulationState& state,
                                               const std::vector<int>& T_list,
                                               const std::vector<PriorSpec>& priors, int n_outer,
                                               int grid_n, std::uint64_t seed);

}  // namespace refprior
