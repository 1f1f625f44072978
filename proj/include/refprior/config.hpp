#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "refprior/gibbs.hpp"
#include "refprior/priors.hpp"
#include "refprior/types.hpp"

namespace refprior {

/// Config validation failure; carries the offending key and 1-based line.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& key_, int line_, const std::string& what)
        : std::runtime_error(line_ > 0 ? "config line " + std::to_string(line_) + " (" + key_ +
                                             "): " + what
                                       : "config (" + key_ + "): " + what),
          key(key_),
          line(line_) {}
    std::string key;
    int line;
};

struct RunConfig {
    ModelConfig model;
    std::optional<Eigen::VectorXd> N_init;
    std::optional<Eigen::VectorXd> F_by_age;       // constant over time
    std::optional<Eigen::VectorXd> recruitment;

    NuisanceParams params;   // simulation truth
    bool has_params = false;

    PriorSpec prior;
    SamplerConfig sampler;

    struct Paths {
        std::string catches, indices, state_time, state_ages;
        std::string output_dir = ".";
    } paths;

    struct Info {
        std::vector<int> T_list;
        std::vector<PriorKind> priors = {PriorKind::Reference, PriorKind::Jeffreys,
                                         PriorKind::Flat};
        int grid_n = 40;
        int n_outer = 400;
    } info;

    struct Sbc {
        int n_replicates = 500;
        int n_posterior_draws = 99;
        int n_bins = 20;
    } sbc;

    std::uint64_t seed = 0;
    std::string config_hash;  // FNV-1a of the raw file bytes
};

/// Parse and validate a flat dotted key-value config file for the given
/// command. Unknown keys, type mismatches and invariant violations raise
/// ConfigError naming the key (with its line where applicable).
RunConfig parse_config(const std::string& path, const std::string& command);

/// FNV-1a hash of a byte string, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace refprior
