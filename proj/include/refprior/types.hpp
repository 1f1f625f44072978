#pragma once

#include <Eigen/Core>
#include <string>

namespace refprior {

enum class Dynamics { Pope, Baranov, Direct };

std::string to_string(Dynamics d);
Dynamics dynamics_from_string(const std::string& s);

/// Static description of the population/observation model: age classes,
/// time steps, survey selectivity, natural mortality, and the scale of the
/// multiplicative process noises on catches and survivors.
struct ModelConfig {
    int A = 1;                   // age classes, >= 1
    int T = 2;                   // time steps, >= 2
    Eigen::VectorXd s;           // A survey selectivities, each > 0
    Eigen::VectorXd M;           // A natural mortality rates, each >= 0
    Dynamics dynamics = Dynamics::Baranov;
    double mu1_sd = 0.0;         // sd of log-scale catch process noise
    double mu2_sd = 0.0;         // sd of log-scale survival process noise
    double n_floor = 1e-9;       // abundance floor; falling below is an error

    /// Uniform config: selectivity 1 and constant M for every age.
    static ModelConfig uniform(int A, int T, double M = 0.0,
                               Dynamics dyn = Dynamics::Baranov);

    void validate() const;  // throws std::invalid_argument naming the field
};

/// Latent population trajectory. Jtilde[t] = sum_a log(s_a * N(a,t)) always
/// holds exactly for states produced by this library.
struct PopulationState {
    Eigen::MatrixXd N;       // A x T abundances, > 0
    Eigen::MatrixXd F;       // A x T fishing mortalities, >= 0
    Eigen::MatrixXd Ca;      // A x T per-age catches (filled by the simulator)
    Eigen::VectorXd C;       // T total catches, > 0
    Eigen::VectorXd Jtilde;  // T summed log survey abundances

    void validate(const ModelConfig& cfg) const;
};

/// Recompute the summed log survey abundances from N and selectivity.
Eigen::VectorXd jtilde_of(const Eigen::MatrixXd& N, const Eigen::VectorXd& s);

/// Observation-process parameters: catch variance psi2, summed survey
/// variance phi2 with its per-age/year-effect decomposition, catchability q.
/// The decomposition satisfies phi2 = A*sigma2 + A^2*tau2.
struct NuisanceParams {
    double psi2 = 1.0;
    double phi2 = 1.0;
    double q = 1.0;
    double sigma2 = 0.0;
    double tau2 = 0.0;

    static NuisanceParams from_components(double psi2, double q, double sigma2,
                                          double tau2, int A);
    /// phi2 given directly; represented as sigma2 = phi2/A, tau2 = 0 (the
    /// split is not identified by the summed survey equations).
    static NuisanceParams from_phi2(double psi2, double phi2, double q, int A);

    void validate(int A) const;
};

/// Observed survey indices and catches. Jstar[t] = sum_a log(Istar(a,t))
/// exactly, by construction in both the simulator and the CSV reader.
struct ObservedData {
    Eigen::MatrixXd Istar;  // A x T, > 0
    Eigen::VectorXd Jstar;  // T
    Eigen::VectorXd Cstar;  // T, > 0

    void validate(const ModelConfig& cfg) const;
};

}  // namespace refprior
