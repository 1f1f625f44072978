#include "refprior/simulate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "refprior/rng.hpp"

namespace refprior {

namespace {

double pope_catch(double N, double F, double M) {
    return N * (1.0 - std::exp(-F)) * std::exp(-0.5 * M);
}

double baranov_catch(double N, double F, double M) {
    double Z = F + M;
    if (Z == 0.0) return 0.0;
    return F / Z * N * (1.0 - std::exp(-Z));
}

}  // namespace

PopulationState simulate_dynamics(const ModelConfig& cfg, const Eigen::VectorXd& N_init,
                                  const Eigen::MatrixXd& F, std::uint64_t seed,
                                  const Eigen::VectorXd& recruitment) {
    cfg.validate();
    if (cfg.dynamics == Dynamics::Direct)
        throw std::invalid_argument("simulate_dynamics: Direct dynamics take an external state");
    if (N_init.size() != cfg.A)
        throw std::invalid_argument("simulate_dynamics: N_init must have A entries");
    if ((N_init.array() <= 0.0).any())
        throw std::invalid_argument("simulate_dynamics: N_init must be > 0");
    if (F.rows() != cfg.A || F.cols() != cfg.T)
        throw std::invalid_argument("simulate_dynamics: F must be A x T");
    if ((F.array() < 0.0).any())
        throw std::invalid_argument("simulate_dynamics: F entries must be >= 0");

    Eigen::VectorXd recruit;
    if (cfg.A == 1) {
        if (recruitment.size() != 0)
            throw std::invalid_argument("simulate_dynamics: recruitment not supported for A = 1");
    } else if (recruitment.size() == 0) {
        recruit = Eigen::VectorXd::Constant(cfg.T - 1, N_init[0]);
    } else {
        if (recruitment.size() != cfg.T - 1)
            throw std::invalid_argument("simulate_dynamics: recruitment must have T-1 entries");
        if ((recruitment.array() <= 0.0).any())
            throw std::invalid_argument("simulate_dynamics: recruitment must be > 0");
        recruit = recruitment;
    }

    const bool pope = cfg.dynamics == Dynamics::Pope;
    RngStream rng(stream_seed(seed, 0));

    PopulationState st;
    st.N.resize(cfg.A, cfg.T);
    st.F = F;
    st.Ca.resize(cfg.A, cfg.T);
    st.C.resize(cfg.T);
    st.N.col(0) = N_init;

    for (int t = 0; t < cfg.T; ++t) {
        double total = 0.0;
        for (int a = 0; a < cfg.A; ++a) {
            double base = pope ? pope_catch(st.N(a, t), F(a, t), cfg.M[a])
                               : baranov_catch(st.N(a, t), F(a, t), cfg.M[a]);
            double noise = cfg.mu1_sd > 0.0 ? std::exp(rng.normal(0.0, cfg.mu1_sd)) : 1.0;
            st.Ca(a, t) = base * noise;
            total += st.Ca(a, t);
        }
        st.C[t] = total;

        if (t + 1 >= cfg.T) break;
        for (int a = 0; a < cfg.A; ++a) {
            double surv;
            if (pope) {
                surv = st.N(a, t) * std::exp(-cfg.M[a]) - st.Ca(a, t) * std::exp(-0.5 * cfg.M[a]);
            } else {
                surv = st.N(a, t) * std::exp(-(F(a, t) + cfg.M[a]));
            }
            if (cfg.mu2_sd > 0.0) surv *= std::exp(rng.normal(0.0, cfg.mu2_sd));
            if (!(surv >= cfg.n_floor))
                throw std::domain_error("simulate_dynamics: abundance below floor at (a=" +
                                        std::to_string(a + 1) + ", t=" + std::to_string(t + 2) + ")");
            if (cfg.A == 1) {
                st.N(0, t + 1) = surv;
            } else if (a + 1 < cfg.A) {
                st.N(a + 1, t + 1) = surv;
            }
            // age-A survivors leave the tracked population when A >= 2
        }
        if (cfg.A >= 2) st.N(0, t + 1) = recruit[t];
    }

    st.Jtilde = jtilde_of(st.N, cfg.s);
    return st;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> observe_survey(const PopulationState& state,
                                                           const NuisanceParams& params,
                                                           const ModelConfig& cfg,
                                                           std::uint64_t seed) {
    if (state.N.rows() != cfg.A || state.N.cols() != cfg.T)
        throw std::invalid_argument("observe_survey: state shape mismatch");
    if (!(params.q > 0.0)) throw std::invalid_argument("observe_survey: q must be > 0");
    if (params.sigma2 < 0.0 || params.tau2 < 0.0)
        throw std::invalid_argument("observe_survey: variances must be >= 0");

    RngStream rng(stream_seed(seed, 1));
    double sigma = std::sqrt(params.sigma2);
    double tau = std::sqrt(params.tau2);

    Eigen::MatrixXd Istar(cfg.A, cfg.T);
    Eigen::VectorXd Jstar(cfg.T);
    for (int t = 0; t < cfg.T; ++t) {
        double eta = tau > 0.0 ? rng.normal(0.0, tau) : 0.0;
        for (int a = 0; a < cfg.A; ++a) {
            double eps = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
            double logI = std::log(params.q * cfg.s[a] * state.N(a, t));
            Istar(a, t) = std::exp(logI + eps + eta);
        }
        // Sum the stored values so the Jstar identity holds bit-exactly.
        double sum = 0.0;
        for (int a = 0; a < cfg.A; ++a) sum += std::log(Istar(a, t));
        Jstar[t] = sum;
    }
    return {std::move(Istar), std::move(Jstar)};
}

Eigen::VectorXd observe_catch(const PopulationState& state, double psi2, std::uint64_t seed,
                              CatchBias bias) {
    if (!(psi2 > 0.0)) throw std::invalid_argument("observe_catch: psi2 must be > 0");
    if ((state.C.array() <= 0.0).any())
        throw std::invalid_argument("observe_catch: true catches must be > 0");

    RngStream rng(stream_seed(seed, 2));
    double psi = std::sqrt(psi2);
    double mean = bias == CatchBias::LaurentCorrected ? -0.5 * psi2 : 0.0;

    Eigen::VectorXd Cstar(state.C.size());
    for (Eigen::Index t = 0; t < state.C.size(); ++t)
        Cstar[t] = state.C[t] * std::exp(rng.normal(mean, psi));
    return Cstar;
}

ObservedData simulate_observations(const PopulationState& state, const NuisanceParams& params,
                                   const ModelConfig& cfg, std::uint64_t seed, CatchBias bias) {
    ObservedData data;
    auto survey = observe_survey(state, params, cfg, seed);
    data.Istar = std::move(survey.first);
    data.Jstar = std::move(survey.second);
    data.Cstar = observe_catch(state, params.psi2, seed, bias);
    return data;
}

PopulationState make_direct_state(const ModelConfig& cfg, Eigen::MatrixXd N, Eigen::MatrixXd F,
                                  Eigen::VectorXd C) {
    PopulationState st;
    st.N = std::move(N);
    st.F = std::move(F);
    st.C = std::move(C);
    st.Ca = Eigen::MatrixXd::Zero(cfg.A, cfg.T);
    st.Jtilde = jtilde_of(st.N, cfg.s);
    st.validate(cfg);
    return st;
}

PopulationState state_from_totals(const ModelConfig& cfg, const Eigen::VectorXd& C,
                                  const Eigen::VectorXd& Jtilde) {
    if (C.size() != cfg.T || Jtilde.size() != cfg.T)
        throw std::invalid_argument("state_from_totals: expected T entries");
    double sum_log_s = cfg.s.array().log().sum();
    Eigen::MatrixXd N(cfg.A, cfg.T);
    for (int t = 0; t < cfg.T; ++t) {
        double log_n = (Jtilde[t] - sum_log_s) / cfg.A;
        for (int a = 0; a < cfg.A; ++a) N(a, t) = std::exp(log_n);
    }
    PopulationState st;
    st.N = std::move(N);
    st.F = Eigen::MatrixXd::Zero(cfg.A, cfg.T);
    st.Ca = Eigen::MatrixXd::Zero(cfg.A, cfg.T);
    st.C = C;
    st.Jtilde = jtilde_of(st.N, cfg.s);
    st.validate(cfg);
    return st;
}

}  // namespace refprior
