#include "refprior/types.hpp"

#include <cmath>
#include <stdexcept>

namespace refprior {

std::string to_string(Dynamics d) {
    switch (d) {
        case Dynamics::Pope: return "pope";
        case Dynamics::Baranov: return "baranov";
        case Dynamics::Direct: return "direct";
    }
    return "?";
}

Dynamics dynamics_from_string(const std::string& s) {
    if (s == "pope") return Dynamics::Pope;
    if (s == "baranov") return Dynamics::Baranov;
    if (s == "direct") return Dynamics::Direct;
    throw std::invalid_argument("unknown dynamics '" + s + "' (expected pope|baranov|direct)");
}

ModelConfig ModelConfig::uniform(int A, int T, double M, Dynamics dyn) {
    ModelConfig cfg;
    cfg.A = A;
    cfg.T = T;
    cfg.s = Eigen::VectorXd::Ones(A);
    cfg.M = Eigen::VectorXd::Constant(A, M);
    cfg.dynamics = dyn;
    return cfg;
}

void ModelConfig::validate() const {
    if (A < 1) throw std::invalid_argument("model.A: A >= 1 required");
    if (T < 2) throw std::invalid_argument("model.T: T >= 2 required");
    if (s.size() != A) throw std::invalid_argument("model.s: expected A entries");
    if (M.size() != A) throw std::invalid_argument("model.M: expected A entries");
    for (int a = 0; a < A; ++a) {
        if (!(s[a] > 0.0)) throw std::invalid_argument("model.s: all selectivities must be > 0");
        if (!(M[a] >= 0.0)) throw std::invalid_argument("model.M: mortality rates must be >= 0");
    }
    if (!(mu1_sd >= 0.0)) throw std::invalid_argument("model.mu1_sd: must be >= 0");
    if (!(mu2_sd >= 0.0)) throw std::invalid_argument("model.mu2_sd: must be >= 0");
    if (!(n_floor > 0.0)) throw std::invalid_argument("model.n_floor: must be > 0");
}

void PopulationState::validate(const ModelConfig& cfg) const {
    if (N.rows() != cfg.A || N.cols() != cfg.T)
        throw std::invalid_argument("PopulationState.N: shape mismatch with config");
    if (F.rows() != cfg.A || F.cols() != cfg.T)
        throw std::invalid_argument("PopulationState.F: shape mismatch with config");
    if (C.size() != cfg.T || Jtilde.size() != cfg.T)
        throw std::invalid_argument("PopulationState.C/Jtilde: expected T entries");
    if ((N.array() <= 0.0).any())
        throw std::invalid_argument("PopulationState.N: abundances must be > 0");
    if ((F.array() < 0.0).any())
        throw std::invalid_argument("PopulationState.F: fishing mortalities must be >= 0");
    if ((C.array() <= 0.0).any())
        throw std::invalid_argument("PopulationState.C: catches must be > 0");
}

Eigen::VectorXd jtilde_of(const Eigen::MatrixXd& N, const Eigen::VectorXd& s) {
    Eigen::VectorXd out(N.cols());
    for (Eigen::Index t = 0; t < N.cols(); ++t) {
        double sum = 0.0;
        for (Eigen::Index a = 0; a < N.rows(); ++a) sum += std::log(s[a] * N(a, t));
        out[t] = sum;
    }
    return out;
}

NuisanceParams NuisanceParams::from_components(double psi2, double q, double sigma2,
                                               double tau2, int A) {
    NuisanceParams p;
    p.psi2 = psi2;
    p.q = q;
    p.sigma2 = sigma2;
    p.tau2 = tau2;
    p.phi2 = A * sigma2 + static_cast<double>(A) * A * tau2;
    p.validate(A);
    return p;
}

NuisanceParams NuisanceParams::from_phi2(double psi2, double phi2, double q, int A) {
    NuisanceParams p;
    p.psi2 = psi2;
    p.phi2 = phi2;
    p.q = q;
    p.sigma2 = phi2 / A;
    p.tau2 = 0.0;
    p.validate(A);
    return p;
}

void NuisanceParams::validate(int A) const {
    if (!(psi2 > 0.0)) throw std::invalid_argument("params.psi2: must be > 0");
    if (!(phi2 > 0.0)) throw std::invalid_argument("params.phi2: must be > 0");
    if (!(q > 0.0)) throw std::invalid_argument("params.q: must be > 0");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("params.sigma2: must be >= 0");
    if (!(tau2 >= 0.0)) throw std::invalid_argument("params.tau2: must be >= 0");
    double expected = A * sigma2 + static_cast<double>(A) * A * tau2;
    if (std::abs(expected - phi2) > 1e-9 * std::max(1.0, phi2))
        throw std::invalid_argument("params.phi2: phi2 = A*sigma2 + A^2*tau2 violated");
}

void ObservedData::validate(const ModelConfig& cfg) const {
    if (Istar.rows() != cfg.A || Istar.cols() != cfg.T)
        throw std::invalid_argument("ObservedData.Istar: shape mismatch with config");
    if (Jstar.size() != cfg.T || Cstar.size() != cfg.T)
        throw std::invalid_argument("ObservedData.Jstar/Cstar: expected T entries");
    if ((Istar.array() <= 0.0).any())
        throw std::invalid_argument("ObservedData.Istar: indices must be > 0");
    if ((Cstar.array() <= 0.0).any())
        throw std::invalid_argument("ObservedData.Cstar: catches must be > 0");
    for (int t = 0; t < cfg.T; ++t) {
        double sum = 0.0;
        for (int a = 0; a < cfg.A; ++a) sum += std::log(Istar(a, t));
        if (std::abs(sum - Jstar[t]) > 1e-10 * std::max(1.0, std::abs(sum)))
            throw std::invalid_argument("ObservedData.Jstar: summation identity violated");
    }
}

}  // namespace refprior
