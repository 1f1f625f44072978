#include <doctest.h>

#include <Eigen/LU>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "refprior/fisher.hpp"
#include "refprior/rng.hpp"
#include "refprior/simulate.hpp"

using namespace refprior;

TEST_SUITE_BEGIN("fisher");

namespace {

PopulationState random_state(const ModelConfig& cfg, RngStream& rng) {
    PopulationState st;
    st.N.resize(cfg.A, cfg.T);
    st.F = Eigen::MatrixXd::Zero(cfg.A, cfg.T);
    st.Ca = Eigen::MatrixXd::Zero(cfg.A, cfg.T);
    st.C.resize(cfg.T);
    for (int t = 0; t < cfg.T; ++t) {
        for (int a = 0; a < cfg.A; ++a) st.N(a, t) = std::exp(rng.normal(std::log(40.0), 0.3));
        st.C[t] = std::exp(rng.normal(std::log(25.0), 0.4));
    }
    st.Jtilde = jtilde_of(st.N, cfg.s);
    return st;
}

double lu_det(const Eigen::MatrixXd& m) { return Eigen::FullPivLU<Eigen::MatrixXd>(m).determinant(); }

}  // namespace

TEST_CASE("hessian diagonal entries match the closed forms") {
    ModelConfig cfg = ModelConfig::uniform(2, 3);
    RngStream rng(3);
    PopulationState st = random_state(cfg, rng);
    NuisanceParams p = NuisanceParams::from_phi2(4.0, 4.0, 1.5, 2);
    ObservedData data = simulate_observations(st, p, cfg, 5);
    Eigen::MatrixXd H = analytic_hessian(st, p, data, cfg);
    ParamOrder ord(3);
    // per observation -1/psi2 on each log C_t diagonal entry
    for (int t = 0; t < 3; ++t) CHECK(H(ord.log_c(t), ord.log_c(t)) == doctest::Approx(-0.25));
    // per observation -A^2/phi2 = -1, summed over T = 3 observations
    CHECK(H(ord.log_q(), ord.log_q()) == doctest::Approx(3.0 * -1.0));
    // per observation -A/phi2 cross term and -1/phi2 diagonal
    for (int t = 0; t < 3; ++t) {
        CHECK(H(ord.jtilde(t), ord.log_q()) == doctest::Approx(-0.5));
        CHECK(H(ord.jtilde(t), ord.jtilde(t)) == doctest::Approx(-0.25));
    }
}

TEST_CASE("hessian is symmetric with zero cross-group entries") {
    ModelConfig cfg = ModelConfig::uniform(3, 4);
    RngStream rng(7);
    PopulationState st = random_state(cfg, rng);
    NuisanceParams p = NuisanceParams::from_phi2(0.8, 1.2, 1.0, 3);
    ObservedData data = simulate_observations(st, p, cfg, 9);
    Eigen::MatrixXd H = analytic_hessian(st, p, data, cfg);
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
    ParamOrder ord(4);
    // survey parameters never mix with catch parameters
    for (int i = 0; i <= ord.jtilde(3); ++i)
        for (int j = ord.psi2(); j < ord.dim(); ++j) CHECK(H(i, j) == 0.0);
}

TEST_CASE("hessian matches finite differences at random interior points") {
    RngStream rng(11);
    ModelConfig cfg = ModelConfig::uniform(3, 5);
    for (int k = 0; k < 10; ++k) {
        PopulationState st = random_state(cfg, rng);
        NuisanceParams p = NuisanceParams::from_phi2(std::exp(rng.uniform(-0.7, 0.7)),
                                                     std::exp(rng.uniform(-0.7, 0.7)),
                                                     std::exp(rng.uniform(-0.7, 0.7)), 3);
        ObservedData data = simulate_observations(st, p, cfg, rng.raw());
        Eigen::MatrixXd Ha = analytic_hessian(st, p, data, cfg);
        Eigen::MatrixXd Hf = finite_difference_hessian(st, p, data, cfg);
        double scale = Ha.cwiseAbs().maxCoeff();
        CHECK((Ha - Hf).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
}

TEST_CASE("expected fisher reproduces the displayed blocks") {
    SUBCASE("Sigma_b block for T = 2, psi2 = phi2 = 1") {
        NuisanceParams p = NuisanceParams::from_phi2(1.0, 1.0, 1.0, 1);
        FisherMatrix fm = expected_fisher(p, 2, 1);
        // psi^-2 Sigma_b / 2 with Sigma_b = [[1.5,-1,-1],[-1,2,0],[-1,0,2]]
        Eigen::MatrixXd block = 2.0 * fm.m.bottomRightCorner(3, 3);
        CHECK(block(0, 0) == doctest::Approx(1.5));
        CHECK(block(0, 1) == doctest::Approx(-1.0));
        CHECK(block(0, 2) == doctest::Approx(-1.0));
        CHECK(block(1, 1) == doctest::Approx(2.0));
        CHECK(block(1, 2) == doctest::Approx(0.0));
        CHECK(block(2, 2) == doctest::Approx(2.0));
    }
    SUBCASE("Sigma_a block for T = 2, A = 3") {
        NuisanceParams p = NuisanceParams::from_phi2(1.0, 1.0, 1.0, 3);
        FisherMatrix fm = expected_fisher(p, 2, 3);
        // A phi^-2 Sigma_a with Sigma_a = [[3,1,1],[1,1,0],[1,0,1]]
        Eigen::MatrixXd block = fm.m.block(1, 1, 3, 3) / 3.0;
        CHECK(block(0, 0) == doctest::Approx(3.0));
        CHECK(block(0, 1) == doctest::Approx(1.0));
        CHECK(block(1, 1) == doctest::Approx(1.0));
        CHECK(block(1, 2) == doctest::Approx(0.0));
    }
    SUBCASE("phi2 scalar entry") {
        NuisanceParams p = NuisanceParams::from_phi2(1.0, 2.0, 1.0, 1);
        FisherMatrix fm = expected_fisher(p, 2, 1);
        CHECK(fm.m(0, 0) == doctest::Approx(0.03125));
    }
    SUBCASE("cross-group entries are exactly zero") {
        NuisanceParams p = NuisanceParams::from_phi2(0.7, 1.8, 2.2, 4);
        FisherMatrix fm = expected_fisher(p, 5, 4);
        ParamOrder ord(5);
        for (int j = 1; j < ord.dim(); ++j) CHECK(fm.m(0, j) == 0.0);
        for (int i = ord.log_q(); i <= ord.jtilde(4); ++i)
            for (int j = ord.psi2(); j < ord.dim(); ++j) CHECK(fm.m(i, j) == 0.0);
        CHECK((fm.m - fm.m.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("closed-form determinant at the worked example") {
    // (phi^-4/2) (A phi^-2)^(T+1) (A-T) (psi^-2/2)^(T+1) 2^T (psi^-2 + 1/2 - T/2)
    // = 0.5 * 27 * 1 * 0.125 * 4 * 0.5 = 6.75 at T=2, A=3, psi2=phi2=1
    NuisanceParams p = NuisanceParams::from_phi2(1.0, 1.0, 1.0, 3);
    CHECK(det_sigma_closed(p, 2, 3) == doctest::Approx(6.75).epsilon(1e-14));
    CHECK(lu_det(expected_fisher(p, 2, 3).m) == doctest::Approx(6.75).epsilon(1e-12));
}

TEST_CASE("determinant vanishes at psi2 = 2/(T-1)") {
    for (int T : {3, 5, 9}) {
        NuisanceParams p = NuisanceParams::from_phi2(2.0 / (T - 1), 1.3, 0.7, 2);
        CHECK(det_sigma_closed(p, T, 2) == doctest::Approx(0.0).epsilon(1e-13));
        CHECK(std::abs(lu_det(expected_fisher(p, T, 2).m)) < 1e-10);
    }
}

TEST_CASE("closed determinant agrees with the LU oracle at random points") {
    RngStream rng(13);
    for (int k = 0; k < 50; ++k) {
        int T = 2 + static_cast<int>(rng.raw() % 7);
        int A = 1 + static_cast<int>(rng.raw() % 6);
        NuisanceParams p = NuisanceParams::from_phi2(
            std::exp(rng.uniform(std::log(0.25), std::log(4.0))),
            std::exp(rng.uniform(std::log(0.25), std::log(4.0))), 1.0, A);
        double closed = det_sigma_closed(p, T, A);
        double lu = lu_det(expected_fisher(p, T, A).m);
        double denom = std::max(std::abs(closed), std::abs(lu));
        if (denom < 1e-12) continue;
        CHECK(std::abs(closed - lu) / denom < 1e-9);
    }
}

TEST_CASE("parameter dependence law of the determinant") {
    // |det| * phi^(6+2T) * psi^2(T+2) / |(T-1) psi2 - 2| constant at fixed (T, A)
    const int T = 5, A = 4;
    double first = 0.0;
    bool have_first = false;
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            double psi2 = 0.25 * std::pow(2.0, i);
            double phi2 = 0.25 * std::pow(2.0, j);
            double denom = std::abs((T - 1) * psi2 - 2.0);
            if (denom < 1e-9) continue;
            NuisanceParams p = NuisanceParams::from_phi2(psi2, phi2, 1.0, A);
            double ratio = std::abs(det_sigma_closed(p, T, A)) * std::pow(phi2, 3 + T) *
                           std::pow(psi2, T + 2) / denom;
            if (!have_first) {
                first = ratio;
                have_first = true;
            } else {
                CHECK(std::abs(ratio - first) / first < 1e-10);
            }
        }
    }
    CHECK(have_first);
}

TEST_CASE("sigma2 determinant") {
    NuisanceParams p1 = NuisanceParams::from_phi2(1.0, 1.0, 1.0, 1);
    CHECK(det_sigma2_closed(p1, 4) == doctest::Approx(1.0));
    NuisanceParams p2 = NuisanceParams::from_phi2(2.0, 1.0, 1.0, 1);
    CHECK(det_sigma2_closed(p2, 3) == doctest::Approx(0.125).epsilon(1e-14));

    RngStream rng(19);
    for (int k = 0; k < 10; ++k) {
        int T = 2 + static_cast<int>(rng.raw() % 6);
        NuisanceParams p = NuisanceParams::from_phi2(std::exp(rng.uniform(-1.0, 1.0)),
                                                     std::exp(rng.uniform(-1.0, 1.0)), 1.0, 1);
        Eigen::MatrixXd S2 = Eigen::MatrixXd::Zero(2 * T, 2 * T);
        for (int t = 0; t < T; ++t) {
            S2(t, t) = 1.0 / p.phi2;
            S2(T + t, T + t) = 1.0 / p.psi2;
        }
        CHECK(std::abs(det_sigma2_closed(p, T) - lu_det(S2)) / det_sigma2_closed(p, T) < 1e-12);
    }
}

TEST_CASE("qb factor reproduces sigma_b in the valid regime") {
    // T = 2, psi2 = 1: corner 1.5 >= T/2 = 1, factorization exact
    const int T = 2;
    const double psi2 = 1.0;
    Eigen::MatrixXd Q = qb_factor(T, psi2);
    NuisanceParams p = NuisanceParams::from_phi2(psi2, 1.0, 1.0, 1);
    Eigen::MatrixXd Sb = 2.0 * psi2 * expected_fisher(p, T, 1).m.bottomRightCorner(T + 1, T + 1);
    CHECK((Q.transpose() * Q - Sb).cwiseAbs().maxCoeff() < 1e-12);

    double det_q = Q.diagonal().prod();
    CHECK(det_q * det_q == doctest::Approx(std::abs(lu_det(Sb))).epsilon(1e-10));
}

TEST_CASE("qb corner misses outside the regime by the predicted amount") {
    // T = 6, psi2 = 4: psi^-2 + 1/2 = 0.75 < T/2 = 3; discrepancy 2*(3 - 0.75) = 4.5
    Eigen::MatrixXd Q = qb_factor(6, 4.0);
    double corner = (2.0 + 4.0) / (2.0 * 4.0);
    double got = (Q.transpose() * Q)(0, 0);
    CHECK(got - corner == doctest::Approx(4.5).epsilon(1e-13));
}

TEST_CASE("partial jeffreys closed form") {
    SUBCASE("boundary and the T = 4 zero point") {
        NuisanceParams p = NuisanceParams::from_phi2(1.0, 1.0, 1.0, 1);
        CHECK(partial_jeffreys_log(p, 3, 1) == -std::numeric_limits<double>::infinity());
        CHECK(partial_jeffreys_log(p, 4, 1) == doctest::Approx(0.0));
    }
    SUBCASE("phi^-3 scaling") {
        NuisanceParams hi = NuisanceParams::from_phi2(1.0, 4.0, 1.0, 1);
        NuisanceParams lo = NuisanceParams::from_phi2(1.0, 1.0, 1.0, 1);
        double ratio = std::exp(partial_jeffreys_log(hi, 4, 1) - partial_jeffreys_log(lo, 4, 1));
        CHECK(ratio == doctest::Approx(0.125).epsilon(1e-13));
    }
    SUBCASE("agrees with half the log determinant ratio up to a constant") {
        const int T = 6, A = 3;
        double first_diff = 0.0;
        bool have = false;
        for (double psi2 : {0.3, 0.9, 2.7}) {
            for (double phi2 : {0.4, 1.1, 3.3}) {
                NuisanceParams p = NuisanceParams::from_phi2(psi2, phi2, 1.4, A);
                double lu = lu_det(expected_fisher(p, T, A).m);
                double half = 0.5 * (std::log(std::abs(lu)) - std::log(det_sigma2_closed(p, T)));
                double diff = partial_jeffreys_log(p, T, A) - half;
                if (!have) {
                    first_diff = diff;
                    have = true;
                } else {
                    CHECK(std::abs(diff - first_diff) < 1e-10);
                }
            }
        }
    }
    SUBCASE("does not depend on q") {
        const int T = 5, A = 2;
        double ref = partial_jeffreys_log(NuisanceParams::from_phi2(0.8, 1.3, 0.1, A), T, A);
        for (double q : {1.0, 10.0}) {
            NuisanceParams p = NuisanceParams::from_phi2(0.8, 1.3, q, A);
            CHECK(partial_jeffreys_log(p, T, A) == ref);
        }
    }
}

TEST_CASE("monte carlo information at T = 1 reproduces the expectation identities") {
    const int A = 2;
    ModelConfig cfg = ModelConfig::uniform(A, 1);
    PopulationState st;
    st.N = Eigen::MatrixXd::Constant(A, 1, 50.0);
    st.F = Eigen::MatrixXd::Zero(A, 1);
    st.Ca = Eigen::MatrixXd::Zero(A, 1);
    st.C = Eigen::VectorXd::Constant(1, 30.0);
    st.Jtilde = jtilde_of(st.N, cfg.s);
    NuisanceParams p = NuisanceParams::from_phi2(0.8, 1.5, 1.2, A);
    McHessian mc = mc_expected_hessian(p, st, cfg, 40000, 2027);
    ParamOrder ord(1);

    // deterministic entries have zero spread
    CHECK(mc.se(ord.log_c(0), ord.log_c(0)) == 0.0);
    CHECK(mc.mean(ord.log_c(0), ord.log_c(0)) == doctest::Approx(1.0 / p.psi2).epsilon(1e-12));
    CHECK(mc.mean(ord.log_q(), ord.log_q()) == doctest::Approx(4.0 / p.phi2).epsilon(1e-12));
    CHECK(mc.mean(ord.log_q(), ord.jtilde(0)) == doctest::Approx(2.0 / p.phi2).epsilon(1e-12));

    // E[(log C* - log C)^2] = psi2 + psi4/4 feeds the psi2 diagonal
    double expect_psi2 = (2.0 + p.psi2) / (4.0 * p.psi2 * p.psi2);
    CHECK(std::abs(mc.mean(ord.psi2(), ord.psi2()) - expect_psi2) <
          3.0 * mc.se(ord.psi2(), ord.psi2()));
    // E[log C* - log C] = -psi2/2 feeds the (psi2, log C) cross entry
    CHECK(std::abs(mc.mean(ord.psi2(), ord.log_c(0)) + 0.5 / p.psi2) <
          3.0 * mc.se(ord.psi2(), ord.log_c(0)));
    // E[r^2] = phi2 feeds the phi2 diagonal
    CHECK(std::abs(mc.mean(ord.phi2(), ord.phi2()) - 0.5 / (p.phi2 * p.phi2)) <
          3.0 * mc.se(ord.phi2(), ord.phi2()));

    // the Jtilde diagonal settles at 1/phi2, factor A below the displayed block
    CHECK(mc.se(ord.jtilde(0), ord.jtilde(0)) == 0.0);
    CHECK(mc.mean(ord.jtilde(0), ord.jtilde(0)) == doctest::Approx(1.0 / p.phi2).epsilon(1e-12));
    double displayed = expected_fisher(p, 2, A).m(2, 2);
    CHECK(displayed == doctest::Approx(A / p.phi2).epsilon(1e-12));
}

TEST_CASE("mc_expected_hessian is deterministic for any worker count") {
    ModelConfig cfg = ModelConfig::uniform(2, 1);
    PopulationState st;
    st.N = Eigen::MatrixXd::Constant(2, 1, 50.0);
    st.F = Eigen::MatrixXd::Zero(2, 1);
    st.Ca = Eigen::MatrixXd::Zero(2, 1);
    st.C = Eigen::VectorXd::Constant(1, 30.0);
    st.Jtilde = jtilde_of(st.N, cfg.s);
    NuisanceParams p = NuisanceParams::from_phi2(0.8, 1.5, 1.2, 2);

    setenv("REFPRIOR_THREADS", "1", 1);
    McHessian one = mc_expected_hessian(p, st, cfg, 20000, 7);
    setenv("REFPRIOR_THREADS", "2", 1);
    McHessian two = mc_expected_hessian(p, st, cfg, 20000, 7);
    unsetenv("REFPRIOR_THREADS");
    CHECK(one.mean == two.mean);
    CHECK(one.se == two.se);
}

TEST_CASE("fisher check report passes every identity") {
    auto rows = fisher_check_report(4, 3, 991, 20000);
    CHECK(rows.size() >= 15);
    for (const auto& r : rows) {
        INFO(r.identity, " err=", r.max_abs_error, " tol=", r.tolerance);
        CHECK(r.pass);
    }
}

TEST_SUITE_END();
