#include <doctest.h>

#include <cmath>

#include "refprior/rng.hpp"
#include "refprior/simulate.hpp"

using namespace refprior;

TEST_SUITE_BEGIN("simulate");

namespace {

ModelConfig one_age(int T, double M, Dynamics dyn) { return ModelConfig::uniform(1, T, M, dyn); }

}  // namespace

TEST_CASE("baranov with no mortality catches nothing") {
    ModelConfig cfg = one_age(2, 0.0, Dynamics::Baranov);
    Eigen::VectorXd n0 = Eigen::VectorXd::Constant(1, 100.0);
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(1, 2);
    PopulationState st = simulate_dynamics(cfg, n0, F, 1);
    for (int t = 0; t < 2; ++t) {
        CHECK(st.Ca(0, t) == 0.0);
        CHECK(st.N(0, t) == 100.0);
    }
    // total catch 0 makes C fail its positivity check downstream
    CHECK(st.C[0] == 0.0);
}

TEST_CASE("pope with pure natural mortality decays by exp(-M)") {
    ModelConfig cfg = one_age(4, 0.2, Dynamics::Pope);
    Eigen::VectorXd n0 = Eigen::VectorXd::Constant(1, 100.0);
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(1, 4);
    PopulationState st = simulate_dynamics(cfg, n0, F, 1);
    CHECK(st.N(0, 1) == doctest::Approx(100.0 * std::exp(-0.2)).epsilon(1e-12));
    CHECK(st.N(0, 1) == doctest::Approx(81.87307530779818).epsilon(1e-10));
    CHECK(st.N(0, 3) == doctest::Approx(100.0 * std::exp(-0.6)).epsilon(1e-12));
}

TEST_CASE("baranov catch equation at a known point") {
    // independent scalar evaluation of F/(F+M) N (1 - exp(-(F+M)))
    const double F = 0.3, M = 0.2, N = 100.0;
    const double expected = F / (F + M) * N * (1.0 - std::exp(-(F + M)));
    CHECK(expected == doctest::Approx(23.608160417242).epsilon(1e-10));

    ModelConfig cfg = one_age(2, M, Dynamics::Baranov);
    Eigen::VectorXd n0 = Eigen::VectorXd::Constant(1, N);
    Eigen::MatrixXd Fm = Eigen::MatrixXd::Constant(1, 2, F);
    PopulationState st = simulate_dynamics(cfg, n0, Fm, 1);
    CHECK(st.Ca(0, 0) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(st.C[0] == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("total catch is the sum of per-age catches") {
    ModelConfig cfg = ModelConfig::uniform(3, 6, 0.15, Dynamics::Baranov);
    cfg.mu1_sd = 0.2;
    cfg.mu2_sd = 0.1;
    Eigen::VectorXd n0(3);
    n0 << 120.0, 80.0, 40.0;
    Eigen::MatrixXd F = Eigen::MatrixXd::Constant(3, 6, 0.25);
    PopulationState st = simulate_dynamics(cfg, n0, F, 99);
    for (int t = 0; t < 6; ++t) CHECK(st.C[t] == st.Ca.col(t).sum());
}

TEST_CASE("jtilde satisfies its summation identity exactly") {
    ModelConfig cfg = ModelConfig::uniform(4, 5, 0.1, Dynamics::Pope);
    cfg.s << 0.3, 0.9, 1.4, 0.7;
    cfg.mu2_sd = 0.05;
    Eigen::VectorXd n0 = Eigen::VectorXd::Constant(4, 60.0);
    Eigen::MatrixXd F = Eigen::MatrixXd::Constant(4, 5, 0.1);
    PopulationState st = simulate_dynamics(cfg, n0, F, 3);
    for (int t = 0; t < 5; ++t) {
        double sum = 0.0;
        for (int a = 0; a < 4; ++a) sum += std::log(cfg.s[a] * st.N(a, t));
        CHECK(st.Jtilde[t] == sum);
    }
}

TEST_CASE("recruitment fills the first age for A >= 2") {
    ModelConfig cfg = ModelConfig::uniform(2, 3, 0.0, Dynamics::Baranov);
    Eigen::VectorXd n0(2);
    n0 << 50.0, 30.0;
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(2, 3);
    PopulationState st = simulate_dynamics(cfg, n0, F, 1);
    // default recruitment = N_init[0]; zero mortality passes age-1 through
    CHECK(st.N(0, 1) == 50.0);
    CHECK(st.N(1, 1) == 50.0);
    CHECK(st.N(1, 2) == 50.0);

    Eigen::VectorXd recruit = Eigen::VectorXd::Constant(2, 33.0);
    PopulationState st2 = simulate_dynamics(cfg, n0, F, 1, recruit);
    CHECK(st2.N(0, 1) == 33.0);
    CHECK(st2.N(0, 2) == 33.0);
}

TEST_CASE("pope recursion below the floor raises a domain error naming the cell") {
    ModelConfig cfg = one_age(3, 0.0, Dynamics::Pope);
    Eigen::VectorXd n0 = Eigen::VectorXd::Constant(1, 10.0);
    // F huge: catch approx N, survivors approx 0 < floor
    Eigen::MatrixXd F = Eigen::MatrixXd::Constant(1, 3, 50.0);
    CHECK_THROWS_AS(simulate_dynamics(cfg, n0, F, 1), std::domain_error);
    try {
        simulate_dynamics(cfg, n0, F, 1);
    } catch (const std::domain_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("a=1") != std::string::npos);
        CHECK(msg.find("t=2") != std::string::npos);
    }
}

TEST_CASE("invalid inputs are rejected") {
    ModelConfig cfg = one_age(2, 0.0, Dynamics::Baranov);
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(1, 2);
    CHECK_THROWS_AS(simulate_dynamics(cfg, Eigen::VectorXd::Constant(1, -1.0), F, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate_dynamics(cfg, Eigen::VectorXd::Constant(2, 10.0), F, 1),
                    std::invalid_argument);
    Eigen::MatrixXd Fbad = Eigen::MatrixXd::Constant(1, 2, -0.1);
    CHECK_THROWS_AS(simulate_dynamics(cfg, Eigen::VectorXd::Constant(1, 10.0), Fbad, 1),
                    std::invalid_argument);
    ModelConfig direct = one_age(2, 0.0, Dynamics::Direct);
    CHECK_THROWS_AS(simulate_dynamics(direct, Eigen::VectorXd::Constant(1, 10.0), F, 1),
                    std::invalid_argument);
}

TEST_CASE("noiseless survey recovers q s_a N exactly") {
    ModelConfig cfg = ModelConfig::uniform(3, 4);
    cfg.s << 0.5, 1.0, 2.0;
    PopulationState st;
    st.N = Eigen::MatrixXd::Constant(3, 4, 50.0);
    st.F = Eigen::MatrixXd::Zero(3, 4);
    st.Ca = Eigen::MatrixXd::Zero(3, 4);
    st.C = Eigen::VectorXd::Constant(4, 10.0);
    st.Jtilde = jtilde_of(st.N, cfg.s);

    NuisanceParams p = NuisanceParams::from_components(0.5, 1.0, 0.0, 0.0, 3);
    SUBCASE("s == 1, q == 1 gives Istar == N") {
        ModelConfig unit = ModelConfig::uniform(3, 4);
        PopulationState stu = st;
        stu.Jtilde = jtilde_of(stu.N, unit.s);
        auto [istar, jstar] = observe_survey(stu, p, unit, 7);
        for (int t = 0; t < 4; ++t) {
            for (int a = 0; a < 3; ++a) CHECK(istar(a, t) == 50.0);
            CHECK(jstar[t] == doctest::Approx(3.0 * std::log(50.0)).epsilon(1e-15));
        }
    }
    SUBCASE("Istar / (s_a N) returns q exactly for any q") {
        NuisanceParams p2 = NuisanceParams::from_components(0.5, 2.5, 0.0, 0.0, 3);
        auto [istar, jstar] = observe_survey(st, p2, cfg, 7);
        for (int t = 0; t < 4; ++t)
            for (int a = 0; a < 3; ++a)
                CHECK(istar(a, t) / (cfg.s[a] * st.N(a, t)) == doctest::Approx(2.5).epsilon(1e-15));
    }
}

TEST_CASE("year effect is fully shared across ages") {
    // sigma2 = 0, tau2 = 1: the two age series differ by a constant, so their
    // sample correlation over years is 1 up to floating point.
    const int T = 100000;
    ModelConfig cfg = ModelConfig::uniform(2, T);
    PopulationState st;
    st.N = Eigen::MatrixXd::Constant(2, T, 50.0);
    st.F = Eigen::MatrixXd::Zero(2, T);
    st.Ca = Eigen::MatrixXd::Zero(2, T);
    st.C = Eigen::VectorXd::Constant(T, 10.0);
    st.Jtilde = jtilde_of(st.N, cfg.s);
    NuisanceParams p = NuisanceParams::from_components(0.5, 1.0, 0.0, 1.0, 2);
    auto [istar, jstar] = observe_survey(st, p, cfg, 2024);

    double mx = 0.0, my = 0.0;
    for (int t = 0; t < T; ++t) {
        mx += std::log(istar(0, t));
        my += std::log(istar(1, t));
    }
    mx /= T;
    my /= T;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (int t = 0; t < T; ++t) {
        double dx = std::log(istar(0, t)) - mx;
        double dy = std::log(istar(1, t)) - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    CHECK(sxy / std::sqrt(sxx * syy) > 1.0 - 1e-9);
}

TEST_CASE("summed survey noise has variance A sigma2 + A^2 tau2") {
    // 10^6 replicate years in blocks; empirical variance of
    // Jstar - Jtilde - A log q within 3 MC standard errors of the target.
    const int A = 2, block_T = 10000, blocks = 100;
    const double sigma2 = 0.09, tau2 = 0.16, q = 1.7;
    const double target = A * sigma2 + A * A * tau2;
    ModelConfig cfg = ModelConfig::uniform(A, block_T);
    PopulationState st;
    st.N = Eigen::MatrixXd::Constant(A, block_T, 50.0);
    st.F = Eigen::MatrixXd::Zero(A, block_T);
    st.Ca = Eigen::MatrixXd::Zero(A, block_T);
    st.C = Eigen::VectorXd::Constant(block_T, 10.0);
    st.Jtilde = jtilde_of(st.N, cfg.s);
    NuisanceParams p = NuisanceParams::from_components(0.5, q, sigma2, tau2, A);

    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    const double n = static_cast<double>(block_T) * blocks;
    for (int b = 0; b < blocks; ++b) {
        auto [istar, jstar] = observe_survey(st, p, cfg, 5000 + b);
        for (int t = 0; t < block_T; ++t) {
            double e = jstar[t] - st.Jtilde[t] - A * std::log(q);
            sum += e;
            sum2 += e * e;
            sum4 += e * e * e * e;
        }
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    // MC standard error of a variance estimate: sqrt((m4 - var^2)/n)
    double m4 = sum4 / n;
    double se = std::sqrt((m4 - var * var) / n);
    CHECK(std::abs(var - target) < 3.0 * se);
}

TEST_CASE("degenerate catch noise reproduces the truth") {
    PopulationState st;
    st.C = Eigen::VectorXd::Constant(5, 77.0);
    Eigen::VectorXd cstar = observe_catch(st, 1e-12, 4);
    for (int t = 0; t < 5; ++t)
        CHECK(std::abs(cstar[t] / st.C[t] - 1.0) < 1e-5);
}

TEST_CASE("laurent correction keeps the observed catch unbiased") {
    PopulationState st;
    const int n = 1000000;
    st.C = Eigen::VectorXd::Constant(n, 100.0);
    Eigen::VectorXd cstar = observe_catch(st, 0.5, 4);
    double sum = 0.0, sum2 = 0.0;
    for (int t = 0; t < n; ++t) {
        double ratio = cstar[t] / 100.0;
        sum += ratio;
        sum2 += ratio * ratio;
    }
    double mean = sum / n;
    double se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) < 3.0 * se);

    SUBCASE("disabled correction inflates the mean by exp(psi2/2)") {
        Eigen::VectorXd raw = observe_catch(st, 0.5, 4, CatchBias::MeanZero);
        double s = 0.0, s2 = 0.0;
        for (int t = 0; t < n; ++t) {
            double ratio = raw[t] / 100.0;
            s += ratio;
            s2 += ratio * ratio;
        }
        double m = s / n;
        double se2 = std::sqrt((s2 / n - m * m) / n);
        CHECK(std::abs(m - std::exp(0.25)) < 3.0 * se2);
        CHECK(std::exp(0.25) == doctest::Approx(1.2840254166877414));
    }
}

TEST_CASE("identical seeds give bit-identical states and observations") {
    ModelConfig cfg = ModelConfig::uniform(3, 8, 0.2, Dynamics::Pope);
    cfg.mu1_sd = 0.1;
    cfg.mu2_sd = 0.1;
    Eigen::VectorXd n0 = Eigen::VectorXd::Constant(3, 90.0);
    Eigen::MatrixXd F = Eigen::MatrixXd::Constant(3, 8, 0.15);
    PopulationState s1 = simulate_dynamics(cfg, n0, F, 77);
    PopulationState s2 = simulate_dynamics(cfg, n0, F, 77);
    CHECK(s1.N == s2.N);
    CHECK(s1.C == s2.C);
    CHECK(s1.Jtilde == s2.Jtilde);

    NuisanceParams p = NuisanceParams::from_components(0.4, 1.2, 0.05, 0.02, 3);
    ObservedData d1 = simulate_observations(s1, p, cfg, 123);
    ObservedData d2 = simulate_observations(s2, p, cfg, 123);
    CHECK(d1.Istar == d2.Istar);
    CHECK(d1.Jstar == d2.Jstar);
    CHECK(d1.Cstar == d2.Cstar);

    ObservedData d3 = simulate_observations(s1, p, cfg, 124);
    CHECK(d1.Cstar != d3.Cstar);
}

TEST_CASE("observed data summation identity holds for every simulated dataset") {
    ModelConfig cfg = ModelConfig::uniform(4, 6, 0.1, Dynamics::Baranov);
    Eigen::VectorXd n0 = Eigen::VectorXd::Constant(4, 70.0);
    Eigen::MatrixXd F = Eigen::MatrixXd::Constant(4, 6, 0.2);
    PopulationState st = simulate_dynamics(cfg, n0, F, 5);
    NuisanceParams p = NuisanceParams::from_components(0.4, 0.8, 0.1, 0.05, 4);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        ObservedData data = simulate_observations(st, p, cfg, seed);
        CHECK_NOTHROW(data.validate(cfg));
    }
}

TEST_SUITE_END();
