#include "refprior/gibbs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "refprior/parallel.hpp"

namespace refprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundarySdLogN = 3.0;
constexpr double kPriorSdLogF = 1.5;

double log_dnorm(double x, double mean, double sd) {
    double z = (x - mean) / sd;
    return -0.918938533204672742 - std::log(sd) - 0.5 * z * z;
}

bool accept_doubling(const std::function<double(double)>& log_f, double x0, double x1,
                     double log_y, double L, double R, double w) {
    bool crossed = false;
    while (R - L > 1.1 * w) {
        double M = 0.5 * (L + R);
        if ((x0 < M && x1 >= M) || (x0 >= M && x1 < M)) crossed = true;
        if (x1 < M) R = M; else L = M;
        if (crossed && log_f(L) <= log_y && log_f(R) <= log_y) return false;
    }
    return true;
}

}  // namespace

double slice_sample(const std::function<double(double)>& log_f, double x0, double width,
                    int max_doublings, RngStream& rng) {
    double f0 = log_f(x0);
    if (!std::isfinite(f0)) throw std::invalid_argument("slice_sample: log_f(x0) must be finite");
    double log_y = f0 + std::log(rng.uniform01());

    double L = x0 - width * rng.uniform01();
    double R = L + width;
    int k = max_doublings;
    while (k > 0 && (log_f(L) > log_y || log_f(R) > log_y)) {
        if (rng.uniform01() < 0.5) L -= (R - L);
        else R += (R - L);
        --k;
    }

    double lo = L, hi = R;
    for (int iter = 0; iter < 1000; ++iter) {
        double x1 = rng.uniform(lo, hi);
        double f1 = log_f(x1);
        if (f1 >= log_y && accept_doubling(log_f, x0, x1, log_y, L, R, width)) return x1;
        if (x1 < x0) lo = x1; else hi = x1;
    }
    return x0;  // interval shrank to numerical nothing; keep the current point
}

std::string to_string(SamplerMode m) {
    return m == SamplerMode::NuisanceOnly ? "nuisance_only" : "full";
}

SamplerMode sampler_mode_from_string(const std::string& s) {
    if (s == "nuisance_only") return SamplerMode::NuisanceOnly;
    if (s == "full") return SamplerMode::Full;
    throw std::invalid_argument("unknown sampler mode '" + s + "' (expected nuisance_only|full)");
}

std::string to_string(Psi2Mode m) { return m == Psi2Mode::Exact ? "exact" : "conjugate"; }

Psi2Mode psi2_mode_from_string(const std::string& s) {
    if (s == "exact") return Psi2Mode::Exact;
    if (s == "conjugate") return Psi2Mode::Conjugate;
    throw std::invalid_argument("unknown psi2 mode '" + s + "' (expected exact|conjugate)");
}

void SamplerConfig::validate() const {
    if (iterations <= 0) throw std::invalid_argument("sampler.iterations: must be > 0");
    if (burn_in < 0 || burn_in >= iterations)
        throw std::invalid_argument("sampler.burn_in: need 0 <= burn_in < iterations");
    if (thin < 1) throw std::invalid_argument("sampler.thin: must be >= 1");
    if (!(latent_step_sd > 0.0)) throw std::invalid_argument("sampler.latent_step_sd: must be > 0");
}

GibbsSampler::GibbsSampler(ModelConfig cfg, PriorSpec prior, SamplerConfig sampler,
                           ObservedData data, PopulationState init_state, GibbsKnobs knobs)
    : cfg_(std::move(cfg)),
      prior_(std::move(prior)),
      sampler_(sampler),
      data_(std::move(data)),
      knobs_(knobs) {
    cfg_.validate();
    sampler_.validate();
    data_.validate(cfg_);
    if (prior_.box) prior_.box->validate();

    if (sampler_.mode == SamplerMode::Full) {
        if (cfg_.dynamics == Dynamics::Direct)
            throw std::invalid_argument("GibbsSampler: Full mode needs Pope or Baranov dynamics");
        if (!(cfg_.mu2_sd > 0.0))
            throw std::invalid_argument("GibbsSampler: Full mode requires mu2_sd > 0");
        if (cfg_.mu1_sd != 0.0)
            throw std::invalid_argument(
                "GibbsSampler: Full mode conditions on mu1_sd = 0 (catches deterministic given N, F)");
        if ((init_state.F.array() <= 0.0).any())
            throw std::invalid_argument("GibbsSampler: Full mode requires strictly positive F");
        scale_n_ = Eigen::MatrixXd::Constant(cfg_.A, cfg_.T, sampler_.latent_step_sd);
        scale_f_ = Eigen::MatrixXd::Constant(cfg_.A, cfg_.T, sampler_.latent_step_sd);
        boundary_mean_n_.resize(cfg_.A);
        for (int a = 0; a < cfg_.A; ++a)
            boundary_mean_n_[a] = init_state.N.row(a).array().log().mean();
        prior_mean_log_f_ = init_state.F.array().log().mean();
    }
}

void GibbsSampler::prepare_state(PopulationState& state) const {
    if (sampler_.mode == SamplerMode::Full) refresh_derived(state);
}

void GibbsSampler::refresh_derived(PopulationState& state) const {
    const bool pope = cfg_.dynamics == Dynamics::Pope;
    for (int t = 0; t < cfg_.T; ++t) {
        double total = 0.0;
        for (int a = 0; a < cfg_.A; ++a) {
            double N = state.N(a, t), F = state.F(a, t), M = cfg_.M[a];
            double c;
            if (pope) {
                c = N * (1.0 - std::exp(-F)) * std::exp(-0.5 * M);
            } else {
                double Z = F + M;
                c = Z == 0.0 ? 0.0 : F / Z * N * (1.0 - std::exp(-Z));
            }
            state.Ca(a, t) = c;
            total += c;
        }
        state.C[t] = total;
    }
    state.Jtilde = jtilde_of(state.N, cfg_.s);
}

double GibbsSampler::dynamics_log_prior(const PopulationState& state) const {
    const bool pope = cfg_.dynamics == Dynamics::Pope;
    double lp = 0.0;
    for (int t = 0; t < cfg_.T; ++t) {
        for (int a = 0; a < cfg_.A; ++a) {
            double log_n = std::log(state.N(a, t));
            bool boundary = t == 0 || (cfg_.A >= 2 && a == 0);
            if (boundary) {
                lp += log_dnorm(log_n, boundary_mean_n_[a], kBoundarySdLogN);
            } else {
                int pa = cfg_.A == 1 ? 0 : a - 1;
                int pt = t - 1;
                double Np = state.N(pa, pt), Fp = state.F(pa, pt), Mp = cfg_.M[pa];
                double surv;
                if (pope) {
                    surv = Np * std::exp(-Mp) - state.Ca(pa, pt) * std::exp(-0.5 * Mp);
                } else {
                    surv = Np * std::exp(-(Fp + Mp));
                }
                if (!(surv > 0.0)) return -kInf;
                lp += log_dnorm(log_n, std::log(surv), cfg_.mu2_sd);
            }
            lp += log_dnorm(std::log(state.F(a, t)), prior_mean_log_f_, kPriorSdLogF);
        }
    }
    return lp;
}

double GibbsSampler::latent_target(const PopulationState& state,
                                   const NuisanceParams& params) const {
    if ((state.C.array() <= 0.0).any()) return -kInf;
    double prior = dynamics_log_prior(state);
    if (prior == -kInf) return -kInf;
    return log_likelihood(state, params, data_, cfg_) + prior;
}

void GibbsSampler::draw_logq(NuisanceParams& params, const DataSummary& s, RngStream& rng) {
    ConditionalPosterior c = logq_conditional(s, params, prior_.kind);
    double sd = std::sqrt(c.variance * knobs_.logq_var_scale);
    double mean = c.mean;
    double log_q;
    if (prior_.box) {
        log_q = rng.truncated_normal(mean, sd, std::log(prior_.box->q_lo),
                                     std::log(prior_.box->q_hi));
    } else {
        log_q = rng.normal(mean, sd);
    }
    params.q = std::exp(log_q);
}

namespace {

// Draw from a ConditionalPosterior restricted to [lo, hi]; slice sampling on
// the log scale handles the non-conjugate kernels.
double draw_variance(const ConditionalPosterior& c, double current, double lo, double hi,
                     RngStream& rng) {
    if (c.family == ConditionalPosterior::Family::InverseGamma) {
        if (hi == kInf && lo <= 0.0) return rng.inverse_gamma(c.shape, c.rate);
        return rng.truncated_inverse_gamma(c.shape, c.rate, lo, hi);
    }
    if (c.family != ConditionalPosterior::Family::NonConjugate)
        throw std::logic_error("draw_variance: unexpected family");
    double x0 = current;
    if (!(x0 > lo && x0 < hi)) x0 = hi == kInf ? std::max(lo, 1.0) * 2.0 : std::sqrt(lo * hi);
    auto log_f = [&](double y) {
        double x = std::exp(y);
        if (x < lo || x > hi) return -kInf;
        return c.log_density(x) + y;  // Jacobian of the log transform
    };
    double y = slice_sample(log_f, std::log(x0), 1.0, 60, rng);
    return std::exp(y);
}

}  // namespace

void GibbsSampler::draw_phi2(NuisanceParams& params, const DataSummary& s, RngStream& rng) {
    ConditionalPosterior c = phi2_conditional(s, std::log(params.q), prior_.kind);
    double lo = prior_.box ? prior_.box->phi2_lo : 0.0;
    double hi = prior_.box ? prior_.box->phi2_hi : kInf;
    double phi2 = draw_variance(c, params.phi2, lo, hi, rng);
    params.phi2 = phi2;
    params.sigma2 = phi2 / cfg_.A;
    params.tau2 = 0.0;
}

void GibbsSampler::draw_psi2(NuisanceParams& params, const DataSummary& s, RngStream& rng) {
    ConditionalPosterior c = psi2_conditional(s, sampler_.psi2_mode, prior_.kind);
    double lo = prior_.box ? prior_.box->psi2_lo : 0.0;
    double hi = prior_.box ? prior_.box->psi2_hi : kInf;
    params.psi2 = draw_variance(c, params.psi2, lo, hi, rng);
}

void GibbsSampler::update_latents(NuisanceParams& params, PopulationState& state, RngStream& rng,
                                  bool adapt) {
    if (adapt) ++adapt_sweeps_;
    double gain = 1.0 / std::sqrt(static_cast<double>(adapt_sweeps_) + 1.0);
    double current = latent_target(state, params);

    for (int which = 0; which < 2; ++which) {
        bool is_n = which == 0;
        Eigen::MatrixXd& scales = is_n ? scale_n_ : scale_f_;
        for (int t = 0; t < cfg_.T; ++t) {
            for (int a = 0; a < cfg_.A; ++a) {
                Eigen::MatrixXd& target = is_n ? state.N : state.F;
                double old_value = target(a, t);
                double proposal = old_value * std::exp(scales(a, t) * rng.normal());
                target(a, t) = proposal;
                refresh_derived(state);
                double proposed = latent_target(state, params);
                bool accept = std::log(rng.uniform01()) < proposed - current;
                if (accept) {
                    current = proposed;
                } else {
                    target(a, t) = old_value;
                    refresh_derived(state);
                }
                if (adapt) {
                    scales(a, t) *= std::exp(gain * ((accept ? 1.0 : 0.0) - 0.3));
                    scales(a, t) = std::clamp(scales(a, t), 1e-4, 10.0);
                } else {
                    if (is_n) { propose_n_ += 1; accept_n_ += accept ? 1 : 0; }
                    else      { propose_f_ += 1; accept_f_ += accept ? 1 : 0; }
                }
            }
        }
    }
}

void GibbsSampler::step(NuisanceParams& params, PopulationState& state, RngStream& rng,
                        bool adapt) {
    if (sampler_.mode == SamplerMode::NuisanceOnly) {
        if (!cache_valid_) {
            cached_summary_ = DataSummary::from(state, data_, cfg_);
            cache_valid_ = true;
        }
        draw_logq(params, cached_summary_, rng);
        draw_phi2(params, cached_summary_, rng);
        draw_psi2(params, cached_summary_, rng);
        return;
    }
    DataSummary s = DataSummary::from(state, data_, cfg_);
    draw_logq(params, s, rng);
    s = DataSummary::from(state, data_, cfg_);
    draw_phi2(params, s, rng);
    draw_psi2(params, s, rng);
    update_latents(params, state, rng, adapt);
}

std::map<std::string, double> GibbsSampler::acceptance_rates() const {
    std::map<std::string, double> rates;
    rates["logq"] = 1.0;
    rates["phi2"] = 1.0;
    rates["psi2"] = 1.0;
    if (sampler_.mode == SamplerMode::Full) {
        rates["latent_log_n"] = propose_n_ == 0 ? 0.0
                                                : static_cast<double>(accept_n_) / propose_n_;
        rates["latent_log_f"] = propose_f_ == 0 ? 0.0
                                                : static_cast<double>(accept_f_) / propose_f_;
    }
    return rates;
}

namespace {

NuisanceParams initial_params(const PriorSpec& prior, const ObservedData& data,
                              const PopulationState& state, const ModelConfig& cfg,
                              RngStream& rng) {
    if (prior.box) return sample_prior(prior, cfg.A, rng);
    // Moment-based start from the residuals.
    DataSummary s = DataSummary::from(state, data, cfg);
    double mean_resid = s.S1 / s.T;
    double q = std::exp(mean_resid / cfg.A);
    double phi2 = std::max(s.S2 / s.T - mean_resid * mean_resid, 1e-4);
    double mean_d = s.D1 / s.T;
    double psi2 = std::max(s.D2 / s.T - mean_d * mean_d, 1e-4);
    return NuisanceParams::from_phi2(psi2, phi2, q, cfg.A);
}

}  // namespace

Chain run_chain(const SamplerConfig& sampler, const ObservedData& data, const ModelConfig& cfg,
                const PopulationState& state, const PriorSpec& prior, GibbsKnobs knobs) {
    GibbsSampler g(cfg, prior, sampler, data, state, knobs);
    RngStream rng(stream_seed(sampler.seed, 0xC4A17));

    PopulationState st = state;
    // In Full mode catches are a deterministic map of (N, F).
    g.prepare_state(st);
    NuisanceParams params = initial_params(prior, data, st, cfg, rng);

    Chain chain;
    chain.seed = sampler.seed;
    for (std::int64_t i = 0; i < sampler.iterations; ++i) {
        bool adapt = i < sampler.burn_in;
        g.step(params, st, rng, adapt);
        if (!std::isfinite(params.psi2) || !std::isfinite(params.phi2) || !std::isfinite(params.q))
            throw std::runtime_error("run_chain: non-finite state at iteration " +
                                     std::to_string(i));
        if (i >= sampler.burn_in && (i - sampler.burn_in) % sampler.thin == 0) {
            chain.samples.push_back(params);
            if (sampler.mode == SamplerMode::Full) chain.states.push_back(st);
        }
    }
    chain.acceptance_rates = g.acceptance_rates();
    return chain;
}

double effective_sample_size(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 4) return static_cast<double>(n);
    double mean = mean_of(xs);
    double c0 = 0.0;
    for (double x : xs) c0 += (x - mean) * (x - mean);
    c0 /= n;
    if (c0 <= 0.0) return static_cast<double>(n);

    auto rho = [&](std::size_t k) {
        double c = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) c += (xs[i] - mean) * (xs[i + k] - mean);
        return c / (n * c0);
    };

    // Geyer initial positive sequence over paired autocorrelations.
    double tail = 0.0;
    std::size_t max_lag = std::min<std::size_t>(n - 2, 2000);
    for (std::size_t k = 1; k + 1 <= max_lag; k += 2) {
        double pair = rho(k) + rho(k + 1);
        if (pair <= 0.0) break;
        tail += pair;
    }
    double denom = 1.0 + 2.0 * tail;
    return static_cast<double>(n) / std::max(denom, 1e-12);
}

int rank_among(double truth, const std::vector<double>& draws) {
    int r = 0;
    for (double d : draws)
        if (d < truth) ++r;
    return r;
}

double GewekeReport::max_abs_z() const {
    double m = 0.0;
    for (double v : z) m = std::max(m, std::abs(v));
    return m;
}

namespace {

std::vector<double> joint_statistics(const NuisanceParams& p, const ObservedData& data) {
    double lp = std::log(p.psi2), lf = std::log(p.phi2), lq = std::log(p.q);
    return {lp, lp * lp, lf, lf * lf, lq, lq * lq, data.Jstar.mean(),
            data.Cstar.array().log().mean()};
}

const std::vector<std::string> kJointStatNames = {
    "log_psi2", "log_psi2_sq", "log_phi2", "log_phi2_sq",
    "log_q",    "log_q_sq",    "mean_jstar", "mean_log_cstar"};

}  // namespace

GewekeReport geweke_joint_test(const ModelConfig& cfg, const PopulationState& state,
                               const PriorSpec& prior, const SamplerConfig& sampler,
                               std::int64_t n_cycles, GibbsKnobs knobs) {
    if (!prior.box) throw std::invalid_argument("geweke_joint_test: prior must be truncated (proper)");
    if (sampler.mode != SamplerMode::NuisanceOnly)
        throw std::invalid_argument("geweke_joint_test: NuisanceOnly mode only");

    GewekeReport report;
    report.names = kJointStatNames;
    const std::size_t n_stats = kJointStatNames.size();
    if (n_cycles == 0) {
        // Two empty sample sets coincide by construction.
        report.z.assign(n_stats, 0.0);
        report.mean_marginal.assign(n_stats, 0.0);
        report.mean_successive.assign(n_stats, 0.0);
        report.ess_successive.assign(n_stats, 0.0);
        return report;
    }

    CatchBias bias = sampler.psi2_mode == Psi2Mode::Conjugate ? CatchBias::MeanZero
                                                              : CatchBias::LaurentCorrected;

    // Marginal-conditional: fresh prior draw and fresh data each cycle.
    std::vector<std::vector<double>> mc(n_stats);
    {
        RngStream rng(stream_seed(sampler.seed, 0x6E11));
        for (std::int64_t k = 0; k < n_cycles; ++k) {
            NuisanceParams theta = sample_prior(prior, cfg.A, rng);
            ObservedData data = simulate_observations(state, theta, cfg, rng.raw(), bias);
            auto stats = joint_statistics(theta, data);
            for (std::size_t j = 0; j < n_stats; ++j) mc[j].push_back(stats[j]);
        }
    }

    // Successive-conditional: re-simulate data, then one Gibbs sweep.
    std::vector<std::vector<double>> sc(n_stats);
    {
        RngStream rng(stream_seed(sampler.seed, 0x5C33));
        NuisanceParams theta = sample_prior(prior, cfg.A, rng);
        for (std::int64_t k = 0; k < n_cycles; ++k) {
            ObservedData data = simulate_observations(state, theta, cfg, rng.raw(), bias);
            GibbsSampler g(cfg, prior, sampler, data, state, knobs);
            PopulationState st = state;
            g.step(theta, st, rng, false);
            auto stats = joint_statistics(theta, data);
            for (std::size_t j = 0; j < n_stats; ++j) sc[j].push_back(stats[j]);
        }
    }

    for (std::size_t j = 0; j < n_stats; ++j) {
        double m1 = mean_of(mc[j]), m2 = mean_of(sc[j]);
        double v1 = sd_of(mc[j]), v2 = sd_of(sc[j]);
        double ess2 = effective_sample_size(sc[j]);
        double se = std::sqrt(v1 * v1 / static_cast<double>(n_cycles) + v2 * v2 / ess2);
        report.mean_marginal.push_back(m1);
        report.mean_successive.push_back(m2);
        report.ess_successive.push_back(ess2);
        report.z.push_back(se > 0.0 ? (m1 - m2) / se : 0.0);
    }
    return report;
}

SbcReport sbc(const ModelConfig& cfg, const PopulationState& state, const PriorSpec& prior,
              const SamplerConfig& sampler, int n_replicates, int n_posterior_draws, int n_bins) {
    if (!prior.box) throw std::invalid_argument("sbc: prior must be truncated (proper)");
    if (n_replicates < 1 || n_posterior_draws < 1 || n_bins < 2)
        throw std::invalid_argument("sbc: invalid sizes");

    CatchBias bias = sampler.psi2_mode == Psi2Mode::Conjugate ? CatchBias::MeanZero
                                                              : CatchBias::LaurentCorrected;
    const int L = n_posterior_draws;

    std::vector<std::array<int, 3>> ranks(static_cast<std::size_t>(n_replicates));
    parallel_for(static_cast<std::size_t>(n_replicates), [&](std::size_t r) {
        RngStream rng(stream_seed(sampler.seed, 0x5BC0 + r));
        NuisanceParams truth = sample_prior(prior, cfg.A, rng);
        ObservedData data = simulate_observations(state, truth, cfg, rng.raw(), bias);

        SamplerConfig run_cfg = sampler;
        run_cfg.seed = rng.raw();
        run_cfg.iterations = sampler.burn_in + static_cast<std::int64_t>(sampler.thin) * L;
        Chain chain = run_chain(run_cfg, data, cfg, state, prior);

        std::vector<double> psi2s, phi2s, qs;
        psi2s.reserve(chain.samples.size());
        for (const auto& p : chain.samples) {
            psi2s.push_back(p.psi2);
            phi2s.push_back(p.phi2);
            qs.push_back(p.q);
        }
        ranks[r] = {rank_among(truth.psi2, psi2s), rank_among(truth.phi2, phi2s),
                    rank_among(truth.q, qs)};
    });

    SbcReport report;
    report.n_bins = n_bins;
    report.n_replicates = n_replicates;
    report.n_posterior_draws = L;
    const char* names[3] = {"psi2", "phi2", "q"};
    for (int c = 0; c < 3; ++c) {
        SbcReport::Component comp;
        comp.name = names[c];
        comp.counts.assign(static_cast<std::size_t>(n_bins), 0);
        for (const auto& r : ranks) {
            int bin = static_cast<int>(static_cast<std::int64_t>(r[static_cast<std::size_t>(c)]) *
                                       n_bins / (L + 1));
            comp.counts[static_cast<std::size_t>(bin)] += 1;
        }
        double chi2 = 0.0;
        for (int b = 0; b < n_bins; ++b) {
            // exact bin occupancy counts of the L+1 possible ranks
            auto ceil_div = [](std::int64_t num, std::int64_t den) {
                return (num + den - 1) / den;
            };
            std::int64_t lo = ceil_div(static_cast<std::int64_t>(b) * (L + 1), n_bins);
            std::int64_t hi = ceil_div(static_cast<std::int64_t>(b + 1) * (L + 1), n_bins);
            double expected = static_cast<double>(n_replicates) *
                              static_cast<double>(hi - lo) / static_cast<double>(L + 1);
            double diff = comp.counts[static_cast<std::size_t>(b)] - expected;
            chi2 += diff * diff / expected;
        }
        comp.chi2 = chi2;
        comp.p_value = chi_square_sf(chi2, n_bins - 1);
        report.components.push_back(std::move(comp));
    }
    return report;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double quantile_of(std::vector<double> xs, double p) {
    if (xs.empty()) throw std::invalid_argument("quantile_of: empty sample");
    std::sort(xs.begin(), xs.end());
    double h = p * static_cast<double>(xs.size() - 1);
    std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= xs.size()) return xs.back();
    return xs[i] + (h - static_cast<double>(i)) * (xs[i + 1] - xs[i]);
}

}  // namespace refprior
