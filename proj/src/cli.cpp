#include "refprior/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "refprior/config.hpp"
#include "refprior/csv_io.hpp"
#include "refprior/fisher.hpp"
#include "refprior/gibbs.hpp"
#include "refprior/info_criterion.hpp"
#include "refprior/simulate.hpp"
#include "refprior/version.hpp"

namespace refprior {

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_output_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

void write_manifest(const std::string& dir, const std::string& command,
                    const std::string& config_hash, std::uint64_t seed) {
    std::ofstream out(join(dir, "run-manifest.txt"));
    out << "command = " << command << "\n";
    out << "config_hash = " << (config_hash.empty() ? "none" : config_hash) << "\n";
    out << "seed = " << seed << "\n";
    out << "version = " << REFPRIOR_VERSION << "\n";
}

/// True state used by simulate/sbc/info-criterion: either forward-simulated
/// dynamics or externally supplied trajectories (Direct).
PopulationState build_truth_state(const RunConfig& cfg) {
    if (cfg.model.dynamics == Dynamics::Direct) {
        Eigen::VectorXd C, Jtilde;
        read_state_time_csv(cfg.paths.state_time, C, Jtilde);
        if (C.size() != cfg.model.T)
            throw std::invalid_argument("state file T disagrees with model.T");
        if (!cfg.paths.state_ages.empty()) {
            Eigen::MatrixXd N, F;
            read_state_ages_csv(cfg.paths.state_ages, N, F);
            return make_direct_state(cfg.model, std::move(N), std::move(F), std::move(C));
        }
        return state_from_totals(cfg.model, C, Jtilde);
    }
    Eigen::MatrixXd F = cfg.F_by_age->replicate(1, cfg.model.T);
    Eigen::VectorXd recruitment;
    if (cfg.recruitment && cfg.model.A >= 2) recruitment = *cfg.recruitment;
    return simulate_dynamics(cfg.model, *cfg.N_init, F, stream_seed(cfg.seed, 101), recruitment);
}

int cmd_simulate(const RunConfig& cfg) {
    PopulationState state = build_truth_state(cfg);
    ObservedData data = simulate_observations(state, cfg.params, cfg.model,
                                              stream_seed(cfg.seed, 202));
    ensure_output_dir(cfg.paths.output_dir);
    write_catches_csv(join(cfg.paths.output_dir, "catches.csv"), data.Cstar);
    write_indices_csv(join(cfg.paths.output_dir, "indices.csv"), data.Istar);
    write_state_time_csv(join(cfg.paths.output_dir, "state_time.csv"), state.C, state.Jtilde);
    write_state_ages_csv(join(cfg.paths.output_dir, "state_ages.csv"), state.N, state.F);
    write_manifest(cfg.paths.output_dir, "simulate", cfg.config_hash, cfg.seed);
    std::cout << "simulated A=" << cfg.model.A << " T=" << cfg.model.T << " dataset into "
              << cfg.paths.output_dir << "\n";
    return 0;
}

int cmd_fit(const RunConfig& cfg) {
    ObservedData data = read_observed(cfg.paths.catches, cfg.paths.indices, cfg.model);
    Eigen::VectorXd C, Jtilde;
    read_state_time_csv(cfg.paths.state_time, C, Jtilde);
    if (C.size() != cfg.model.T)
        throw std::invalid_argument("state file T disagrees with model.T");

    PopulationState state;
    if (cfg.sampler.mode == SamplerMode::Full) {
        Eigen::MatrixXd N, F;
        read_state_ages_csv(cfg.paths.state_ages, N, F);
        state = make_direct_state(cfg.model, std::move(N), std::move(F), std::move(C));
    } else {
        state = state_from_totals(cfg.model, C, Jtilde);
    }

    Chain chain = run_chain(cfg.sampler, data, cfg.model, state, cfg.prior);
    ensure_output_dir(cfg.paths.output_dir);
    write_chain_csv(join(cfg.paths.output_dir, "chain.csv"), chain);
    write_summary(join(cfg.paths.output_dir, "summary.txt"), chain);
    write_manifest(cfg.paths.output_dir, "fit", cfg.config_hash, cfg.seed);

    std::vector<double> psi2s, phi2s, qs;
    for (const auto& p : chain.samples) {
        psi2s.push_back(p.psi2);
        phi2s.push_back(p.phi2);
        qs.push_back(p.q);
    }
    std::cout << "chain length " << chain.samples.size() << "; posterior means: psi2 = "
              << mean_of(psi2s) << ", phi2 = " << mean_of(phi2s) << ", q = " << mean_of(qs)
              << "\n";
    return 0;
}

int cmd_fisher_check(int T, int A, std::uint64_t seed, std::int64_t n_mc,
                     const std::string& out_dir, const std::string& config_hash) {
    auto rows = fisher_check_report(T, A, seed, n_mc);
    ensure_output_dir(out_dir);
    write_fisher_report_csv(join(out_dir, "fisher_report.csv"), rows);
    write_manifest(out_dir, "fisher-check", config_hash, seed);
    bool all_pass = true;
    for (const auto& r : rows) {
        std::cout << (r.pass ? "pass " : "FAIL ") << r.identity << " (err " << r.max_abs_error
                  << ", tol " << r.tolerance << ")\n";
        all_pass = all_pass && r.pass;
    }
    std::cout << (all_pass ? "all identities pass" : "some identities FAILED") << "\n";
    return all_pass ? 0 : 2;
}

int cmd_prior_compare(const RunConfig& cfg, int grid_n) {
    ensure_output_dir(cfg.paths.output_dir);
    const PriorBox& box = *cfg.prior.box;
    std::ofstream out(join(cfg.paths.output_dir, "prior_compare.csv"));
    out << "prior,psi2,phi2,q,log_density\n";
    for (PriorKind kind : {PriorKind::Reference, PriorKind::Jeffreys, PriorKind::Flat}) {
        PriorSpec spec{kind, cfg.prior.box};
        for (int i = 0; i < grid_n; ++i) {
            for (int j = 0; j < grid_n; ++j) {
                for (int k = 0; k < grid_n; ++k) {
                    auto node = [&](double lo, double hi, int idx) {
                        return lo * std::pow(hi / lo, (idx + 0.5) / grid_n);
                    };
                    NuisanceParams p = NuisanceParams::from_phi2(
                        node(box.psi2_lo, box.psi2_hi, i), node(box.phi2_lo, box.phi2_hi, j),
                        node(box.q_lo, box.q_hi, k), cfg.model.A);
                    out << to_string(kind) << "," << format_double(p.psi2) << ","
                        << format_double(p.phi2) << "," << format_double(p.q) << ","
                        << format_double(log_prior(spec, p)) << "\n";
                }
            }
        }
    }
    write_manifest(cfg.paths.output_dir, "prior-compare", cfg.config_hash, cfg.seed);
    std::cout << "wrote prior_compare.csv (" << grid_n << "^3 nodes per prior)\n";
    return 0;
}

int cmd_sbc(const RunConfig& cfg) {
    PopulationState state = build_truth_state(cfg);
    SbcReport report = sbc(cfg.model, state, cfg.prior, cfg.sampler, cfg.sbc.n_replicates,
                           cfg.sbc.n_posterior_draws, cfg.sbc.n_bins);
    ensure_output_dir(cfg.paths.output_dir);
    write_sbc_ranks_csv(join(cfg.paths.output_dir, "sbc_ranks.csv"), report);
    write_manifest(cfg.paths.output_dir, "sbc", cfg.config_hash, cfg.seed);
    for (const auto& comp : report.components)
        std::cout << comp.name << ": chi2 = " << comp.chi2 << ", p = " << comp.p_value << "\n";
    return 0;
}

int cmd_info_criterion(const RunConfig& cfg) {
    PopulationState state = build_truth_state(cfg);
    std::vector<PriorSpec> priors;
    for (PriorKind kind : cfg.info.priors) priors.push_back(PriorSpec{kind, cfg.prior.box});
    auto rows = compare_priors(cfg.model, state, cfg.info.T_list, priors, cfg.info.n_outer,
                               cfg.info.grid_n, cfg.seed);
    ensure_output_dir(cfg.paths.output_dir);
    write_mi_compare_csv(join(cfg.paths.output_dir, "mi_compare.csv"), rows);
    write_manifest(cfg.paths.output_dir, "info-criterion", cfg.config_hash, cfg.seed);
    for (const auto& r : rows)
        std::cout << r.prior << " T=" << r.T << ": mi = " << r.mi << " (se " << r.se << ")\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Objective-Bayes inference for sequential catch-at-age observation models"};
    app.require_subcommand(1);

    std::string config_path;
    bool seed_given = false;
    std::uint64_t seed_override = 0;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "config file (flat dotted key = value)");
        if (config_required) opt->required();
        sub->add_option("--seed", seed_override, "override the config seed")
            ->each([&](const std::string&) { seed_given = true; });
    };

    auto* sim = app.add_subcommand("simulate", "simulate a dataset from the configured truth");
    add_common(sim, true);
    auto* fit = app.add_subcommand("fit", "sample the posterior of (psi2, phi2, q)");
    add_common(fit, true);

    auto* fisher = app.add_subcommand("fisher-check", "verify the information-matrix identities");
    int fc_T = 5, fc_A = 4;
    std::int64_t fc_n_mc = 100000;
    std::uint64_t fc_seed = 20240901;
    std::string fc_out = ".";
    fisher->add_option("--T", fc_T, "time steps");
    fisher->add_option("--A", fc_A, "age classes");
    fisher->add_option("--seed", fc_seed, "seed");
    fisher->add_option("--n-mc", fc_n_mc, "Monte Carlo samples (>= 10^4)");
    fisher->add_option("--out", fc_out, "output directory");

    auto* pc = app.add_subcommand("prior-compare", "tabulate the candidate prior densities");
    add_common(pc, true);
    int pc_grid = 12;
    pc->add_option("--grid", pc_grid, "nodes per dimension");

    auto* sbc_cmd = app.add_subcommand("sbc", "simulation-based calibration of the sampler");
    add_common(sbc_cmd, true);

    auto* info = app.add_subcommand("info-criterion",
                                    "estimate expected posterior-prior KL per prior and T");
    add_common(info, true);
    std::vector<double> info_box;
    std::vector<int> info_T;
    std::vector<std::string> info_priors;
    int info_grid = 0, info_outer = 0;
    info->add_option("--box", info_box, "psi2_lo psi2_hi phi2_lo phi2_hi q_lo q_hi")->expected(6);
    info->add_option("--T-list", info_T, "time horizons");
    info->add_option("--priors", info_priors, "subset of reference|jeffreys|flat");
    info->add_option("--grid", info_grid, "nodes per dimension");
    info->add_option("--n-outer", info_outer, "outer replicates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (fisher->parsed()) {
            std::string hash;
            if (!config_path.empty()) hash = parse_config(config_path, "fisher-check").config_hash;
            return cmd_fisher_check(fc_T, fc_A, fc_seed, fc_n_mc, fc_out, hash);
        }

        std::string command = sim->parsed()       ? "simulate"
                              : fit->parsed()     ? "fit"
                              : pc->parsed()      ? "prior-compare"
                              : sbc_cmd->parsed() ? "sbc"
                                                  : "info-criterion";
        RunConfig cfg = parse_config(config_path, command);
        if (seed_given) {
            cfg.seed = seed_override;
            cfg.sampler.seed = seed_override;
        }
        if (info->parsed()) {
            if (!info_box.empty()) {
                PriorBox box{info_box[0], info_box[1], info_box[2],
                             info_box[3], info_box[4], info_box[5]};
                box.validate();
                cfg.prior.box = box;
            }
            if (!info_T.empty()) cfg.info.T_list = info_T;
            if (!info_priors.empty()) {
                cfg.info.priors.clear();
                for (const auto& s : info_priors)
                    cfg.info.priors.push_back(prior_kind_from_string(s));
            }
            if (info_grid > 0) cfg.info.grid_n = info_grid;
            if (info_outer > 0) cfg.info.n_outer = info_outer;
        }

        if (sim->parsed()) return cmd_simulate(cfg);
        if (fit->parsed()) return cmd_fit(cfg);
        if (pc->parsed()) return cmd_prior_compare(cfg, pc_grid);
        if (sbc_cmd->parsed()) return cmd_sbc(cfg);
        return cmd_info_criterion(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace refprior
