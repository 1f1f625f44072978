#include "refprior/config.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace refprior {

namespace {

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

class ConfigReader {
public:
    ConfigReader(const std::string& path) : path_(path) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path, 0, "cannot open config file");
        std::ostringstream raw;
        raw << in.rdbuf();
        raw_ = raw.str();

        std::istringstream lines(raw_);
        std::string line;
        int number = 0;
        while (std::getline(lines, line)) {
            ++number;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::string stripped = line;
            std::size_t hash = stripped.find('#');
            if (hash != std::string::npos) stripped = stripped.substr(0, hash);
            stripped = trim(stripped);
            if (stripped.empty()) continue;
            std::size_t eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError("?", number, "expected 'key = value'");
            std::string key = trim(stripped.substr(0, eq));
            std::string value = trim(stripped.substr(eq + 1));
            if (key.empty()) throw ConfigError("?", number, "empty key");
            if (entries_.count(key)) throw ConfigError(key, number, "duplicate key");
            entries_[key] = Entry{value, number, false};
        }
    }

    const std::string& raw() const { return raw_; }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::optional<std::string> get(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }

    int line_of(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    std::string require(const std::string& key) {
        auto v = get(key);
        if (!v) throw ConfigError(key, 0, "required key is missing");
        return *v;
    }

    double number(const std::string& key, const std::string& value) const {
        try {
            std::size_t pos = 0;
            double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(key, line_of(key), "expected a number, got '" + value + "'");
        }
    }

    std::int64_t integer(const std::string& key, const std::string& value) const {
        double v = number(key, value);
        auto i = static_cast<std::int64_t>(v);
        if (static_cast<double>(i) != v)
            throw ConfigError(key, line_of(key), "expected an integer, got '" + value + "'");
        return i;
    }

    std::vector<std::string> list(const std::string& key, const std::string& value) const {
        std::string body = value;
        if (!body.empty() && body.front() == '[') {
            if (body.back() != ']') throw ConfigError(key, line_of(key), "unterminated list");
            body = body.substr(1, body.size() - 2);
        }
        std::vector<std::string> out;
        std::string cur;
        for (char ch : body) {
            if (ch == ',') {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
        if (out.empty()) throw ConfigError(key, line_of(key), "empty list");
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, entry] : entries_) {
            if (!entry.used)
                throw ConfigError(key, entry.line, "unknown key (strict parsing rejects typos)");
        }
    }

private:
    std::string path_;
    std::string raw_;
    std::map<std::string, Entry> entries_;
};

Eigen::VectorXd parse_vector(ConfigReader& r, const std::string& key, const std::string& value,
                             int expected_size) {
    auto items = r.list(key, value);
    Eigen::VectorXd out;
    if (static_cast<int>(items.size()) == 1 && expected_size > 1) {
        out = Eigen::VectorXd::Constant(expected_size, r.number(key, items[0]));
    } else {
        if (expected_size > 0 && static_cast<int>(items.size()) != expected_size)
            throw ConfigError(key, r.line_of(key),
                              "expected " + std::to_string(expected_size) + " entries, got " +
                                  std::to_string(items.size()));
        out.resize(static_cast<Eigen::Index>(items.size()));
        for (std::size_t i = 0; i < items.size(); ++i) out[static_cast<Eigen::Index>(i)] = r.number(key, items[i]);
    }
    return out;
}

void require_input_path(const std::string& key, const std::string& path) {
    if (path.empty()) throw ConfigError(key, 0, "required path is missing");
    if (!std::filesystem::exists(path))
        throw ConfigError(key, 0, "path '" + path + "' does not exist");
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(const std::string& path, const std::string& command) {
    ConfigReader r(path);
    RunConfig cfg;
    cfg.config_hash = fnv1a_hex(r.raw());

    // --- model section ---
    if (auto v = r.get("model.A")) {
        auto a = r.integer("model.A", *v);
        if (a < 1) throw ConfigError("model.A", r.line_of("model.A"), "A >= 1 required");
        cfg.model.A = static_cast<int>(a);
    }
    if (auto v = r.get("model.T")) {
        auto t = r.integer("model.T", *v);
        if (t < 2) throw ConfigError("model.T", r.line_of("model.T"), "T >= 2 required");
        cfg.model.T = static_cast<int>(t);
    }
    cfg.model.s = Eigen::VectorXd::Ones(cfg.model.A);
    cfg.model.M = Eigen::VectorXd::Zero(cfg.model.A);
    if (auto v = r.get("model.s")) cfg.model.s = parse_vector(r, "model.s", *v, cfg.model.A);
    if (auto v = r.get("model.M")) cfg.model.M = parse_vector(r, "model.M", *v, cfg.model.A);
    if (auto v = r.get("model.dynamics")) {
        try {
            cfg.model.dynamics = dynamics_from_string(*v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("model.dynamics", r.line_of("model.dynamics"), e.what());
        }
    }
    if (auto v = r.get("model.mu1_sd")) cfg.model.mu1_sd = r.number("model.mu1_sd", *v);
    if (auto v = r.get("model.mu2_sd")) cfg.model.mu2_sd = r.number("model.mu2_sd", *v);
    if (auto v = r.get("model.n_floor")) cfg.model.n_floor = r.number("model.n_floor", *v);
    if (auto v = r.get("model.N_init"))
        cfg.N_init = parse_vector(r, "model.N_init", *v, cfg.model.A);
    if (auto v = r.get("model.F")) cfg.F_by_age = parse_vector(r, "model.F", *v, cfg.model.A);
    if (auto v = r.get("model.recruitment"))
        cfg.recruitment = parse_vector(r, "model.recruitment", *v, cfg.model.T - 1);
    try {
        cfg.model.validate();
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        std::string key = msg.substr(0, msg.find(':'));
        throw ConfigError(key, r.line_of(key), msg);
    }

    // --- truth parameters (simulation) ---
    bool has_phi2 = r.has("params.phi2");
    bool has_components = r.has("params.sigma2") || r.has("params.tau2");
    if (has_phi2 && has_components)
        throw ConfigError("params.phi2", r.line_of("params.phi2"),
                          "give either params.phi2 or params.sigma2/params.tau2, not both");
    if (r.has("params.psi2") || r.has("params.q") || has_phi2 || has_components) {
        double psi2 = r.number("params.psi2", r.require("params.psi2"));
        double q = r.number("params.q", r.require("params.q"));
        try {
            if (has_phi2) {
                double phi2 = r.number("params.phi2", r.require("params.phi2"));
                cfg.params = NuisanceParams::from_phi2(psi2, phi2, q, cfg.model.A);
            } else {
                double sigma2 =
                    r.has("params.sigma2") ? r.number("params.sigma2", r.require("params.sigma2")) : 0.0;
                double tau2 =
                    r.has("params.tau2") ? r.number("params.tau2", r.require("params.tau2")) : 0.0;
                cfg.params = NuisanceParams::from_components(psi2, q, sigma2, tau2, cfg.model.A);
            }
        } catch (const std::invalid_argument& e) {
            std::string msg = e.what();
            std::string key = msg.substr(0, msg.find(':'));
            throw ConfigError(key, r.line_of(key), msg);
        }
        cfg.has_params = true;
    }

    // --- prior section ---
    if (auto v = r.get("prior")) {
        try {
            cfg.prior.kind = prior_kind_from_string(*v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("prior", r.line_of("prior"), e.what());
        }
    }
    if (auto v = r.get("prior.box")) {
        auto items = r.list("prior.box", *v);
        if (items.size() != 6)
            throw ConfigError("prior.box", r.line_of("prior.box"),
                              "expected 6 numbers: psi2_lo, psi2_hi, phi2_lo, phi2_hi, q_lo, q_hi");
        PriorBox box;
        box.psi2_lo = r.number("prior.box", items[0]);
        box.psi2_hi = r.number("prior.box", items[1]);
        box.phi2_lo = r.number("prior.box", items[2]);
        box.phi2_hi = r.number("prior.box", items[3]);
        box.q_lo = r.number("prior.box", items[4]);
        box.q_hi = r.number("prior.box", items[5]);
        try {
            box.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("prior.box", r.line_of("prior.box"), e.what());
        }
        cfg.prior.box = box;
    }

    // --- sampler section ---
    if (auto v = r.get("sampler.iterations"))
        cfg.sampler.iterations = r.integer("sampler.iterations", *v);
    if (auto v = r.get("sampler.burn_in")) cfg.sampler.burn_in = r.integer("sampler.burn_in", *v);
    if (auto v = r.get("sampler.thin"))
        cfg.sampler.thin = static_cast<int>(r.integer("sampler.thin", *v));
    if (auto v = r.get("sampler.mode")) {
        try {
            cfg.sampler.mode = sampler_mode_from_string(*v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("sampler.mode", r.line_of("sampler.mode"), e.what());
        }
    }
    if (auto v = r.get("sampler.latent_step_sd"))
        cfg.sampler.latent_step_sd = r.number("sampler.latent_step_sd", *v);
    if (auto v = r.get("sampler.psi2_mode")) {
        try {
            cfg.sampler.psi2_mode = psi2_mode_from_string(*v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("sampler.psi2_mode", r.line_of("sampler.psi2_mode"), e.what());
        }
    }
    try {
        cfg.sampler.validate();
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        std::string key = msg.substr(0, msg.find(':'));
        throw ConfigError(key, r.line_of(key), msg);
    }

    // --- paths ---
    if (auto v = r.get("paths.catches")) cfg.paths.catches = *v;
    if (auto v = r.get("paths.indices")) cfg.paths.indices = *v;
    if (auto v = r.get("paths.state_time")) cfg.paths.state_time = *v;
    if (auto v = r.get("paths.state_ages")) cfg.paths.state_ages = *v;
    if (auto v = r.get("paths.output_dir")) cfg.paths.output_dir = *v;

    // --- info-criterion section ---
    if (auto v = r.get("info.T_list")) {
        for (const auto& item : r.list("info.T_list", *v))
            cfg.info.T_list.push_back(static_cast<int>(r.integer("info.T_list", item)));
    }
    if (auto v = r.get("info.priors")) {
        cfg.info.priors.clear();
        for (const auto& item : r.list("info.priors", *v)) {
            try {
                cfg.info.priors.push_back(prior_kind_from_string(item));
            } catch (const std::invalid_argument& e) {
                throw ConfigError("info.priors", r.line_of("info.priors"), e.what());
            }
        }
    }
    if (auto v = r.get("info.grid_n"))
        cfg.info.grid_n = static_cast<int>(r.integer("info.grid_n", *v));
    if (auto v = r.get("info.n_outer"))
        cfg.info.n_outer = static_cast<int>(r.integer("info.n_outer", *v));

    // --- sbc section ---
    if (auto v = r.get("sbc.n_replicates"))
        cfg.sbc.n_replicates = static_cast<int>(r.integer("sbc.n_replicates", *v));
    if (auto v = r.get("sbc.n_posterior_draws"))
        cfg.sbc.n_posterior_draws = static_cast<int>(r.integer("sbc.n_posterior_draws", *v));
    if (auto v = r.get("sbc.n_bins"))
        cfg.sbc.n_bins = static_cast<int>(r.integer("sbc.n_bins", *v));

    if (auto v = r.get("seed"))
        cfg.seed = static_cast<std::uint64_t>(r.integer("seed", *v));
    cfg.sampler.seed = cfg.seed;

    r.reject_unknown();

    // --- command-aware validation ---
    auto require_simulation_inputs = [&]() {
        if (cfg.model.dynamics == Dynamics::Direct) {
            require_input_path("paths.state_time", cfg.paths.state_time);
        } else {
            if (!cfg.N_init) throw ConfigError("model.N_init", 0, "required for simulated dynamics");
            if (!cfg.F_by_age) throw ConfigError("model.F", 0, "required for simulated dynamics");
        }
    };
    auto require_proper_prior = [&](const std::string& cmd) {
        if (!cfg.prior.box)
            throw ConfigError("prior.box", 0, cmd + " requires proper (truncated) prior");
    };

    if (command == "simulate") {
        if (!cfg.has_params) throw ConfigError("params.psi2", 0, "simulate requires params.*");
        require_simulation_inputs();
    } else if (command == "fit") {
        require_input_path("paths.catches", cfg.paths.catches);
        require_input_path("paths.indices", cfg.paths.indices);
        require_input_path("paths.state_time", cfg.paths.state_time);
        if (cfg.sampler.mode == SamplerMode::Full)
            require_input_path("paths.state_ages", cfg.paths.state_ages);
    } else if (command == "sbc") {
        require_proper_prior("sbc");
        require_simulation_inputs();
    } else if (command == "info-criterion") {
        require_proper_prior("info-criterion");
        require_simulation_inputs();
        if (cfg.info.T_list.empty()) cfg.info.T_list = {cfg.model.T};
        for (int T : cfg.info.T_list)
            if (T > cfg.model.T)
                throw ConfigError("info.T_list", r.line_of("info.T_list"),
                                  "entries must not exceed model.T");
    } else if (command == "prior-compare") {
        require_proper_prior("prior-compare");
    }

    if (!cfg.paths.output_dir.empty()) {
        std::filesystem::path out(cfg.paths.output_dir);
        if (out.has_parent_path() && !std::filesystem::exists(out.parent_path()))
            throw ConfigError("paths.output_dir", 0,
                              "parent of '" + cfg.paths.output_dir + "' does not exist");
    }
    return cfg;
}

}  // namespace refprior
