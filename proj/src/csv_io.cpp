#include "refprior/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace refprior {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, const std::string& path, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw CsvError(path, line, "cannot parse number '" + s + "'");
    }
}

int parse_index(const std::string& s, const std::string& path, int line) {
    double v = parse_number(s, path, line);
    int i = static_cast<int>(v);
    if (v != i || i < 1) throw CsvError(path, line, "expected a positive integer, got '" + s + "'");
    return i;
}

std::vector<std::vector<std::string>> read_table(const std::string& path,
                                                 const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw CsvError(path, 0, "cannot open file");
    std::string line;
    int line_number = 0;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_fields(line);
        if (line_number == 1) {
            std::string header;
            for (std::size_t i = 0; i < fields.size(); ++i)
                header += (i ? "," : "") + fields[i];
            if (header != expected_header)
                throw CsvError(path, 1,
                               "expected header '" + expected_header + "', got '" + header + "'");
            continue;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CsvError(path, 0, "cannot open file for writing");
    return out;
}

}  // namespace

Eigen::VectorXd read_catches_csv(const std::string& path) {
    auto rows = read_table(path, "t,cstar");
    std::map<int, double> by_t;
    int line = 1;
    for (const auto& r : rows) {
        ++line;
        if (r.size() != 2) throw CsvError(path, line, "expected 2 fields");
        int t = parse_index(r[0], path, line);
        double c = parse_number(r[1], path, line);
        if (!(c > 0.0)) throw CsvError(path, line, "cstar must be > 0");
        if (!by_t.emplace(t, c).second) throw CsvError(path, line, "duplicate time step");
    }
    int T = static_cast<int>(by_t.size());
    if (T == 0) throw CsvError(path, 1, "no data rows");
    Eigen::VectorXd out(T);
    for (int t = 1; t <= T; ++t) {
        auto it = by_t.find(t);
        if (it == by_t.end()) throw CsvError(path, 1, "missing time step " + std::to_string(t));
        out[t - 1] = it->second;
    }
    return out;
}

Eigen::MatrixXd read_indices_csv(const std::string& path) {
    auto rows = read_table(path, "t,a,istar");
    std::map<std::pair<int, int>, double> by_cell;
    int max_t = 0, max_a = 0, line = 1;
    for (const auto& r : rows) {
        ++line;
        if (r.size() != 3) throw CsvError(path, line, "expected 3 fields");
        int t = parse_index(r[0], path, line);
        int a = parse_index(r[1], path, line);
        double v = parse_number(r[2], path, line);
        if (!(v > 0.0)) throw CsvError(path, line, "istar must be > 0");
        if (!by_cell.emplace(std::make_pair(t, a), v).second)
            throw CsvError(path, line, "duplicate (t,a) cell");
        max_t = std::max(max_t, t);
        max_a = std::max(max_a, a);
    }
    if (by_cell.empty()) throw CsvError(path, 1, "no data rows");
    if (static_cast<int>(by_cell.size()) != max_t * max_a)
        throw CsvError(path, 1, "indices are not rectangular over t = 1.." + std::to_string(max_t) +
                                    ", a = 1.." + std::to_string(max_a));
    Eigen::MatrixXd out(max_a, max_t);
    for (const auto& [cell, v] : by_cell) out(cell.second - 1, cell.first - 1) = v;
    return out;
}

ObservedData read_observed(const std::string& catches_path, const std::string& indices_path,
                           const ModelConfig& cfg) {
    ObservedData data;
    data.Cstar = read_catches_csv(catches_path);
    data.Istar = read_indices_csv(indices_path);
    if (data.Istar.cols() != data.Cstar.size())
        throw CsvError(indices_path, 1, "indices and catches disagree on T");
    data.Jstar.resize(data.Istar.cols());
    for (Eigen::Index t = 0; t < data.Istar.cols(); ++t) {
        double sum = 0.0;
        for (Eigen::Index a = 0; a < data.Istar.rows(); ++a) sum += std::log(data.Istar(a, t));
        data.Jstar[t] = sum;
    }
    data.validate(cfg);
    return data;
}

void write_catches_csv(const std::string& path, const Eigen::VectorXd& cstar) {
    auto out = open_out(path);
    out << "t,cstar\n";
    for (Eigen::Index t = 0; t < cstar.size(); ++t)
        out << (t + 1) << "," << format_double(cstar[t]) << "\n";
}

void write_indices_csv(const std::string& path, const Eigen::MatrixXd& istar) {
    auto out = open_out(path);
    out << "t,a,istar\n";
    for (Eigen::Index t = 0; t < istar.cols(); ++t)
        for (Eigen::Index a = 0; a < istar.rows(); ++a)
            out << (t + 1) << "," << (a + 1) << "," << format_double(istar(a, t)) << "\n";
}

void write_state_time_csv(const std::string& path, const Eigen::VectorXd& C,
                          const Eigen::VectorXd& Jtilde) {
    auto out = open_out(path);
    out << "t,c,jtilde\n";
    for (Eigen::Index t = 0; t < C.size(); ++t)
        out << (t + 1) << "," << format_double(C[t]) << "," << format_double(Jtilde[t]) << "\n";
}

void read_state_time_csv(const std::string& path, Eigen::VectorXd& C, Eigen::VectorXd& Jtilde) {
    auto rows = read_table(path, "t,c,jtilde");
    std::map<int, std::pair<double, double>> by_t;
    int line = 1;
    for (const auto& r : rows) {
        ++line;
        if (r.size() != 3) throw CsvError(path, line, "expected 3 fields");
        int t = parse_index(r[0], path, line);
        double c = parse_number(r[1], path, line);
        double j = parse_number(r[2], path, line);
        if (!(c > 0.0)) throw CsvError(path, line, "c must be > 0");
        if (!by_t.emplace(t, std::make_pair(c, j)).second)
            throw CsvError(path, line, "duplicate time step");
    }
    int T = static_cast<int>(by_t.size());
    if (T == 0) throw CsvError(path, 1, "no data rows");
    C.resize(T);
    Jtilde.resize(T);
    for (int t = 1; t <= T; ++t) {
        auto it = by_t.find(t);
        if (it == by_t.end()) throw CsvError(path, 1, "missing time step " + std::to_string(t));
        C[t - 1] = it->second.first;
        Jtilde[t - 1] = it->second.second;
    }
}

void write_state_ages_csv(const std::string& path, const Eigen::MatrixXd& N,
                          const Eigen::MatrixXd& F) {
    auto out = open_out(path);
    out << "t,a,n,f\n";
    for (Eigen::Index t = 0; t < N.cols(); ++t)
        for (Eigen::Index a = 0; a < N.rows(); ++a)
            out << (t + 1) << "," << (a + 1) << "," << format_double(N(a, t)) << ","
                << format_double(F(a, t)) << "\n";
}

void read_state_ages_csv(const std::string& path, Eigen::MatrixXd& N, Eigen::MatrixXd& F) {
    auto rows = read_table(path, "t,a,n,f");
    std::map<std::pair<int, int>, std::pair<double, double>> by_cell;
    int max_t = 0, max_a = 0, line = 1;
    for (const auto& r : rows) {
        ++line;
        if (r.size() != 4) throw CsvError(path, line, "expected 4 fields");
        int t = parse_index(r[0], path, line);
        int a = parse_index(r[1], path, line);
        double n = parse_number(r[2], path, line);
        double f = parse_number(r[3], path, line);
        if (!(n > 0.0)) throw CsvError(path, line, "n must be > 0");
        if (f < 0.0) throw CsvError(path, line, "f must be >= 0");
        if (!by_cell.emplace(std::make_pair(t, a), std::make_pair(n, f)).second)
            throw CsvError(path, line, "duplicate (t,a) cell");
        max_t = std::max(max_t, t);
        max_a = std::max(max_a, a);
    }
    if (by_cell.empty()) throw CsvError(path, 1, "no data rows");
    if (static_cast<int>(by_cell.size()) != max_t * max_a)
        throw CsvError(path, 1, "cells are not rectangular");
    N.resize(max_a, max_t);
    F.resize(max_a, max_t);
    for (const auto& [cell, v] : by_cell) {
        N(cell.second - 1, cell.first - 1) = v.first;
        F(cell.second - 1, cell.first - 1) = v.second;
    }
}

void write_chain_csv(const std::string& path, const Chain& chain) {
    auto out = open_out(path);
    const bool full = !chain.states.empty();
    out << "iter,psi2,phi2,q";
    if (full) {
        Eigen::Index T = chain.states.front().C.size();
        for (Eigen::Index t = 0; t < T; ++t) out << ",logC_" << (t + 1);
        for (Eigen::Index t = 0; t < T; ++t) out << ",Jt_" << (t + 1);
    }
    out << "\n";
    for (std::size_t i = 0; i < chain.samples.size(); ++i) {
        const NuisanceParams& p = chain.samples[i];
        out << (i + 1) << "," << format_double(p.psi2) << "," << format_double(p.phi2) << ","
            << format_double(p.q);
        if (full) {
            const PopulationState& st = chain.states[i];
            for (Eigen::Index t = 0; t < st.C.size(); ++t)
                out << "," << format_double(std::log(st.C[t]));
            for (Eigen::Index t = 0; t < st.Jtilde.size(); ++t)
                out << "," << format_double(st.Jtilde[t]);
        }
        out << "\n";
    }
}

void write_summary(const std::string& path, const Chain& chain) {
    auto out = open_out(path);
    auto emit = [&](const std::string& name, const std::vector<double>& xs) {
        out << name << ".mean = " << format_double(mean_of(xs)) << "\n";
        out << name << ".sd = " << format_double(sd_of(xs)) << "\n";
        out << name << ".q2_5 = " << format_double(quantile_of(xs, 0.025)) << "\n";
        out << name << ".q50 = " << format_double(quantile_of(xs, 0.5)) << "\n";
        out << name << ".q97_5 = " << format_double(quantile_of(xs, 0.975)) << "\n";
        out << name << ".ess = " << format_double(effective_sample_size(xs)) << "\n";
    };
    std::vector<double> psi2s, phi2s, qs;
    for (const auto& p : chain.samples) {
        psi2s.push_back(p.psi2);
        phi2s.push_back(p.phi2);
        qs.push_back(p.q);
    }
    out << "chain.length = " << chain.samples.size() << "\n";
    out << "chain.seed = " << chain.seed << "\n";
    emit("psi2", psi2s);
    emit("phi2", phi2s);
    emit("q", qs);
    for (const auto& [name, rate] : chain.acceptance_rates)
        out << "acceptance." << name << " = " << format_double(rate) << "\n";
}

void write_fisher_report_csv(const std::string& path, const std::vector<CheckRow>& rows) {
    auto out = open_out(path);
    out << "identity,max_abs_error,tolerance,pass\n";
    for (const auto& r : rows)
        out << r.identity << "," << format_double(r.max_abs_error) << ","
            << format_double(r.tolerance) << "," << (r.pass ? "true" : "false") << "\n";
}

void write_mi_compare_csv(const std::string& path, const std::vector<PriorComparisonRow>& rows) {
    auto out = open_out(path);
    out << "prior,T,mi,se\n";
    for (const auto& r : rows)
        out << r.prior << "," << r.T << "," << format_double(r.mi) << "," << format_double(r.se)
            << "\n";
}

void write_sbc_ranks_csv(const std::string& path, const SbcReport& report) {
    auto out = open_out(path);
    out << "component,bin,count,chi2,p_value\n";
    for (const auto& comp : report.components)
        for (std::size_t b = 0; b < comp.counts.size(); ++b)
            out << comp.name << "," << b << "," << comp.counts[b] << ","
                << format_double(comp.chi2) << "," << format_double(comp.p_value) << "\n";
}

}  // namespace refprior
