#pragma once

#include <string>
#include <vector>

#include "refprior/fisher.hpp"
#include "refprior/gibbs.hpp"
#include "refprior/info_criterion.hpp"
#include "refprior/types.hpp"

namespace refprior {

/// Validation failure in an input file; carries the 1-based line number.
struct CsvError : std::runtime_error {
    CsvError(const std::string& path, int line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_number(line) {}
    int line_number;
};

// Observed-data ingestion. catches.csv has header `t,cstar`; indices.csv has
// header `t,a,istar`; indices are 1-based and must form a full rectangle
// t = 1..T, a = 1..A with no duplicates. Jstar is computed from Istar.
Eigen::VectorXd read_catches_csv(const std::string& path);
Eigen::MatrixXd read_indices_csv(const std::string& path);
ObservedData read_observed(const std::string& catches_path, const std::string& indices_path,
                           const ModelConfig& cfg);

void write_catches_csv(const std::string& path, const Eigen::VectorXd& cstar);
void write_indices_csv(const std::string& path, const Eigen::MatrixXd& istar);

// True-state persistence: `t,c,jtilde` per time step and `t,a,n,f` per cell.
void write_state_time_csv(const std::string& path, const Eigen::VectorXd& C,
                          const Eigen::VectorXd& Jtilde);
void read_state_time_csv(const std::string& path, Eigen::VectorXd& C, Eigen::VectorXd& Jtilde);
void write_state_ages_csv(const std::string& path, const Eigen::MatrixXd& N,
                          const Eigen::MatrixXd& F);
void read_state_ages_csv(const std::string& path, Eigen::MatrixXd& N, Eigen::MatrixXd& F);

// Chain persistence: `iter,psi2,phi2,q[,logC_1..,Jt_1..]`.
void write_chain_csv(const std::string& path, const Chain& chain);

/// Posterior means, sds, quantiles, ESS and acceptance rates as `key = value`
/// lines.
void write_summary(const std::string& path, const Chain& chain);

void write_fisher_report_csv(const std::string& path, const std::vector<CheckRow>& rows);
void write_mi_compare_csv(const std::string& path, const std::vector<PriorComparisonRow>& rows);
void write_sbc_ranks_csv(const std::string& path, const SbcReport& report);

/// Deterministic float formatting with round-trip precision.
std::string format_double(double v);

}  // namespace refprior
