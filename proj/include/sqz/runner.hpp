// Route runners behind the command line, their artifacts, and the comparison
// harness. All artifacts are text: JSON for states, JSON lines for trajectories,
// CSV for distributions and scans. Each carries the config hash and code version.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqz/config.hpp"

namespace sqz {

struct StateCheckpoint {
    double t = 0.0;
    DensityOperator rho;
    /// Standard errors of Re rho and Im rho (ensemble routes only).
    std::optional<Eigen::MatrixXd> se_re, se_im;
};

struct StateArtifact {
    std::string route;
    std::string config_hash;
    std::string version;
    std::optional<std::uint64_t> seed;
    std::vector<StateCheckpoint> checkpoints;
    /// Probabilities of 0..count_max-1 counts and of count_max or more (ensembles), or
    /// of exactly 0..s_max counts (analytic route).
    std::vector<double> counts;
    std::vector<double> counts_se;
    nlohmann::json diagnostics = nlohmann::json::object();
};

nlohmann::json to_json(const StateArtifact& artifact);
StateArtifact state_artifact_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

struct RunContext {
    int threads = 1;
    /// Progress lines (verbose mode); may be empty.
    std::function<void(const std::string&)> log;
};

/// Unconditional route: squeezed-basis hierarchy (truncation-checked) or number basis.
StateArtifact run_master_route(const RunConfig& cfg, const RunContext& ctx);

/// Analytic route: a-priori decomposition at the checkpoints plus the count
/// distribution at the last checkpoint.
StateArtifact run_analytic_route(const RunConfig& cfg, const RunContext& ctx,
                                 CountDistribution* distribution = nullptr);

struct EnsembleResult {
    StateArtifact summary;
    /// One JSON object per trajectory, in trajectory order.
    std::vector<nlohmann::json> records;
    /// Trajectories that raised an integrity failure (index, seed, message).
    nlohmann::json failures = nlohmann::json::array();
};

/// Sampled (or replayed, when run.record is set) collision or SME trajectories.
/// Trajectory i uses derive_seed(seed, i); aggregation is by index with pairwise
/// sums, so results do not depend on ctx.threads.
EnsembleResult run_ensemble(const RunConfig& cfg, const RunContext& ctx);

struct TransferResult {
    std::vector<ScanRow> rows;
    nlohmann::json summary;
};
TransferResult run_transfer_route(const RunConfig& cfg, const RunContext& ctx);

void write_count_csv(std::ostream& out, const CountDistribution& dist, const std::string& header);

struct CompareTolerance {
    /// Trace-norm bound per checkpoint; negative disables.
    double trace_norm = -1.0;
    /// Componentwise bound in combined standard errors; negative disables.
    double sigmas = -1.0;
    /// Bound on max |P_a(s) - P_b(s)|; negative disables.
    double counts = -1.0;
};

struct CompareReport {
    nlohmann::json report;
    bool pass = true;
};

/// Per-checkpoint trace-norm distances and largest componentwise deviation in
/// standard errors, count-statistics distances, pass/fail. Throws ValidationError
/// when the checkpoint grids differ.
CompareReport compare_artifacts(const StateArtifact& a, const StateArtifact& b,
                                const CompareTolerance& tol);

}  // namespace sqz
