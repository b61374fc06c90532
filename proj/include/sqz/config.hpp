// Declarative run configuration (JSON). Every validation error names the
// offending field by its dotted path, e.g. "system.gamma: must be positive".
//
// {
//   "system":  {"kind": "two_level" | "cavity", "gamma": 1, "delta": 0,
//               "excited": false, "dim": 8, "fock": 0},
//   "input":   {"n": 1, "r": 0.5, "phi": 0, "t0": 0, "T": 8,
//               "profile": {"name": "gaussian", "params": {"center": 4, "sigma": 1}}},
//   "discretization": {"M": 400, "dt": 0.01, "max_dt": 0.005, "n_cut": 11,
//               "m_cut": 0, "ancilla_dim": 3, "coefficient_target": 1e-8,
//               "envelope": "smooth" | "grid"},
//   "run":     {"route": "collision" | "sme" | "master" | "analytic" | "transfer",
//               "trajectories": 1000, "seed": 7, "checkpoints": [2, 4, 6, 8],
//               "basis": "squeezed" | "number", "stepper": "rk4" | "euler",
//               "drift": "rk4" | "euler", "s_max": 3, "count_max": 4,
//               "truncation_alarm": 1e-4, "first_order": false, "record": [1.5, 3.2]},
//   "transfer": {"deltas": [0], "profile": "rising_exp", "profile_params": [{"rate": 1}], "t": 3},
//   "output":  {"dir": "out", "prefix": ""}
// }
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqz/collision.hpp"
#include "sqz/pulse.hpp"
#include "sqz/sme.hpp"
#include "sqz/squeezed_state.hpp"
#include "sqz/system.hpp"
#include "sqz/trajectories.hpp"
#include "sqz/transfer.hpp"

namespace sqz {

struct SystemSpec {
    std::string kind = "two_level";
    double gamma = 1.0;
    double delta = 0.0;
    bool excited = false;
    int dim = 8;
    int fock = 0;
};

struct InputSpec {
    int n = 0;
    SqueezeParams squeeze;
    ProfileSpec profile{"gaussian", {}};
    double t0 = 0.0;
    double T = 1.0;
};

struct DiscretizationSpec {
    int M = 200;
    double dt = 0.01;
    double max_dt = 0.005;
    /// Squeezed-basis hierarchy cut; < 0 selects n + 10.
    int n_cut = -1;
    /// Coefficient cut; 0 escalates until coefficient_target is met.
    int m_cut = 0;
    int ancilla_dim = 3;
    double coefficient_target = 1e-8;
    /// "smooth" evaluates the profile directly; "grid" uses the M-bin discretization.
    std::string envelope = "smooth";
};

struct RunSpec {
    std::string route = "master";
    int trajectories = 1;
    std::optional<std::uint64_t> seed;
    std::vector<double> checkpoints;
    bool number_basis = false;
    Stepper stepper = Stepper::rk4;
    DriftScheme drift = DriftScheme::rk4;
    int s_max = 3;
    /// Histogram bins of the ensemble count statistics (last bin collects the rest).
    int count_max = 4;
    double truncation_alarm = 1e-4;
    bool first_order = false;
    std::optional<std::vector<double>> record;
};

struct TransferRunSpec {
    std::vector<double> deltas{0.0};
    std::string profile = "rising_exp";
    std::vector<std::map<std::string, double>> profile_params;
    std::optional<double> t;
};

struct OutputSpec {
    std::string dir = "out";
    std::string prefix;
};

struct RunConfig {
    SystemSpec system;
    InputSpec input;
    DiscretizationSpec discretization;
    RunSpec run;
    TransferRunSpec transfer;
    OutputSpec output;
    /// The document as parsed, used for hashing.
    nlohmann::json source;

    /// 16 hex digits of FNV-1a over the canonical dump of `source`.
    std::string hash() const;
};

/// Parses and validates; throws ValidationError("<path>: <problem>").
RunConfig parse_config(const nlohmann::json& doc);
/// Reads a file; IoError when unreadable, ValidationError on malformed JSON.
RunConfig load_config(const std::string& path);

/// Version string embedded in every artifact.
std::string code_version();

OpenSystem build_system(const RunConfig& cfg);
Envelope build_envelope(const RunConfig& cfg);
PulseGrid build_grid(const RunConfig& cfg);
CoefficientTable build_coefficients(const RunConfig& cfg);
CollisionModel build_collision(const RunConfig& cfg);
HierarchyModel build_hierarchy(const RunConfig& cfg);
TrajectoryModel build_trajectory_model(const RunConfig& cfg);
CavityModel build_cavity(const RunConfig& cfg);
SmeOptions build_sme_options(const RunConfig& cfg);

}  // namespace sqz
