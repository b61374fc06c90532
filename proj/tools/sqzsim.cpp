// Command-line entry point. Exit codes: 0 ok, 1 validation, 2 numerical
// integrity (including failed comparisons), 3 I/O.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sqz/config.hpp"
#include "sqz/errors.hpp"
#include "sqz/runner.hpp"

using namespace sqz;
using nlohmann::json;

namespace {

constexpr int kOk = 0, kValidation = 1, kIntegrity = 2, kIo = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out;
    bool verbose = false;
    // compare
    std::string a, b;
    double tol = -1.0, sigmas = -1.0, counts_tol = -1.0;
};

// Set once the config is known, so integrity failures can leave a diagnostics file.
std::string g_diagnostics_path;
json g_diagnostics_header = json::object();

RunConfig load(const Options& opt) {
    if (opt.config.empty()) throw ValidationError("--config: a config file is required");
    json doc = read_json_file(opt.config);
    if (!doc.is_object()) throw ValidationError("config: expected an object");
    if (opt.seed) doc["run"]["seed"] = *opt.seed;
    RunConfig cfg = parse_config(doc);
    if (!opt.out.empty()) cfg.output.dir = opt.out;
    g_diagnostics_header = {{"config_hash", cfg.hash()}, {"version", code_version()}};
    return cfg;
}

std::string prepare(const RunConfig& cfg, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output.dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.output.dir + "': " + ec.message());
    g_diagnostics_path = (std::filesystem::path(cfg.output.dir) / (cfg.output.prefix + "diagnostics.json")).string();
    return (std::filesystem::path(cfg.output.dir) / (cfg.output.prefix + name)).string();
}

std::ofstream open_text(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    return out;
}

RunContext context(const Options& opt) {
    RunContext ctx;
    ctx.threads = opt.threads;
    if (opt.verbose) ctx.log = [](const std::string& line) { std::cerr << "[sqzsim] " << line << '\n'; };
    return ctx;
}

std::string header_line(const RunConfig& cfg) {
    return "config_hash=" + cfg.hash() + " version=" + code_version();
}

int cmd_validate(const Options& opt) {
    const RunConfig cfg = load(opt);
    std::cout << json{{"valid", true}, {"route", cfg.run.route}, {"config_hash", cfg.hash()}}.dump() << '\n';
    return kOk;
}

int cmd_master(const Options& opt) {
    const RunConfig cfg = load(opt);
    const std::string path = prepare(cfg, cfg.run.number_basis ? "master_number_states.json" : "master_states.json");
    write_json_file(path, to_json(run_master_route(cfg, context(opt))));
    if (opt.verbose) std::cerr << "[sqzsim] wrote " << path << '\n';
    return kOk;
}

int cmd_analytic(const Options& opt) {
    const RunConfig cfg = load(opt);
    const std::string path = prepare(cfg, "analytic_states.json");
    CountDistribution dist;
    write_json_file(path, to_json(run_analytic_route(cfg, context(opt), &dist)));
    auto csv = open_text(prepare(cfg, "count_distribution.csv"));
    write_count_csv(csv, dist, header_line(cfg));
    return kOk;
}

int cmd_simulate(const Options& opt) {
    const RunConfig cfg = load(opt);
    if (cfg.run.route != "collision" && cfg.run.route != "sme")
        throw ValidationError("run.route: simulate needs 'collision' or 'sme' (got '" + cfg.run.route + "')");
    const EnsembleResult result = run_ensemble(cfg, context(opt));
    {
        auto lines = open_text(prepare(cfg, cfg.run.route + "_trajectories.jsonl"));
        lines << json{{"header", {{"config_hash", cfg.hash()}, {"version", code_version()}, {"route", cfg.run.route}}}}.dump()
              << '\n';
        for (const auto& rec : result.records) lines << rec.dump() << '\n';
    }
    json summary = to_json(result.summary);
    summary["status"] = result.failures.empty() ? "ok" : "integrity_failure";
    summary["failures"] = result.failures;
    write_json_file(prepare(cfg, cfg.run.route + "_summary.json"), summary);
    if (!result.failures.empty())
        throw IntegrityError(std::to_string(result.failures.size()) + " of " +
                             std::to_string(result.records.size()) + " trajectories failed; first: " +
                             result.failures[0]["error"].get<std::string>());
    return kOk;
}

int cmd_transfer(const Options& opt) {
    const RunConfig cfg = load(opt);
    const TransferResult result = run_transfer_route(cfg, context(opt));
    auto csv = open_text(prepare(cfg, "transfer_scan.csv"));
    csv << "# " << header_line(cfg) << '\n';
    write_scan_csv(csv, result.rows);
    write_json_file(prepare(cfg, "transfer_summary.json"), result.summary);
    return kOk;
}

int cmd_compare(const Options& opt) {
    const StateArtifact a = state_artifact_from_json(read_json_file(opt.a));
    const StateArtifact b = state_artifact_from_json(read_json_file(opt.b));
    const CompareReport report = compare_artifacts(a, b, {opt.tol, opt.sigmas, opt.counts_tol});
    std::cout << report.report.dump(2) << '\n';
    if (!opt.out.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(opt.out, ec);
        if (ec) throw IoError("cannot create output directory '" + opt.out + "'");
        write_json_file((std::filesystem::path(opt.out) / "compare_report.json").string(), report.report);
    }
    return report.pass ? kOk : kIntegrity;
}

void report_error(const char* kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Squeezed number-state pulse simulator"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config, "Run configuration (JSON)");
    app.add_option("--seed", opt.seed, "Base seed (overrides run.seed)");
    app.add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", opt.out, "Output directory (overrides output.dir)");
    app.add_flag("--verbose", opt.verbose, "Progress on stderr");

    int (*handler)(const Options&) = nullptr;
    auto sub = [&](const char* name, const char* help, int (*fn)(const Options&)) {
        CLI::App* s = app.add_subcommand(name, help);
        s->callback([&handler, fn] { handler = fn; });
        return s;
    };
    sub("simulate", "Sampled or replayed collision/SME trajectories", cmd_simulate);
    sub("master", "Unconditional hierarchy (squeezed or number basis)", cmd_master);
    sub("analytic", "A-priori decomposition and count distribution", cmd_analytic);
    sub("transfer", "Cavity transfer scan", cmd_transfer);
    sub("validate-config", "Parse and validate a config", cmd_validate);
    CLI::App* cmp = sub("compare", "Compare two state artifacts", cmd_compare);
    cmp->add_option("a", opt.a, "First artifact")->required();
    cmp->add_option("b", opt.b, "Second artifact")->required();
    cmp->add_option("--tol", opt.tol, "Trace-norm bound per checkpoint");
    cmp->add_option("--sigmas", opt.sigmas, "Componentwise bound in standard errors");
    cmp->add_option("--counts-tol", opt.counts_tol, "Bound on count-probability differences");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidation;
    }

    try {
        return handler(opt);
    } catch (const ValidationError& e) {
        report_error("validation", e.what());
        return kValidation;
    } catch (const IoError& e) {
        report_error("io", e.what());
        return kIo;
    } catch (const IntegrityError& e) {
        report_error("integrity", e.what());
        if (!g_diagnostics_path.empty()) {
            json diag = g_diagnostics_header;
            diag["status"] = "integrity_failure";
            diag["message"] = e.what();
            try {
                write_json_file(g_diagnostics_path, diag);
            } catch (const IoError&) {
            }
        }
        return kIntegrity;
    } catch (const std::exception& e) {
        report_error("integrity", e.what());
        return kIntegrity;
    }
}
