#include "sqz/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "sqz/ensemble.hpp"
#include "sqz/errors.hpp"

namespace sqz {

namespace {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ValidationError(what + ": expected a matrix");
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != static_cast<std::size_t>(m.cols())) throw ValidationError(what + ": ragged matrix");
        for (std::size_t k = 0; k < j[i].size(); ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

json operator_json(const Operator& op) { return {{"re", matrix_json(op.real())}, {"im", matrix_json(op.imag())}}; }

Operator operator_from_json(const json& j, const std::string& what) {
    const Eigen::MatrixXd re = matrix_from_json(j.at("re"), what + ".re");
    const Eigen::MatrixXd im = matrix_from_json(j.at("im"), what + ".im");
    if (re.rows() != im.rows() || re.cols() != im.cols()) throw ValidationError(what + ": re/im shapes differ");
    Operator op(re.rows(), re.cols());
    op.real() = re;
    op.imag() = im;
    return op;
}

StateArtifact new_artifact(const RunConfig& cfg, const std::string& route) {
    StateArtifact a;
    a.route = route;
    a.config_hash = cfg.hash();
    a.version = code_version();
    return a;
}

void say(const RunContext& ctx, const std::string& line) {
    if (ctx.log) ctx.log(line);
}

void check_state(const DensityOperator& rho, double t) {
    if (!is_finite(rho)) throw IntegrityError("non-finite state at t = " + sci(t));
}

struct SampledTrajectory {
    bool ok = false;
    std::string error;
    std::vector<double> count_times;
    std::vector<DensityOperator> states;
    json record;
};

DensityOperator normalized(const Operator& rho) {
    const double tr = trace(rho).real();
    if (!(tr > 0.0)) throw IntegrityError("conditional state with non-positive trace");
    return rho / tr;
}

}  // namespace

json to_json(const StateArtifact& a) {
    json cps = json::array();
    for (const auto& c : a.checkpoints) {
        json cp = {{"t", c.t}, {"rho", operator_json(c.rho)}};
        if (c.se_re && c.se_im) cp["se"] = {{"re", matrix_json(*c.se_re)}, {"im", matrix_json(*c.se_im)}};
        cps.push_back(std::move(cp));
    }
    json j = {{"kind", "states"},         {"route", a.route},     {"config_hash", a.config_hash},
              {"version", a.version},     {"checkpoints", cps},   {"counts", a.counts},
              {"counts_se", a.counts_se}, {"diagnostics", a.diagnostics}};
    if (a.seed) j["seed"] = *a.seed;
    return j;
}

StateArtifact state_artifact_from_json(const json& j) {
    try {
        if (j.value("kind", "") != "states") throw ValidationError("artifact: not a state artifact");
        StateArtifact a;
        a.route = j.at("route").get<std::string>();
        a.config_hash = j.at("config_hash").get<std::string>();
        a.version = j.at("version").get<std::string>();
        if (j.contains("seed")) a.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& cp : j.at("checkpoints")) {
            StateCheckpoint c;
            c.t = cp.at("t").get<double>();
            c.rho = operator_from_json(cp.at("rho"), "artifact.rho");
            if (cp.contains("se")) {
                c.se_re = matrix_from_json(cp.at("se").at("re"), "artifact.se.re");
                c.se_im = matrix_from_json(cp.at("se").at("im"), "artifact.se.im");
            }
            a.checkpoints.push_back(std::move(c));
        }
        a.counts = j.value("counts", std::vector<double>{});
        a.counts_se = j.value("counts_se", std::vector<double>{});
        a.diagnostics = j.value("diagnostics", json::object());
        return a;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("artifact: ") + e.what());
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return json::parse(buffer.str());
    } catch (const json::parse_error& e) {
        throw ValidationError("'" + path + "': malformed JSON at byte " + std::to_string(e.byte));
    }
}

StateArtifact run_master_route(const RunConfig& cfg, const RunContext& ctx) {
    const HierarchyModel model = build_hierarchy(cfg);
    const Envelope env = build_envelope(cfg);
    const double max_dt = cfg.discretization.max_dt;
    StateArtifact out = new_artifact(cfg, cfg.run.number_basis ? "master-number" : "master");
    out.diagnostics["n_cut"] = model.n_cut;
    if (!model.number_basis) {
        say(ctx, "checking hierarchy truncation at n_cut = " + std::to_string(model.n_cut));
        out.diagnostics["truncation_stress"] =
            check_truncation(model, env, cfg.run.checkpoints.back(), max_dt, cfg.run.truncation_alarm);
    }
    say(ctx, "integrating the master hierarchy");
    const auto cps = master_checkpoints(model, env, cfg.run.checkpoints, max_dt, cfg.run.stepper);
    const CoefficientTable table =
        model.number_basis ? squeeze_coefficients_fixed(cfg.input.n, cfg.input.squeeze, model.n_cut)
                           : CoefficientTable{};
    if (model.number_basis) out.diagnostics["coefficient_deficit"] = table.deficit;
    json traces = json::array();
    for (const auto& cp : cps) {
        DensityOperator rho = model.number_basis ? convert_physical(cp.state, table) : physical_state(model, cp.state);
        check_state(rho, cp.t);
        traces.push_back(trace(rho).real());
        out.checkpoints.push_back({cp.t, std::move(rho), std::nullopt, std::nullopt});
    }
    out.diagnostics["traces"] = traces;
    return out;
}

StateArtifact run_analytic_route(const RunConfig& cfg, const RunContext& ctx, CountDistribution* distribution) {
    TrajectoryModel model = build_trajectory_model(cfg);
    model.threads = ctx.threads;
    StateArtifact out = new_artifact(cfg, "analytic");
    json deficits = json::array();
    for (double t : cfg.run.checkpoints) {
        say(ctx, "decomposing sigma at t = " + sci(t));
        AprioriDecomposition dec = apriori_decomposition(model, t, cfg.run.s_max);
        check_state(dec.sigma, t);
        deficits.push_back(dec.counts.deficit);
        out.checkpoints.push_back({t, dec.sigma, std::nullopt, std::nullopt});
        out.counts = dec.counts.P;
        if (distribution) *distribution = dec.counts;
    }
    out.diagnostics["deficits"] = deficits;
    out.diagnostics["s_max"] = cfg.run.s_max;
    out.diagnostics["m_cut"] = model.coeffs.m_cut;
    return out;
}

EnsembleResult run_ensemble(const RunConfig& cfg, const RunContext& ctx) {
    const bool replay = cfg.run.record.has_value();
    const bool collision = cfg.run.route == "collision";
    require(collision || cfg.run.route == "sme", "run.route: ensembles need the collision or sme route");
    const std::size_t count = replay ? 1 : static_cast<std::size_t>(cfg.run.trajectories);
    const std::uint64_t seed = cfg.run.seed.value_or(0);
    const std::vector<double>& checkpoints = cfg.run.checkpoints;

    std::optional<CollisionModel> coll;
    std::optional<HierarchyModel> hier;
    Envelope env;
    SmeOptions options = build_sme_options(cfg);
    EnsembleResult result;
    result.summary = new_artifact(cfg, cfg.run.route);
    if (!replay) result.summary.seed = seed;
    json& diag = result.summary.diagnostics;
    if (collision) {
        coll = build_collision(cfg);
    } else {
        if (cfg.run.number_basis) throw ValidationError("run.basis: the sme route needs the squeezed basis");
        hier = build_hierarchy(cfg);
        env = build_envelope(cfg);
        say(ctx, "checking hierarchy truncation at n_cut = " + std::to_string(hier->n_cut));
        diag["truncation_stress"] =
            check_truncation(*hier, env, cfg.input.T, cfg.discretization.max_dt, cfg.run.truncation_alarm);
        diag["n_cut"] = hier->n_cut;
    }

    std::vector<SampledTrajectory> runs(count);
    parallel_for(count, ctx.threads, [&](std::size_t i) {
        SampledTrajectory& run = runs[i];
        const std::uint64_t s = derive_seed(seed, i);
        run.record = {{"index", i}};
        if (!replay) run.record["seed"] = s;
        try {
            json cps = json::array();
            if (collision) {
                const TrajectoryRecord rec =
                    replay ? run_record(*coll, outcomes_from_counts(coll->grid, *cfg.run.record), checkpoints,
                                        cfg.run.first_order)
                           : run_trajectory(*coll, s, checkpoints);
                run.count_times = rec.count_times;
                for (const auto& c : rec.checkpoints) run.states.push_back(normalized(c.rho));
                run.record["logp"] = rec.logp;
                run.record["leakage"] = rec.leakage;
            } else {
                const SmeTrajectory tr = replay ? run_sme_record(*hier, env, cfg.input.T, options, *cfg.run.record, checkpoints)
                                                : run_sme_trajectory(*hier, env, cfg.input.T, options, s, checkpoints);
                run.count_times = tr.count_times;
                for (const auto& c : tr.checkpoints) run.states.push_back(normalized(physical_state(*hier, c.state)));
                run.record["max_kdt"] = tr.diagnostics.max_kdt;
                run.record["min_intensity"] = tr.diagnostics.min_intensity;
                run.record["coarse_steps"] = tr.diagnostics.coarse_steps;
            }
            for (std::size_t k = 0; k < checkpoints.size(); ++k)
                cps.push_back({{"t", checkpoints[k]}, {"rho", operator_json(run.states[k])}});
            run.record["count_times"] = run.count_times;
            run.record["checkpoints"] = std::move(cps);
            run.ok = true;
        } catch (const IntegrityError& e) {
            run.error = e.what();
            run.record["error"] = run.error;
        }
        if (ctx.log && (i + 1) % 1000 == 0) say(ctx, std::to_string(i + 1) + " trajectories");
    });

    std::vector<std::size_t> good;
    for (std::size_t i = 0; i < count; ++i) {
        if (runs[i].ok) {
            good.push_back(i);
        } else {
            result.failures.push_back({{"index", i}, {"seed", derive_seed(seed, i)}, {"error", runs[i].error}});
        }
        result.records.push_back(runs[i].record);
    }
    diag["trajectories"] = count;
    diag["integrity_failures"] = result.failures.size();
    if (good.empty()) return result;

    const double n = static_cast<double>(good.size());
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        std::vector<Operator> values, squares_re, squares_im;
        for (std::size_t i : good) {
            const Operator& rho = runs[i].states[k];
            values.push_back(rho);
            squares_re.push_back(rho.real().array().square().matrix().cast<cplx>());
            squares_im.push_back(rho.imag().array().square().matrix().cast<cplx>());
        }
        const Operator mean = pairwise_sum(values) / n;
        StateCheckpoint cp{checkpoints[k], mean, std::nullopt, std::nullopt};
        if (good.size() > 1) {
            const Eigen::MatrixXd var_re =
                ((pairwise_sum(squares_re).real() / n).array() - mean.real().array().square()).max(0.0).matrix() * (n / (n - 1));
            const Eigen::MatrixXd var_im =
                ((pairwise_sum(squares_im).real() / n).array() - mean.imag().array().square()).max(0.0).matrix() * (n / (n - 1));
            cp.se_re = (var_re / n).array().sqrt().matrix();
            cp.se_im = (var_im / n).array().sqrt().matrix();
        }
        result.summary.checkpoints.push_back(std::move(cp));
    }
    std::vector<double> hist(cfg.run.count_max + 1, 0.0);
    for (std::size_t i : good)
        hist[std::min<std::size_t>(runs[i].count_times.size(), cfg.run.count_max)] += 1.0;
    for (double& h : hist) h /= n;
    result.summary.counts = hist;
    for (double p : hist) result.summary.counts_se.push_back(std::sqrt(p * (1.0 - p) / n));
    return result;
}

TransferResult run_transfer_route(const RunConfig& cfg, const RunContext& ctx) {
    const CavityModel model = build_cavity(cfg);
    const CoefficientTable coeffs = build_coefficients(cfg);
    ScanSpec spec;
    spec.deltas = cfg.transfer.deltas;
    spec.profile = cfg.transfer.profile;
    spec.profile_params = cfg.transfer.profile_params;
    spec.t0 = cfg.input.t0;
    spec.t = cfg.transfer.t.value_or(cfg.input.T);
    say(ctx, "scanning " + std::to_string(spec.deltas.size()) + " detunings");
    TransferResult out;
    out.rows = transfer_scan(model, coeffs, spec, ctx.threads);
    const ScanRow& best = out.rows[scan_argmax(out.rows)];
    out.summary = {{"kind", "transfer"},
                   {"config_hash", cfg.hash()},
                   {"version", code_version()},
                   {"t0", spec.t0},
                   {"t", spec.t},
                   {"P_max", best.P_max},
                   {"argmax", {{"delta", best.delta}, {"params", best.params}, {"P", best.P}}},
                   {"coefficient_deficit", coeffs.deficit}};
    return out;
}

void write_count_csv(std::ostream& out, const CountDistribution& dist, const std::string& header) {
    out << "# " << header << '\n' << "s,P,deficit\n";
    char buf[96];
    for (std::size_t s = 0; s < dist.P.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", s, dist.P[s], dist.deficit);
        out << buf;
    }
}

CompareReport compare_artifacts(const StateArtifact& a, const StateArtifact& b, const CompareTolerance& tol) {
    if (a.checkpoints.size() != b.checkpoints.size())
        throw ValidationError("compare: checkpoint grids differ (" + std::to_string(a.checkpoints.size()) + " vs " +
                              std::to_string(b.checkpoints.size()) + " checkpoints)");
    CompareReport out;
    json rows = json::array();
    for (std::size_t k = 0; k < a.checkpoints.size(); ++k) {
        const StateCheckpoint& ca = a.checkpoints[k];
        const StateCheckpoint& cb = b.checkpoints[k];
        if (std::abs(ca.t - cb.t) > 1e-9 * std::max(1.0, std::abs(ca.t)))
            throw ValidationError("compare: checkpoint grids differ at index " + std::to_string(k));
        if (ca.rho.rows() != cb.rho.rows() || ca.rho.cols() != cb.rho.cols())
            throw ValidationError("compare: state dimensions differ at t = " + sci(ca.t));
        const Operator diff = ca.rho - cb.rho;
        const double tn = trace_norm(diff);
        json row = {{"t", ca.t}, {"trace_norm", tn}, {"max_abs", diff.cwiseAbs().maxCoeff()}};
        bool ok = tol.trace_norm < 0.0 || tn <= tol.trace_norm;
        const bool have_se = (ca.se_re && ca.se_im) || (cb.se_re && cb.se_im);
        if (have_se) {
            const Index d = diff.rows();
            const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(d, d);
            const Eigen::MatrixXd vre = ca.se_re.value_or(zero).array().square() + cb.se_re.value_or(zero).array().square();
            const Eigen::MatrixXd vim = ca.se_im.value_or(zero).array().square() + cb.se_im.value_or(zero).array().square();
            double worst = 0.0;
            auto score = [&](double delta, double var) {
                if (var > 0.0) return std::abs(delta) / std::sqrt(var);
                return std::abs(delta) > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0;
            };
            for (Index i = 0; i < d; ++i)
                for (Index j = 0; j < d; ++j)
                    worst = std::max({worst, score(diff(i, j).real(), vre(i, j)), score(diff(i, j).imag(), vim(i, j))});
            row["max_sigma"] = worst;
            if (tol.sigmas >= 0.0) ok = ok && worst <= tol.sigmas;
        }
        row["pass"] = ok;
        out.pass = out.pass && ok;
        rows.push_back(std::move(row));
    }
    json report = {{"kind", "comparison"},
                   {"a", {{"route", a.route}, {"config_hash", a.config_hash}}},
                   {"b", {{"route", b.route}, {"config_hash", b.config_hash}}},
                   {"version", code_version()},
                   {"checkpoints", rows},
                   {"tolerance", {{"trace_norm", tol.trace_norm}, {"sigmas", tol.sigmas}, {"counts", tol.counts}}}};
    const std::size_t ns = std::min(a.counts.size(), b.counts.size());
    if (ns > 0) {
        double worst = 0.0;
        for (std::size_t s = 0; s < ns; ++s) worst = std::max(worst, std::abs(a.counts[s] - b.counts[s]));
        bool ok = tol.counts < 0.0 || worst <= tol.counts;
        report["counts"] = {{"compared", ns}, {"max_abs", worst}, {"pass", ok}};
        out.pass = out.pass && ok;
    }
    report["pass"] = out.pass;
    out.report = std::move(report);
    return out;
}

}  // namespace sqz
