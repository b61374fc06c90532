#include "sqz/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sqz/errors.hpp"

#ifndef SQZ_VERSION
#define SQZ_VERSION "unversioned"
#endif

namespace sqz {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

// A JSON object plus its dotted path; rejects keys nobody asked about.
class Section {
public:
    Section(const json& doc, std::string path, std::set<std::string> allowed)
        : doc_(doc), path_(std::move(path)) {
        if (!doc_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
        for (const auto& [key, value] : doc_.items())
            if (!allowed.count(key)) fail(at(key), "unknown field");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return doc_.contains(key); }
    const json& raw(const std::string& key) const { return doc_.at(key); }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(at(key), "must be finite");
        return x;
    }

    int integer(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_number_integer()) fail(at(key), "expected an integer");
        return v.get<int>();
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_boolean()) fail(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback,
                     const std::set<std::string>& choices = {}) const {
        if (!has(key)) return fallback;
        const json& v = doc_.at(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        std::string s = v.get<std::string>();
        if (!choices.empty() && !choices.count(s)) {
            std::string list;
            for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
            fail(at(key), "must be one of " + list + " (got '" + s + "')");
        }
        return s;
    }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        if (!has(key)) return out;
        const json& v = doc_.at(key);
        if (!v.is_array()) fail(at(key), "expected an array of numbers");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

private:
    const json& doc_;
    std::string path_;
};

std::map<std::string, double> param_map(const json& v, const std::string& path) {
    if (!v.is_object()) fail(path, "expected an object of numbers");
    std::map<std::string, double> out;
    for (const auto& [key, value] : v.items()) {
        if (!value.is_number()) fail(path + "." + key, "expected a number");
        out[key] = value.get<double>();
    }
    return out;
}

void require_field(bool ok, const std::string& path, const std::string& what) {
    if (!ok) fail(path, what);
}

const json& child(const json& doc, const std::string& key) {
    static const json empty = json::object();
    return doc.contains(key) ? doc.at(key) : empty;
}

void require_times(const std::vector<double>& times, const std::string& path, double t0, double T) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        require_field(times[i] >= t0 - 1e-12 && times[i] <= T + 1e-12, p, "must lie in [input.t0, input.T]");
        if (i > 0) require_field(times[i] >= times[i - 1], p, "times must be ascending");
    }
}

}  // namespace

std::string RunConfig::hash() const {
    const std::string text = source.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string code_version() { return std::string("sqzsim ") + SQZ_VERSION; }

RunConfig parse_config(const json& doc) {
    RunConfig cfg;
    cfg.source = doc;
    const Section top(doc, "", {"system", "input", "discretization", "run", "transfer", "output"});

    {
        const Section s(child(doc, "system"), "system", {"kind", "gamma", "delta", "excited", "dim", "fock"});
        SystemSpec& sys = cfg.system;
        sys.kind = s.text("kind", sys.kind, {"two_level", "cavity"});
        sys.gamma = s.number("gamma", sys.gamma);
        require_field(sys.gamma >= 0.0, s.at("gamma"), "must be non-negative (got " + sci(sys.gamma) + ")");
        sys.delta = s.number("delta", sys.delta);
        sys.excited = s.boolean("excited", sys.excited);
        sys.dim = s.integer("dim", sys.dim);
        sys.fock = s.integer("fock", sys.fock);
        if (sys.kind == "cavity") {
            require_field(sys.dim >= 2, s.at("dim"), "must be at least 2");
            require_field(sys.fock >= 0 && sys.fock < sys.dim, s.at("fock"), "must lie in [0, dim)");
        } else {
            require_field(!s.has("dim") || sys.dim == 2, s.at("dim"), "a two-level system has dim 2");
            sys.dim = 2;
        }
    }
    {
        const Section s(child(doc, "input"), "input", {"n", "r", "phi", "t0", "T", "profile"});
        InputSpec& in = cfg.input;
        in.n = s.integer("n", in.n);
        require_field(in.n >= 0, s.at("n"), "must be non-negative");
        in.squeeze.r = s.number("r", 0.0);
        require_field(in.squeeze.r >= 0.0, s.at("r"), "must be non-negative");
        in.squeeze.phi = s.number("phi", 0.0);
        in.t0 = s.number("t0", in.t0);
        in.T = s.number("T", in.T);
        require_field(in.T > in.t0, s.at("T"), "must exceed input.t0");
        if (s.has("profile")) {
            const Section p(s.raw("profile"), s.at("profile"), {"name", "params"});
            in.profile.name = p.text("name", in.profile.name);
            require_field(ProfileRegistry::instance().contains(in.profile.name), p.at("name"),
                          "unknown profile '" + in.profile.name + "'");
            if (p.has("params")) in.profile.params = param_map(p.raw("params"), p.at("params"));
        }
    }
    {
        const Section s(child(doc, "discretization"), "discretization",
                        {"M", "dt", "max_dt", "n_cut", "m_cut", "ancilla_dim", "coefficient_target", "envelope"});
        DiscretizationSpec& d = cfg.discretization;
        d.M = s.integer("M", d.M);
        require_field(d.M >= 1, s.at("M"), "must be positive");
        d.dt = s.number("dt", d.dt);
        require_field(d.dt > 0.0, s.at("dt"), "must be positive");
        d.max_dt = s.number("max_dt", d.max_dt);
        require_field(d.max_dt > 0.0, s.at("max_dt"), "must be positive");
        d.n_cut = s.integer("n_cut", d.n_cut);
        require_field(d.n_cut < 0 || d.n_cut >= cfg.input.n, s.at("n_cut"), "must be at least input.n");
        d.m_cut = s.integer("m_cut", d.m_cut);
        require_field(d.m_cut >= 0, s.at("m_cut"), "must be non-negative");
        d.ancilla_dim = s.integer("ancilla_dim", d.ancilla_dim);
        require_field(d.ancilla_dim >= 2, s.at("ancilla_dim"), "must be at least 2");
        d.coefficient_target = s.number("coefficient_target", d.coefficient_target);
        require_field(d.coefficient_target > 0.0 && d.coefficient_target < 1.0, s.at("coefficient_target"),
                      "must lie in (0, 1)");
        d.envelope = s.text("envelope", d.envelope, {"smooth", "grid"});
    }
    {
        const Section s(child(doc, "run"), "run",
                        {"route", "trajectories", "seed", "checkpoints", "basis", "stepper", "drift", "s_max",
                         "count_max", "truncation_alarm", "first_order", "record"});
        RunSpec& r = cfg.run;
        r.route = s.text("route", r.route, {"collision", "sme", "master", "analytic", "transfer"});
        r.trajectories = s.integer("trajectories", r.trajectories);
        require_field(r.trajectories >= 1, s.at("trajectories"), "must be positive");
        if (s.has("seed")) {
            const json& v = s.raw("seed");
            require_field(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0),
                          s.at("seed"), "expected a non-negative integer");
            r.seed = v.get<std::uint64_t>();
        }
        r.checkpoints = s.numbers("checkpoints");
        require_times(r.checkpoints, s.at("checkpoints"), cfg.input.t0, cfg.input.T);
        if (r.checkpoints.empty()) r.checkpoints.push_back(cfg.input.T);
        r.number_basis = s.text("basis", "squeezed", {"squeezed", "number"}) == "number";
        r.stepper = s.text("stepper", "rk4", {"rk4", "euler"}) == "rk4" ? Stepper::rk4 : Stepper::euler;
        r.drift = s.text("drift", "rk4", {"rk4", "euler"}) == "rk4" ? DriftScheme::rk4 : DriftScheme::euler;
        r.s_max = s.integer("s_max", r.s_max);
        require_field(r.s_max >= 0 && r.s_max <= 4, s.at("s_max"), "must lie in 0..4");
        r.count_max = s.integer("count_max", r.count_max);
        require_field(r.count_max >= 1, s.at("count_max"), "must be positive");
        r.truncation_alarm = s.number("truncation_alarm", r.truncation_alarm);
        require_field(r.truncation_alarm > 0.0, s.at("truncation_alarm"), "must be positive");
        r.first_order = s.boolean("first_order", r.first_order);
        if (s.has("record")) {
            r.record = s.numbers("record");
            require_times(*r.record, s.at("record"), cfg.input.t0, cfg.input.T);
        }
    }
    {
        const Section s(child(doc, "transfer"), "transfer", {"deltas", "profile", "profile_params", "t"});
        TransferRunSpec& t = cfg.transfer;
        if (s.has("deltas")) {
            t.deltas = s.numbers("deltas");
            require_field(!t.deltas.empty(), s.at("deltas"), "must not be empty");
        }
        t.profile = s.text("profile", t.profile);
        require_field(ProfileRegistry::instance().contains(t.profile), s.at("profile"),
                      "unknown profile '" + t.profile + "'");
        if (s.has("profile_params")) {
            const json& v = s.raw("profile_params");
            require_field(v.is_array(), s.at("profile_params"), "expected an array of objects");
            for (std::size_t i = 0; i < v.size(); ++i)
                t.profile_params.push_back(param_map(v[i], s.at("profile_params") + "[" + std::to_string(i) + "]"));
        }
        if (s.has("t")) {
            t.t = s.number("t", 0.0);
            require_field(*t.t > cfg.input.t0, s.at("t"), "must exceed input.t0");
        }
    }
    {
        const Section s(child(doc, "output"), "output", {"dir", "prefix"});
        cfg.output.dir = s.text("dir", cfg.output.dir);
        require_field(!cfg.output.dir.empty(), s.at("dir"), "must not be empty");
        cfg.output.prefix = s.text("prefix", cfg.output.prefix);
    }

    const bool stochastic = cfg.run.route == "collision" || cfg.run.route == "sme";
    if (stochastic && !cfg.run.record)
        require_field(cfg.run.seed.has_value(), "run.seed", "required for stochastic routes");
    if (cfg.system.kind == "cavity" && cfg.run.route == "transfer")
        require_field(cfg.system.fock == 0, "system.fock", "the transfer route starts from an empty cavity");
    if (cfg.run.route == "transfer") require_field(cfg.system.kind == "cavity", "system.kind", "the transfer route needs a cavity");
    if (cfg.run.route == "transfer") require_field(cfg.system.gamma > 0.0, "system.gamma", "the transfer route needs gamma > 0");
    (void)top;
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
        throw ValidationError("config: malformed JSON at byte " + std::to_string(e.byte) + " in '" + path + "'");
    }
    return parse_config(doc);
}

OpenSystem build_system(const RunConfig& cfg) {
    const SystemSpec& s = cfg.system;
    if (s.kind == "cavity") return cavity(s.dim, s.gamma, s.delta, s.fock);
    return two_level(s.gamma, s.delta, s.excited);
}

PulseGrid build_grid(const RunConfig& cfg) {
    return discretize(cfg.input.profile, cfg.input.t0, cfg.input.T, cfg.discretization.M);
}

Envelope build_envelope(const RunConfig& cfg) {
    if (cfg.discretization.envelope == "grid") return Envelope::from_grid(build_grid(cfg));
    return Envelope::from_spec(cfg.input.profile, cfg.input.t0, cfg.input.T);
}

CoefficientTable build_coefficients(const RunConfig& cfg) {
    const auto& d = cfg.discretization;
    if (d.m_cut > 0) return squeeze_coefficients_fixed(cfg.input.n, cfg.input.squeeze, d.m_cut);
    return squeeze_coefficients(cfg.input.n, cfg.input.squeeze, 0, d.coefficient_target);
}

CollisionModel build_collision(const RunConfig& cfg) {
    CollisionModel model;
    model.system = build_system(cfg);
    model.grid = build_grid(cfg);
    model.coeffs = build_coefficients(cfg);
    model.ancilla_dim = cfg.discretization.ancilla_dim;
    model.validate();
    return model;
}

HierarchyModel build_hierarchy(const RunConfig& cfg) {
    const OpenSystem sys = build_system(cfg);
    if (cfg.run.number_basis) return number_hierarchy(sys, build_coefficients(cfg).m_cut);
    return squeezed_hierarchy(sys, cfg.input.n, cfg.input.squeeze, cfg.discretization.n_cut);
}

TrajectoryModel build_trajectory_model(const RunConfig& cfg) {
    TrajectoryModel model;
    model.system = build_system(cfg);
    model.env = build_envelope(cfg);
    model.coeffs = build_coefficients(cfg);
    model.max_dt = cfg.discretization.max_dt;
    model.validate();
    return model;
}

CavityModel build_cavity(const RunConfig& cfg) {
    CavityModel model;
    model.Delta = cfg.system.delta;
    model.Gamma = cfg.system.gamma;
    model.dim = cfg.system.dim;
    model.n = cfg.input.n;
    model.params = cfg.input.squeeze;
    model.validate();
    return model;
}

SmeOptions build_sme_options(const RunConfig& cfg) {
    SmeOptions options;
    options.dt = cfg.discretization.dt;
    options.drift = cfg.run.drift;
    return options;
}

}  // namespace sqz
