#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "sqz/config.hpp"
#include "sqz/errors.hpp"
#include "sqz/runner.hpp"

using namespace sqz;
using nlohmann::json;

namespace {

json base_doc() {
    return json::parse(R"({
      "system": {"kind": "two_level", "gamma": 1.0},
      "input": {"n": 0, "r": 0.3, "T": 4.0,
                "profile": {"name": "gaussian", "params": {"center": 2.0, "sigma": 0.5}}},
      "discretization": {"dt": 0.02, "M": 100},
      "run": {"route": "master", "checkpoints": [2.0, 4.0]}
    })");
}

std::string validation_message(const json& doc) {
    try {
        parse_config(doc);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& text, const std::string& part) { return text.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("validation errors name the field") {
    json doc = base_doc();
    doc["system"]["gamma"] = -1.0;
    CHECK(contains(validation_message(doc), "system.gamma"));

    doc = base_doc();
    doc["input"]["profile"]["params"]["sigma"] = "wide";
    CHECK(contains(validation_message(doc), "input.profile.params.sigma"));

    doc = base_doc();
    doc["run"]["checkpoints"] = {3.0, 2.0};
    CHECK(contains(validation_message(doc), "run.checkpoints"));

    doc = base_doc();
    doc["run"]["route"] = "sme";
    CHECK(contains(validation_message(doc), "run.seed"));

    doc = base_doc();
    doc["run"]["route"] = "transfer";
    doc["system"] = {{"kind", "cavity"}, {"gamma", 0.0}, {"dim", 6}};
    CHECK(contains(validation_message(doc), "system.gamma"));
}

TEST_CASE("unknown fields are rejected") {
    json doc = base_doc();
    doc["run"]["trajectory"] = 10;
    CHECK(contains(validation_message(doc), "run.trajectory"));
    doc = base_doc();
    doc["extra"] = 1;
    CHECK(contains(validation_message(doc), "extra"));
}

TEST_CASE("config hash follows content, not key order") {
    const RunConfig a = parse_config(base_doc());
    const RunConfig b = parse_config(json::parse(base_doc().dump()));
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    json doc = base_doc();
    doc["input"]["r"] = 0.31;
    CHECK(parse_config(doc).hash() != a.hash());
}

TEST_CASE("ensembles are reproducible and independent of the thread count") {
    json doc = base_doc();
    doc["run"]["route"] = "sme";
    doc["run"]["seed"] = 42;
    doc["run"]["trajectories"] = 24;
    const RunConfig cfg = parse_config(doc);
    RunContext one, four;
    four.threads = 4;
    const EnsembleResult a = run_ensemble(cfg, one);
    const EnsembleResult b = run_ensemble(cfg, four);
    REQUIRE(a.records.size() == 24);
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i] == b.records[i]);
    CHECK(to_json(a.summary) == to_json(b.summary));

    doc["run"]["seed"] = 43;
    const EnsembleResult c = run_ensemble(parse_config(doc), one);
    CHECK(to_json(c.summary) != to_json(a.summary));
}

TEST_CASE("artifacts round-trip and compare") {
    const RunConfig cfg = parse_config(base_doc());
    const StateArtifact art = run_master_route(cfg, RunContext{});
    const StateArtifact back = state_artifact_from_json(json::parse(to_json(art).dump()));
    CHECK(back.config_hash == cfg.hash());
    CHECK(back.version == code_version());
    REQUIRE(back.checkpoints.size() == 2);

    const CompareReport same = compare_artifacts(art, back, {1e-12, -1.0, -1.0});
    CHECK(same.pass);
    CHECK(same.report["checkpoints"][0]["trace_norm"].get<double>() < 1e-15);

    StateArtifact shifted = back;
    shifted.checkpoints[1].t = 3.0;
    CHECK_THROWS_AS(compare_artifacts(art, shifted, {}), ValidationError);
    shifted = back;
    shifted.checkpoints.pop_back();
    CHECK_THROWS_AS(compare_artifacts(art, shifted, {}), ValidationError);

    StateArtifact perturbed = back;
    perturbed.checkpoints[0].rho(0, 0) += 1e-3;
    perturbed.checkpoints[0].rho(1, 1) -= 1e-3;
    CHECK_FALSE(compare_artifacts(art, perturbed, {1e-4, -1.0, -1.0}).pass);
}

TEST_CASE("without coupling the master route keeps a unit-trace state") {
    json doc = base_doc();
    doc["system"]["gamma"] = 0.0;
    doc["input"]["n"] = 1;
    const StateArtifact art = run_master_route(parse_config(doc), RunContext{});
    for (const auto& cp : art.checkpoints) {
        CHECK(std::abs(trace(cp.rho).real() - 1.0) < 1e-12);
        CHECK(std::abs(cp.rho(0, 0).real() - 1.0) < 1e-12);
    }
}

TEST_CASE("missing files are I/O errors, malformed JSON is a validation error") {
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
    const auto path = std::filesystem::temp_directory_path() / "sqz_malformed_config.json";
    std::ofstream(path) << "{\"system\": ";
    CHECK_THROWS_AS(load_config(path.string()), ValidationError);
    std::filesystem::remove(path);
}
