#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "translab/checkpoint.hpp"
#include "translab/config.hpp"
#include "translab/errors.hpp"
#include "translab/nn.hpp"
#include "translab/record.hpp"
#include "translab/rng.hpp"

using namespace translab;
using nlohmann::json;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

json minimal_config() {
    return json{{"dataset", {{"kind", "blobs"}, {"classes", 3}, {"n_per_class", 20}}}};
}

}  // namespace

TEST_CASE("checkpoints round-trip bit-exactly") {
    Rng init(1);
    TransitionNetwork trans(3, {7}, 4, init);
    // values with awkward binary expansions
    trans.params().for_each([&](const std::string&, Tensor& t, std::vector<double>&) {
        Rng r(init.next_u64());
        for (double& v : t.values_mut()) v = r.uniform(-3.0, 3.0) / 3.0;
    });
    auto path = temp_file("translab_ckpt.json");
    save_checkpoint(path.string(), trans.params(), 12345);

    Rng init2(2);
    TransitionNetwork loaded(3, {7}, 4, init2);
    CheckpointInfo info = load_checkpoint(path.string(), loaded.params());
    CHECK(info.seed == 12345);
    for (const std::string& name : trans.params().names())
        CHECK(trans.params().at(name).values() == loaded.params().at(name).values());
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint loading validates names and shapes") {
    Rng init(3);
    TargetClassifier small(2, {4}, 3, init);
    TargetClassifier wide(2, {8}, 3, init);
    auto path = temp_file("translab_ckpt2.json");
    save_checkpoint(path.string(), small.params(), 1);
    CHECK_THROWS_AS(load_checkpoint(path.string(), wide.params()), config_error);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.json", small.params()), state_error);
    std::filesystem::remove(path);
}

TEST_CASE("config parsing: missing dataset block names the key") {
    CHECK_THROWS_WITH_AS(parse_run_config(json::object()),
                         "config: missing required block \"dataset\"", config_error);
}

TEST_CASE("config parsing: unknown keys are rejected with their path") {
    json doc = minimal_config();
    doc["dataset"]["spraed"] = 0.1;
    CHECK_THROWS_WITH_AS(parse_run_config(doc),
                         "config: unknown key \"dataset.spraed\"", config_error);
}

TEST_CASE("config parsing fills paper-convention defaults") {
    RunConfig cfg = parse_run_config(minimal_config());
    CHECK(cfg.train.epochs == 60);
    CHECK(cfg.train.lr == 0.1);
    CHECK(cfg.train.momentum == 0.9);
    CHECK(cfg.train.weight_decay == 2e-4);
    CHECK(cfg.train.lr_drop_fracs == std::vector<double>{0.75, 0.9});
    CHECK(cfg.train.inner_attack.steps == 10);
    CHECK(cfg.train.inner_attack.step_size == doctest::Approx(0.1 / 4.0));
    CHECK(cfg.train.inner_attack.random_start);
    CHECK(cfg.model.target_hidden == std::vector<std::size_t>{64, 64});
    // eval list always carries the unperturbed row first
    REQUIRE_FALSE(cfg.eval_attacks.empty());
    CHECK(cfg.eval_attacks[0].none);
}

TEST_CASE("resolved config is total: reparsing yields identical resolution and hash") {
    json doc = minimal_config();
    doc["train"] = {{"regime", "joint"}, {"epochs", 3}};
    doc["eval"] = {{"attacks", json::array({json{{"name", "pgd40"}, {"epsilon", 0.1}}})}};
    RunConfig cfg = parse_run_config(doc);
    json resolved = resolved_config_json(cfg);
    RunConfig cfg2 = parse_run_config(resolved);
    json resolved2 = resolved_config_json(cfg2);
    CHECK(resolved == resolved2);
    CHECK(config_hash(resolved) == config_hash(resolved2));

    json other = resolved;
    other["seed"] = 99;
    CHECK(config_hash(other) != config_hash(resolved));
}

TEST_CASE("regime defaults: general regimes get target-only training attacks") {
    json doc = minimal_config();
    doc["train"] = {{"regime", "frozen_target"}};
    RunConfig cfg = parse_run_config(doc);
    CHECK(cfg.train.inner_attack.objective == AttackObjective::TargetOnly);

    json doc2 = minimal_config();
    doc2["train"] = {{"regime", "transition_only"}};
    CHECK(parse_run_config(doc2).train.inner_attack.objective == AttackObjective::Combined);

    json doc3 = minimal_config();
    doc3["train"] = {{"regime", "fine_tune"}};
    CHECK_THROWS_AS(parse_run_config(doc3), config_error);
}

TEST_CASE("metrics writer appends then finalizes atomically") {
    auto path = temp_file("translab_metrics.csv");
    std::filesystem::remove(path);
    {
        MetricsWriter w(path.string(), {"a", "b"});
        w.append({"1", "2"});
        CHECK(std::filesystem::exists(path.string() + ".partial"));
        CHECK_FALSE(std::filesystem::exists(path));
        w.append({"3", "4"});
        CHECK_THROWS_AS(w.append({"only_one"}), usage_error);
        w.finalize();
    }
    CHECK(std::filesystem::exists(path));
    CHECK_FALSE(std::filesystem::exists(path.string() + ".partial"));
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "a,b");
    std::getline(in, line);
    CHECK(line == "1,2");
    std::filesystem::remove(path);
}

TEST_CASE("doubles print round-trippably and deterministically") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, 0.0}) {
        const std::string s = fmt_double(v);
        CHECK(std::stod(s) == v);
        CHECK(fmt_double(v) == s);
    }
}

TEST_CASE("seed fanout: streams are independent") {
    SeedFanout a = SeedFanout::from(1);
    SeedFanout b = SeedFanout::from(2);
    CHECK(a.data != a.init);
    CHECK(a.data != a.attack);
    CHECK(a.init != a.attack);
    CHECK(a.data != b.data);
    // same run seed reproduces the fanout
    SeedFanout c = SeedFanout::from(1);
    CHECK(a.data == c.data);
    CHECK(a.init == c.init);
    CHECK(a.attack == c.attack);
    CHECK(a.eval == c.eval);
}

TEST_CASE("dataset build dispatches on kind") {
    DatasetConfig blobs;
    blobs.kind = "blobs";
    blobs.classes = 3;
    blobs.n_per_class = 10;
    CHECK(build_dataset(blobs, 1).train.classes == 3);

    DatasetConfig rings;
    rings.kind = "rings";
    rings.n_per_class = 10;
    CHECK(build_dataset(rings, 1).train.classes == 2);
}
