#include "translab/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "translab/errors.hpp"

namespace translab {

using nlohmann::json;

namespace {

void check_keys(const json& block, const std::string& prefix,
                const std::set<std::string>& allowed) {
    if (!block.is_object())
        throw config_error("config: \"" + prefix + "\" must be an object");
    for (auto it = block.begin(); it != block.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("config: unknown key \"" + prefix + "." + it.key() + "\"");
}

template <class T>
T get_or(const json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error("config: bad value for \"" + key + "\"");
    }
}

AttackConfig parse_attack(const json& j, const std::string& prefix, int default_steps,
                          double default_epsilon) {
    check_keys(j, prefix,
               {"name", "norm", "epsilon", "steps", "step_size", "random_start", "mode",
                "objective", "target_label", "target_matrix_path", "dual_weights"});
    AttackConfig cfg;
    cfg.norm = norm_from_string(get_or<std::string>(j, "norm", "linf"));
    cfg.epsilon = get_or<double>(j, "epsilon", default_epsilon);
    cfg.steps = get_or<int>(j, "steps", default_steps);
    // paper-style defaults: eps/4 for the 10-step attack, 0.223*eps for the
    // 40-step one, both scaling with the budget
    const double default_step =
        cfg.steps <= 10 ? cfg.epsilon / 4.0 : 0.223 * cfg.epsilon;
    cfg.step_size = get_or<double>(j, "step_size", default_step);
    cfg.random_start = get_or<bool>(j, "random_start", true);
    cfg.mode = attack_mode_from_string(get_or<std::string>(j, "mode", "nontarget"));
    cfg.objective =
        attack_objective_from_string(get_or<std::string>(j, "objective", "combined"));
    cfg.target_label = get_or<int>(j, "target_label", -1);
    cfg.target_matrix_path = get_or<std::string>(j, "target_matrix_path", "");
    if (j.contains("dual_weights")) {
        const auto w = j.at("dual_weights").get<std::vector<double>>();
        if (w.size() != 2)
            throw config_error("config: \"" + prefix + ".dual_weights\" needs 2 entries");
        cfg.dual_weight_combined = w[0];
        cfg.dual_weight_target = w[1];
    }
    return cfg;
}

json attack_json(const AttackConfig& cfg, const std::string& name) {
    json j;
    if (!name.empty()) j["name"] = name;
    j["norm"] = to_string(cfg.norm);
    j["epsilon"] = cfg.epsilon;
    j["steps"] = cfg.steps;
    j["step_size"] = cfg.step_size;
    j["random_start"] = cfg.random_start;
    j["mode"] = to_string(cfg.mode);
    j["objective"] = to_string(cfg.objective);
    j["target_label"] = cfg.target_label;
    j["target_matrix_path"] = cfg.target_matrix_path;
    j["dual_weights"] = {cfg.dual_weight_combined, cfg.dual_weight_target};
    return j;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
    check_keys(doc, "config",
               {"seed", "dataset", "model", "train", "eval", "detect", "masking",
                "target_checkpoint", "transition_checkpoint"});
    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 1);

    if (!doc.contains("dataset"))
        throw config_error("config: missing required block \"dataset\"");
    {
        const json& d = doc.at("dataset");
        check_keys(d, "dataset",
                   {"kind", "classes", "dim", "n_per_class", "spread", "noise",
                    "train_path", "test_path", "label_column"});
        cfg.dataset.kind = get_or<std::string>(d, "kind", "blobs");
        cfg.dataset.classes = get_or<std::size_t>(d, "classes", 4);
        cfg.dataset.dim = get_or<std::size_t>(d, "dim", 2);
        cfg.dataset.n_per_class = get_or<std::size_t>(d, "n_per_class", 500);
        cfg.dataset.spread = get_or<double>(d, "spread", 0.03);
        cfg.dataset.noise = get_or<double>(d, "noise", 0.02);
        cfg.dataset.train_path = get_or<std::string>(d, "train_path", "");
        cfg.dataset.test_path = get_or<std::string>(d, "test_path", "");
        cfg.dataset.label_column = get_or<std::string>(d, "label_column", "label");
        if (cfg.dataset.kind != "blobs" && cfg.dataset.kind != "rings" &&
            cfg.dataset.kind != "table")
            throw config_error("config: unknown dataset.kind \"" + cfg.dataset.kind + "\"");
        if (cfg.dataset.kind == "table" &&
            (cfg.dataset.train_path.empty() || cfg.dataset.test_path.empty()))
            throw config_error(
                "config: dataset.kind \"table\" requires dataset.train_path and "
                "dataset.test_path");
        if (cfg.dataset.kind == "rings") cfg.dataset.classes = 2;
    }

    {
        const json m = doc.contains("model") ? doc.at("model") : json::object();
        check_keys(m, "model", {"target_hidden", "transition_hidden"});
        cfg.model.target_hidden =
            get_or<std::vector<std::size_t>>(m, "target_hidden", {64, 64});
        cfg.model.transition_hidden =
            get_or<std::vector<std::size_t>>(m, "transition_hidden", {64, 64});
    }

    {
        const json t = doc.contains("train") ? doc.at("train") : json::object();
        check_keys(t, "train",
                   {"regime", "epochs", "batch_size", "lr", "momentum", "weight_decay",
                    "lr_drop_fracs", "joint_flow", "include_failed", "pretrain_epochs",
                    "attack"});
        cfg.train.regime = regime_from_string(get_or<std::string>(t, "regime", "joint"));
        cfg.train.epochs = get_or<int>(t, "epochs", 60);
        cfg.train.batch_size = get_or<int>(t, "batch_size", 64);
        cfg.train.lr = get_or<double>(t, "lr", 0.1);
        cfg.train.momentum = get_or<double>(t, "momentum", 0.9);
        cfg.train.weight_decay = get_or<double>(t, "weight_decay", 2e-4);
        cfg.train.lr_drop_fracs =
            get_or<std::vector<double>>(t, "lr_drop_fracs", {0.75, 0.9});
        cfg.train.joint_flow = get_or<bool>(t, "joint_flow", false);
        cfg.train.include_failed = get_or<bool>(t, "include_failed", true);
        cfg.train.pretrain_epochs = get_or<int>(t, "pretrain_epochs", -1);
        cfg.train.seed = cfg.seed;
        const bool general_regime = cfg.train.regime == Regime::AtBaseline ||
                                    cfg.train.regime == Regime::FrozenTarget;
        json att = t.contains("attack") ? t.at("attack") : json::object();
        if (!att.contains("objective") && general_regime) att["objective"] = "target_only";
        cfg.train.inner_attack = parse_attack(att, "train.attack", 10, 0.1);
        cfg.train.validate();
    }

    {
        const json e = doc.contains("eval") ? doc.at("eval") : json::object();
        check_keys(e, "eval", {"attacks"});
        const bool has_transition = cfg.train.regime != Regime::AtBaseline;
        json attacks = e.contains("attacks") ? e.at("attacks") : json::array();
        if (!attacks.is_array()) throw config_error("config: \"eval.attacks\" must be a list");
        if (attacks.empty()) attacks.push_back(json{{"name", "none"}});
        bool has_none = false;
        for (const auto& a : attacks)
            if (get_or<std::string>(a, "name", "") == "none") has_none = true;
        if (!has_none) attacks.insert(attacks.begin(), json{{"name", "none"}});
        std::size_t idx = 0;
        for (const auto& a : attacks) {
            NamedAttack na;
            na.name = get_or<std::string>(a, "name", "attack" + std::to_string(idx));
            if (na.name == "none") {
                na.none = true;
            } else {
                na.cfg = parse_attack(a, "eval.attacks[" + std::to_string(idx) + "]", 40, 0.1);
                if (!has_transition) na.cfg.objective = AttackObjective::TargetOnly;
            }
            cfg.eval_attacks.push_back(std::move(na));
            ++idx;
        }
    }

    {
        const json d = doc.contains("detect") ? doc.at("detect") : json::object();
        check_keys(d, "detect", {"attack"});
        cfg.detect_attack.name = "detect";
        cfg.detect_attack.cfg = parse_attack(
            d.contains("attack") ? d.at("attack") : json::object(), "detect.attack", 40, 0.1);
    }

    {
        const json m = doc.contains("masking") ? doc.at("masking") : json::object();
        check_keys(m, "masking",
                   {"base_eps", "random_points", "random_samples", "step_ratio",
                    "unbounded_epsilon"});
        cfg.masking_base_eps = get_or<double>(m, "base_eps", 0.1);
        cfg.masking.random_points = get_or<std::size_t>(m, "random_points", 16);
        cfg.masking.random_samples = get_or<std::size_t>(m, "random_samples", 100000);
        cfg.masking.step_ratio = get_or<double>(m, "step_ratio", 0.223);
        cfg.masking.unbounded_epsilon = get_or<double>(m, "unbounded_epsilon", 1.0);
    }

    cfg.target_checkpoint = get_or<std::string>(doc, "target_checkpoint", "");
    cfg.transition_checkpoint = get_or<std::string>(doc, "transition_checkpoint", "");
    if (cfg.train.regime == Regime::FineTune && cfg.transition_checkpoint.empty())
        throw config_error(
            "config: regime \"fine_tune\" requires \"transition_checkpoint\"");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw config_error("config '" + path + "': " + e.what());
    }
    return parse_run_config(doc);
}

json resolved_config_json(const RunConfig& cfg) {
    json doc;
    doc["seed"] = cfg.seed;
    doc["dataset"] = {{"kind", cfg.dataset.kind},
                      {"classes", cfg.dataset.classes},
                      {"dim", cfg.dataset.dim},
                      {"n_per_class", cfg.dataset.n_per_class},
                      {"spread", cfg.dataset.spread},
                      {"noise", cfg.dataset.noise},
                      {"train_path", cfg.dataset.train_path},
                      {"test_path", cfg.dataset.test_path},
                      {"label_column", cfg.dataset.label_column}};
    doc["model"] = {{"target_hidden", cfg.model.target_hidden},
                    {"transition_hidden", cfg.model.transition_hidden}};
    json t;
    t["regime"] = to_string(cfg.train.regime);
    t["epochs"] = cfg.train.epochs;
    t["batch_size"] = cfg.train.batch_size;
    t["lr"] = cfg.train.lr;
    t["momentum"] = cfg.train.momentum;
    t["weight_decay"] = cfg.train.weight_decay;
    t["lr_drop_fracs"] = cfg.train.lr_drop_fracs;
    t["joint_flow"] = cfg.train.joint_flow;
    t["include_failed"] = cfg.train.include_failed;
    t["pretrain_epochs"] = cfg.train.pretrain_epochs;
    t["attack"] = attack_json(cfg.train.inner_attack, "");
    doc["train"] = std::move(t);
    json attacks = json::array();
    for (const auto& na : cfg.eval_attacks) {
        if (na.none) attacks.push_back(json{{"name", "none"}});
        else attacks.push_back(attack_json(na.cfg, na.name));
    }
    doc["eval"] = {{"attacks", std::move(attacks)}};
    doc["detect"] = {{"attack", attack_json(cfg.detect_attack.cfg, "")}};
    doc["masking"] = {{"base_eps", cfg.masking_base_eps},
                      {"random_points", cfg.masking.random_points},
                      {"random_samples", cfg.masking.random_samples},
                      {"step_ratio", cfg.masking.step_ratio},
                      {"unbounded_epsilon", cfg.masking.unbounded_epsilon}};
    doc["target_checkpoint"] = cfg.target_checkpoint;
    doc["transition_checkpoint"] = cfg.transition_checkpoint;
    return doc;
}

std::string config_hash(const json& resolved) {
    const std::string dump = resolved.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

DataPair build_dataset(const DatasetConfig& cfg, std::uint64_t data_seed) {
    if (cfg.kind == "blobs")
        return gen_blobs(cfg.classes, cfg.dim, cfg.n_per_class, cfg.spread, data_seed);
    if (cfg.kind == "rings") return gen_rings(2, cfg.n_per_class, cfg.noise, data_seed);
    DataPair out;
    TableLoad train = load_table(cfg.train_path, cfg.label_column);
    TableLoad test = load_table(cfg.test_path, cfg.label_column);
    out.train = std::move(train.data);
    out.test = std::move(test.data);
    out.train.split = Split::Train;
    out.test.split = Split::Test;
    if (out.train.classes != out.test.classes)
        throw config_error("dataset: train and test tables disagree on class count");
    if (out.train.dim != out.test.dim)
        throw config_error("dataset: train and test tables disagree on feature count");
    return out;
}

}  // namespace translab
