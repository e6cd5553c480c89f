// Experiment harness: train / eval / detect / transfer / masking subcommands
// over the transition-defense library.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "translab/checkpoint.hpp"
#include "translab/config.hpp"
#include "translab/errors.hpp"
#include "translab/record.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace translab;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    std::string checkpoint_dir;  // eval-family: directory of a finished train run
    std::string target_b_dir;    // transfer: run directory of the second target
};

std::string default_out_root() {
    if (const char* env = std::getenv("TRANSLAB_OUT")) return env;
    return "runs";
}

struct LoadedRun {
    RunConfig cfg;
    json resolved;
    std::string hash;
    DataPair data;
    SeedFanout seeds{};
};

LoadedRun prepare(const CommonArgs& args) {
    LoadedRun run;
    run.cfg = load_run_config(args.config_path);
    if (args.seed_override) {
        run.cfg.seed = *args.seed_override;
        run.cfg.train.seed = *args.seed_override;
    }
    run.resolved = resolved_config_json(run.cfg);
    run.hash = config_hash(run.resolved);
    run.seeds = SeedFanout::from(run.cfg.seed);
    run.data = build_dataset(run.cfg.dataset, run.seeds.data);
    for (auto& na : run.cfg.eval_attacks)
        if (!na.none && !na.cfg.target_matrix_path.empty())
            na.cfg.target_matrix =
                load_target_matrix(na.cfg.target_matrix_path, run.cfg.dataset.classes);
    if (!run.cfg.train.inner_attack.target_matrix_path.empty())
        run.cfg.train.inner_attack.target_matrix = load_target_matrix(
            run.cfg.train.inner_attack.target_matrix_path, run.cfg.dataset.classes);
    if (!run.cfg.detect_attack.cfg.target_matrix_path.empty())
        run.cfg.detect_attack.cfg.target_matrix = load_target_matrix(
            run.cfg.detect_attack.cfg.target_matrix_path, run.cfg.dataset.classes);
    return run;
}

fs::path resolve_out_dir(const CommonArgs& args, const LoadedRun& run,
                         const std::string& subcommand) {
    fs::path dir = args.out_dir.empty()
                       ? fs::path(default_out_root()) /
                             (subcommand + "-" + run.hash + "-s" + std::to_string(run.cfg.seed))
                       : fs::path(args.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_resolved_config(const fs::path& dir, const LoadedRun& run) {
    std::ofstream out(dir / "resolved_config.json");
    out << run.resolved.dump(1) << "\n";
}

TargetClassifier make_target(const LoadedRun& run) {
    Rng init(derive_seed(run.seeds.init, 1));
    return TargetClassifier(run.data.train.dim, run.cfg.model.target_hidden,
                            run.data.train.classes, init);
}

TransitionNetwork make_transition(const LoadedRun& run) {
    Rng init(derive_seed(run.seeds.init, 2));
    return TransitionNetwork(run.data.train.dim, run.cfg.model.transition_hidden,
                             run.data.train.classes, init);
}

struct DefensePair {
    TargetClassifier target;
    TransitionNetwork trans;
};

DefensePair load_defense(const LoadedRun& run, const std::string& dir) {
    DefensePair pair{make_target(run), make_transition(run)};
    const fs::path base(dir);
    load_checkpoint((base / "target.ckpt").string(), pair.target.params());
    const fs::path trans_path = base / "transition.ckpt";
    if (!fs::exists(trans_path))
        throw config_error("checkpoint directory '" + dir + "' has no transition.ckpt");
    load_checkpoint(trans_path.string(), pair.trans.params());
    return pair;
}

std::vector<AccuracyRow> run_eval_table(const LoadedRun& run, const TargetClassifier& target,
                                        const TransitionNetwork* trans) {
    std::vector<AccuracyRow> rows;
    std::size_t idx = 0;
    for (const auto& na : run.cfg.eval_attacks) {
        AccuracyRow row;
        row.attack_name = na.name;
        Tensor x = run.data.test.all_rows_tensor();
        if (!na.none) {
            // same stream convention as transfer_evaluate, so self-transfer
            // reproduces these numbers exactly
            Rng rng(derive_seed(run.seeds.eval, 100 + idx));
            const TransitionNetwork* craft =
                (trans != nullptr && na.cfg.objective != AttackObjective::TargetOnly) ? trans
                                                                                      : nullptr;
            x = pgd(x, run.data.test.labels, na.cfg, target, craft, rng);
        }
        const std::size_t c = target.classes();
        std::vector<int> pred_target = target.predict(x);
        std::vector<int> pred_combined = pred_target;
        if (trans) {
            Tensor composed =
                posterior_compose(softmax(target.forward(x), 1), trans->forward(x));
            for (std::size_t i = 0; i < run.data.test.size(); ++i)
                pred_combined[i] = argmax_row(composed.values().data() + i * c, c);
        }
        std::size_t ok_c = 0, ok_t = 0;
        for (std::size_t i = 0; i < run.data.test.size(); ++i) {
            if (pred_combined[i] == run.data.test.labels[i]) ++ok_c;
            if (pred_target[i] == run.data.test.labels[i]) ++ok_t;
        }
        row.combined_accuracy = static_cast<double>(ok_c) / run.data.test.size();
        row.target_accuracy = static_cast<double>(ok_t) / run.data.test.size();
        rows.push_back(row);
        ++idx;
    }
    return rows;
}

void write_summary(const fs::path& dir, const LoadedRun& run,
                   const std::vector<AccuracyRow>& rows, const json& extra = json::object()) {
    json doc;
    doc["config_hash"] = run.hash;
    doc["seed"] = run.cfg.seed;
    json table = json::array();
    for (const auto& r : rows)
        table.push_back({{"attack", r.attack_name},
                         {"accuracy", r.combined_accuracy},
                         {"target_model_accuracy", r.target_accuracy}});
    doc["accuracy"] = std::move(table);
    for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
    std::ofstream out(dir / "summary.json");
    out << doc.dump(1) << "\n";
}

void write_run_log(const fs::path& dir, double seconds) {
    std::ofstream out(dir / "run.log");
    out << "duration_seconds=" << seconds << "\n";
}

int cmd_train(const CommonArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    LoadedRun run = prepare(args);
    const fs::path dir = resolve_out_dir(args, run, "train");
    if (fs::exists(dir / "metrics.csv"))
        throw config_error("output directory '" + dir.string() +
                           "' already holds a finished run; pick a fresh --out");
    write_resolved_config(dir, run);

    TargetClassifier target = make_target(run);
    TransitionNetwork trans = make_transition(run);

    const Regime regime = run.cfg.train.regime;
    const bool frozen_regime = regime == Regime::FrozenTarget ||
                               regime == Regime::TransitionOnly ||
                               regime == Regime::FineTune;
    if (!run.cfg.target_checkpoint.empty()) {
        load_checkpoint(run.cfg.target_checkpoint, target.params());
    } else if (frozen_regime) {
        const int pre = run.cfg.train.pretrain_epochs >= 0 ? run.cfg.train.pretrain_epochs
                                                           : run.cfg.train.epochs;
        std::cout << "pre-training target model naturally for " << pre << " epochs\n";
        train_natural(target, run.data, pre, run.cfg.train.lr, run.cfg.train.momentum,
                      run.cfg.train.weight_decay, run.cfg.train.lr_drop_fracs,
                      run.cfg.train.batch_size, derive_seed(run.cfg.seed, 77));
    }
    if (!run.cfg.transition_checkpoint.empty())
        load_checkpoint(run.cfg.transition_checkpoint, trans.params());

    TransitionNetwork* trans_ptr = regime == Regime::AtBaseline ? nullptr : &trans;
    RunRecord record;
    try {
        record = train(run.cfg.train, run.data, target, trans_ptr);
    } catch (const state_error& e) {
        // divergence: keep the partial record on disk and fail loudly
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    record.config_hash = run.hash;

    write_epoch_metrics((dir / "metrics.csv").string(), record.epochs);
    save_checkpoint((dir / "target.ckpt").string(), target.params(), run.cfg.seed);
    if (trans_ptr)
        save_checkpoint((dir / "transition.ckpt").string(), trans.params(), run.cfg.seed);

    std::vector<AccuracyRow> rows = run_eval_table(run, target, trans_ptr);
    write_accuracy_table((dir / "eval.csv").string(), rows);
    write_summary(dir, run, rows);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_run_log(dir, seconds);
    std::cout << "run " << run.hash << " finished in " << seconds << " s; artifacts in "
              << dir << "\n";
    for (const auto& r : rows)
        std::cout << "  " << r.attack_name << ": accuracy " << r.combined_accuracy
                  << " (target alone " << r.target_accuracy << ")\n";
    return 0;
}

int cmd_eval(const CommonArgs& args) {
    LoadedRun run = prepare(args);
    if (args.checkpoint_dir.empty())
        throw config_error("eval requires --checkpoint <train run directory>");
    const fs::path dir = resolve_out_dir(args, run, "eval");
    write_resolved_config(dir, run);
    DefensePair pair = load_defense(run, args.checkpoint_dir);
    std::vector<AccuracyRow> rows = run_eval_table(run, pair.target, &pair.trans);
    write_accuracy_table((dir / "eval.csv").string(), rows);
    write_summary(dir, run, rows);
    for (const auto& r : rows)
        std::cout << r.attack_name << ": accuracy " << r.combined_accuracy
                  << " (target alone " << r.target_accuracy << ")\n";
    return 0;
}

int cmd_detect(const CommonArgs& args) {
    LoadedRun run = prepare(args);
    if (args.checkpoint_dir.empty())
        throw config_error("detect requires --checkpoint <train run directory>");
    const fs::path dir = resolve_out_dir(args, run, "detect");
    write_resolved_config(dir, run);
    DefensePair pair = load_defense(run, args.checkpoint_dir);

    Tensor x_nat = run.data.test.all_rows_tensor();
    Rng rng(derive_seed(run.seeds.eval, 900));
    Tensor x_adv =
        pgd(x_nat, run.data.test.labels, run.cfg.detect_attack.cfg, pair.target, &pair.trans, rng);
    std::vector<DetectionScore> scores =
        detect_scores(x_nat, pair.target, pair.trans, false, 0);
    std::vector<DetectionScore> adv =
        detect_scores(x_adv, pair.target, pair.trans, true, run.data.test.size());
    scores.insert(scores.end(), adv.begin(), adv.end());
    const double score_auroc = auroc(scores);

    write_detection_table((dir / "detect.csv").string(), scores);
    json extra;
    extra["auroc"] = score_auroc;
    write_summary(dir, run, {}, extra);
    std::cout << "auroc " << score_auroc << " over " << scores.size() << " instances\n";
    return 0;
}

int cmd_transfer(const CommonArgs& args) {
    LoadedRun run = prepare(args);
    if (args.checkpoint_dir.empty() || args.target_b_dir.empty())
        throw config_error(
            "transfer requires --checkpoint <defense run> and --target-b <target run>");
    const fs::path dir = resolve_out_dir(args, run, "transfer");
    write_resolved_config(dir, run);
    DefensePair pair = load_defense(run, args.checkpoint_dir);
    TargetClassifier target_b = make_target(run);
    load_checkpoint((fs::path(args.target_b_dir) / "target.ckpt").string(), target_b.params());

    std::vector<AccuracyRow> rows = transfer_evaluate(
        pair.trans, target_b, run.data.test, run.cfg.eval_attacks, run.seeds.eval);
    write_accuracy_table((dir / "transfer.csv").string(), rows);
    write_summary(dir, run, rows);
    for (const auto& r : rows)
        std::cout << r.attack_name << ": accuracy " << r.combined_accuracy
                  << " (target alone " << r.target_accuracy << ")\n";
    return 0;
}

int cmd_masking(const CommonArgs& args) {
    LoadedRun run = prepare(args);
    if (args.checkpoint_dir.empty())
        throw config_error("masking requires --checkpoint <train run directory>");
    const fs::path dir = resolve_out_dir(args, run, "masking");
    write_resolved_config(dir, run);
    DefensePair pair = load_defense(run, args.checkpoint_dir);

    // surrogate for the black-box check: same architecture, different seed,
    // adversarially trained
    TargetClassifier surrogate = [&] {
        Rng init(derive_seed(run.seeds.init, 99));
        return TargetClassifier(run.data.train.dim, run.cfg.model.target_hidden,
                                run.data.train.classes, init);
    }();
    TrainConfig at_cfg = run.cfg.train;
    at_cfg.regime = Regime::AtBaseline;
    at_cfg.seed = derive_seed(run.cfg.seed, 98);
    at_cfg.inner_attack.objective = AttackObjective::TargetOnly;
    std::cout << "training surrogate (adversarial baseline) for " << at_cfg.epochs
              << " epochs\n";
    train(at_cfg, run.data, surrogate, nullptr);

    std::vector<MaskingCheck> checks =
        masking_battery(pair.target, pair.trans, surrogate, run.data.test,
                        run.cfg.masking_base_eps, run.seeds.eval, run.cfg.masking);
    write_masking_table((dir / "masking.csv").string(), checks);
    json extra;
    for (const auto& c : checks) extra["checks"][c.name] = c.pass;
    write_summary(dir, run, {}, extra);
    for (const auto& c : checks)
        std::cout << c.name << ": " << (c.pass ? "pass" : "fail") << " (" << c.detail << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial-robustness laboratory around instance-dependent "
                 "label-transition matrices"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub, bool eval_family) {
        sub->add_option("--config", args.config_path, "run config JSON")->required();
        sub->add_option("--out", args.out_dir, "output directory (default: $TRANSLAB_OUT)");
        sub->add_option("--seed", args.seed_override, "override the config seed");
        if (eval_family)
            sub->add_option("--checkpoint", args.checkpoint_dir,
                            "directory of a finished train run");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a defense per the config");
    add_common(train_cmd, false);
    CLI::App* eval_cmd = app.add_subcommand("eval", "accuracy table under the eval attacks");
    add_common(eval_cmd, true);
    CLI::App* detect_cmd =
        app.add_subcommand("detect", "adversarial-instance detection report");
    add_common(detect_cmd, true);
    CLI::App* transfer_cmd =
        app.add_subcommand("transfer", "evaluate the transition net on another target");
    add_common(transfer_cmd, true);
    transfer_cmd->add_option("--target-b", args.target_b_dir,
                             "run directory of the substitute target");
    CLI::App* masking_cmd =
        app.add_subcommand("masking", "gradient-masking check battery");
    add_common(masking_cmd, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(args);
        if (eval_cmd->parsed()) return cmd_eval(args);
        if (detect_cmd->parsed()) return cmd_detect(args);
        if (transfer_cmd->parsed()) return cmd_transfer(args);
        if (masking_cmd->parsed()) return cmd_masking(args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
