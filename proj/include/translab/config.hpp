#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "translab/attack.hpp"
#include "translab/dataset.hpp"
#include "translab/detect.hpp"
#include "translab/train.hpp"

namespace translab {

struct DatasetConfig {
    std::string kind = "blobs";  // blobs | rings | table
    std::size_t classes = 4;
    std::size_t dim = 2;
    std::size_t n_per_class = 500;
    double spread = 0.03;  // blobs
    double noise = 0.02;   // rings
    std::string train_path, test_path, label_column;  // table
};

struct ModelConfig {
    std::vector<std::size_t> target_hidden{64, 64};
    std::vector<std::size_t> transition_hidden{64, 64};
};

struct RunConfig {
    DatasetConfig dataset;
    ModelConfig model;
    TrainConfig train;
    std::vector<NamedAttack> eval_attacks;  // always starts with "none"
    NamedAttack detect_attack;
    double masking_base_eps = 0.1;
    MaskingOptions masking;
    std::uint64_t seed = 1;
    std::string target_checkpoint;      // warm start / frozen target
    std::string transition_checkpoint;  // warm start (fine_tune)
};

/// Parses a run config with defaults expanded; unknown or missing required
/// keys raise config_error naming the key.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

/// Fully resolved config document (every default expanded); parsing it again
/// yields the same RunConfig.
nlohmann::json resolved_config_json(const RunConfig& cfg);

/// FNV-1a over the canonical resolved dump.
std::string config_hash(const nlohmann::json& resolved);

DataPair build_dataset(const DatasetConfig& cfg, std::uint64_t data_seed);

}  // namespace translab
