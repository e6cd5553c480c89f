#pragma once

#include <cstdint>
#include <string>

#include "translab/params.hpp"

namespace translab {

inline constexpr int kCheckpointFormatVersion = 1;

/// Writes a self-describing JSON document: format_version, seed, and a map
/// from parameter name to {shape, row-major values}. Values round-trip
/// bit-exactly.
void save_checkpoint(const std::string& path, const ParameterSet& params,
                     std::uint64_t seed);

struct CheckpointInfo {
    std::uint64_t seed = 0;
};

/// Loads values into an already constructed parameter set; names and shapes
/// must match exactly.
CheckpointInfo load_checkpoint(const std::string& path, ParameterSet& params);

}  // namespace translab
