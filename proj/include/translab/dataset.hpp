#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "translab/tensor.hpp"

namespace translab {

enum class Split { Train, Test };

/// Feature rows in [0,1]^d with integer class labels.
struct Dataset {
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::vector<double> features;  // row-major n x dim
    std::vector<int> labels;
    Split split = Split::Train;

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t i) const { return features.data() + i * dim; }

    Tensor all_rows_tensor() const;
    Tensor rows_tensor(const std::vector<std::size_t>& indices) const;
    std::vector<int> labels_at(const std::vector<std::size_t>& indices) const;
};

struct DataPair {
    Dataset train;
    Dataset test;
};

/// C isotropic Gaussian clusters, centers equally spaced on the unit circle
/// in the first two feature dimensions (remaining dimensions are pure
/// noise), then min-max normalized into [0,1]^d with a single global scale
/// so the geometry is preserved. 80/20 stratified split, deterministic per
/// seed. Requires the adjacent-center distance to be at least 6 x spread.
DataPair gen_blobs(std::size_t classes, std::size_t dim, std::size_t n_per_class,
                   double spread, std::uint64_t seed);

/// Two concentric annuli (radii 0.5 and 1.0) with Gaussian radial noise,
/// normalized into [0,1]^2; not linearly separable by construction.
DataPair gen_rings(std::size_t classes, std::size_t n_per_class, double noise,
                   std::uint64_t seed);

struct TableLoad {
    Dataset data;
    std::vector<std::size_t> rejected_rows;  // 1-based data-row numbers with non-finite cells
};

/// Comma-separated numeric table with a header row; `label_column` names the
/// label. Features are min-max normalized per column into [0,1] (constant
/// columns map to zero). Rows containing non-finite values are dropped and
/// reported; structural problems (ragged rows, non-numeric cells, label
/// gaps) raise parse_error with a location.
TableLoad load_table(const std::string& path, const std::string& label_column);

void save_table(const Dataset& data, const std::string& path);

}  // namespace translab
