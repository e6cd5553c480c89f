#include "translab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "translab/errors.hpp"
#include "translab/rng.hpp"

namespace translab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Single global min-max over every entry; preserves shape, lands exactly in
// [0,1] (extremes are attained).
void normalize_global(std::vector<double>& features) {
    if (features.empty()) return;
    double lo = features[0], hi = features[0];
    for (double v : features) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    if (span <= 0.0) {
        std::fill(features.begin(), features.end(), 0.0);
        return;
    }
    for (double& v : features) v = (v - lo) / span;
}

// Stratified 80/20 split with a seeded shuffle inside each class.
DataPair stratified_split(std::size_t classes, std::size_t dim,
                          const std::vector<double>& features,
                          const std::vector<int>& labels, Rng& rng) {
    DataPair out;
    out.train.classes = out.test.classes = classes;
    out.train.dim = out.test.dim = dim;
    out.train.split = Split::Train;
    out.test.split = Split::Test;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == static_cast<int>(c)) idx.push_back(i);
        if (idx.size() < 2)
            throw config_error("dataset: class " + std::to_string(c) +
                               " has fewer than 2 instances, cannot split");
        rng.shuffle(idx);
        const std::size_t n_train = std::max<std::size_t>(1, (idx.size() * 8) / 10);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            Dataset& dst = r < n_train ? out.train : out.test;
            const double* src = features.data() + idx[r] * dim;
            dst.features.insert(dst.features.end(), src, src + dim);
            dst.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

}  // namespace

Tensor Dataset::all_rows_tensor() const {
    return Tensor::constant({size(), dim}, features);
}

Tensor Dataset::rows_tensor(const std::vector<std::size_t>& indices) const {
    std::vector<double> v;
    v.reserve(indices.size() * dim);
    for (std::size_t i : indices) {
        const double* r = row(i);
        v.insert(v.end(), r, r + dim);
    }
    return Tensor::constant({indices.size(), dim}, std::move(v));
}

std::vector<int> Dataset::labels_at(const std::vector<std::size_t>& indices) const {
    std::vector<int> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(labels[i]);
    return out;
}

DataPair gen_blobs(std::size_t classes, std::size_t dim, std::size_t n_per_class,
                   double spread, std::uint64_t seed) {
    if (classes < 2 || dim < 2)
        throw config_error("gen_blobs: need classes >= 2 and dim >= 2");
    if (spread < 0.0) throw config_error("gen_blobs: spread must be nonnegative");
    const double chord = 2.0 * std::sin(kTwoPi / 2.0 / static_cast<double>(classes));
    if (chord < 6.0 * spread)
        throw config_error("gen_blobs: adjacent centers " + std::to_string(chord) +
                           " apart on the unit circle, below 6 x spread = " +
                           std::to_string(6.0 * spread) +
                           "; reduce spread or class count");
    Rng rng(derive_seed(seed, 11));
    std::vector<double> features;
    features.reserve(classes * n_per_class * dim);
    std::vector<int> labels;
    labels.reserve(classes * n_per_class);
    for (std::size_t c = 0; c < classes; ++c) {
        const double angle = kTwoPi * static_cast<double>(c) / static_cast<double>(classes);
        const double cx = std::cos(angle), cy = std::sin(angle);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            for (std::size_t d = 0; d < dim; ++d) {
                double center = d == 0 ? cx : d == 1 ? cy : 0.0;
                features.push_back(center + spread * rng.normal());
            }
            labels.push_back(static_cast<int>(c));
        }
    }
    normalize_global(features);
    Rng split_rng(derive_seed(seed, 12));
    return stratified_split(classes, dim, features, labels, split_rng);
}

DataPair gen_rings(std::size_t classes, std::size_t n_per_class, double noise,
                   std::uint64_t seed) {
    if (classes != 2) throw config_error("gen_rings: exactly 2 classes supported");
    if (noise < 0.0) throw config_error("gen_rings: noise must be nonnegative");
    Rng rng(derive_seed(seed, 21));
    std::vector<double> features;
    features.reserve(2 * n_per_class * 2);
    std::vector<int> labels;
    labels.reserve(2 * n_per_class);
    const double radii[2] = {0.5, 1.0};
    for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const double a = rng.uniform(0.0, kTwoPi);
            const double r = radii[c] + noise * rng.normal();
            features.push_back(r * std::cos(a));
            features.push_back(r * std::sin(a));
            labels.push_back(c);
        }
    }
    normalize_global(features);
    Rng split_rng(derive_seed(seed, 22));
    return stratified_split(2, 2, features, labels, split_rng);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    if (cell.empty())
        throw parse_error("row " + std::to_string(row) + ", column '" + column +
                          "': empty cell");
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size())
        throw parse_error("row " + std::to_string(row) + ", column '" + column +
                          "': not numeric: '" + cell + "'");
    return v;
}

}  // namespace

TableLoad load_table(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open table file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw parse_error("'" + path + "': empty file");
    const std::vector<std::string> header = split_csv_line(line);
    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_idx = i;
    if (label_idx == header.size())
        throw parse_error("'" + path + "': label column '" + label_column +
                          "' not in header");
    const std::size_t dim = header.size() - 1;
    if (dim == 0) throw parse_error("'" + path + "': no feature columns");

    TableLoad out;
    out.data.dim = dim;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw parse_error("row " + std::to_string(row_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(cells.size()));
        std::vector<double> feats;
        feats.reserve(dim);
        double label_v = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double v = parse_cell(cells[i], row_no, header[i]);
            if (!std::isfinite(v)) finite = false;
            if (i == label_idx) label_v = v;
            else feats.push_back(v);
        }
        if (!finite) {
            out.rejected_rows.push_back(row_no);
            continue;
        }
        if (label_v != std::floor(label_v) || label_v < 0.0 || label_v > 1e9)
            throw parse_error("row " + std::to_string(row_no) + ", column '" + label_column +
                              "': label must be a nonnegative integer");
        out.data.features.insert(out.data.features.end(), feats.begin(), feats.end());
        out.data.labels.push_back(static_cast<int>(label_v));
    }
    if (out.data.labels.empty()) throw parse_error("'" + path + "': no data rows");

    int max_label = 0;
    for (int y : out.data.labels) max_label = std::max(max_label, y);
    std::vector<bool> present(static_cast<std::size_t>(max_label) + 1, false);
    for (int y : out.data.labels) present[static_cast<std::size_t>(y)] = true;
    for (std::size_t c = 0; c < present.size(); ++c)
        if (!present[c])
            throw parse_error("'" + path + "': label " + std::to_string(c) +
                              " absent; labels must cover 0.." + std::to_string(max_label));
    out.data.classes = static_cast<std::size_t>(max_label) + 1;

    // per-column min-max into [0,1]; constant columns become all zeros
    const std::size_t n = out.data.labels.size();
    for (std::size_t d = 0; d < dim; ++d) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < n; ++r) {
            const double v = out.data.features[r * dim + d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double span = hi - lo;
        for (std::size_t r = 0; r < n; ++r) {
            double& v = out.data.features[r * dim + d];
            v = span > 0.0 ? (v - lo) / span : 0.0;
        }
    }
    return out;
}

void save_table(const Dataset& data, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw parse_error("cannot write table file '" + path + "'");
    for (std::size_t d = 0; d < data.dim; ++d) outf << "f" << d << ",";
    outf << "label\n";
    char buf[32];
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t d = 0; d < data.dim; ++d) {
            std::snprintf(buf, sizeof buf, "%.17g", data.features[r * data.dim + d]);
            outf << buf << ",";
        }
        outf << data.labels[r] << "\n";
    }
}

}  // namespace translab
