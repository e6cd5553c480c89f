#include "translab/record.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "translab/errors.hpp"

namespace translab {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

MetricsWriter::MetricsWriter(std::string path, std::vector<std::string> columns)
    : path_(std::move(path)), columns_(columns.size()) {
    std::ofstream out(path_ + ".partial", std::ios::trunc);
    if (!out) throw state_error("cannot write metrics file '" + path_ + ".partial'");
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out << ",";
        out << columns[i];
    }
    out << "\n";
}

MetricsWriter::~MetricsWriter() = default;  // a leftover .partial marks an interrupted run

void MetricsWriter::append(const std::vector<std::string>& cells) {
    if (finalized_) throw usage_error("metrics file already finalized");
    if (cells.size() != columns_)
        throw usage_error("metrics row has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(columns_));
    std::ofstream out(path_ + ".partial", std::ios::app);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ",";
        out << cells[i];
    }
    out << "\n";
}

void MetricsWriter::finalize() {
    if (finalized_) return;
    std::filesystem::rename(path_ + ".partial", path_);
    finalized_ = true;
}

void write_epoch_metrics(const std::string& path, const std::vector<EpochMetrics>& rows) {
    MetricsWriter w(path, {"epoch", "loss_transition", "loss_target", "natural_accuracy",
                           "adversarial_accuracy"});
    for (const auto& r : rows)
        w.append({std::to_string(r.epoch), fmt_double(r.loss_transition),
                  fmt_double(r.loss_target), fmt_double(r.natural_accuracy),
                  fmt_double(r.adversarial_accuracy)});
    w.finalize();
}

void write_accuracy_table(const std::string& path, const std::vector<AccuracyRow>& rows) {
    MetricsWriter w(path, {"attack", "accuracy", "target_model_accuracy"});
    for (const auto& r : rows)
        w.append({r.attack_name, fmt_double(r.combined_accuracy),
                  fmt_double(r.target_accuracy)});
    w.finalize();
}

void write_detection_table(const std::string& path, const std::vector<DetectionScore>& rows) {
    MetricsWriter w(path, {"instance", "predicted_label", "p", "score", "ground_truth"});
    for (const auto& r : rows)
        w.append({std::to_string(r.instance_id), std::to_string(r.predicted_label),
                  fmt_double(r.diagonal_p), fmt_double(r.score),
                  r.adversarial ? "adversarial" : "natural"});
    w.finalize();
}

void write_masking_table(const std::string& path, const std::vector<MaskingCheck>& rows) {
    MetricsWriter w(path, {"check", "pass", "value_a", "value_b", "detail"});
    for (const auto& r : rows)
        w.append({r.name, r.pass ? "pass" : "fail", fmt_double(r.value_a),
                  fmt_double(r.value_b), r.detail});
    w.finalize();
}

}  // namespace translab
