#pragma once

#include <string>
#include <vector>

#include "translab/detect.hpp"
#include "translab/train.hpp"

namespace translab {

/// Formats a double so it round-trips exactly and prints identically across
/// runs.
std::string fmt_double(double v);

/// Append-only CSV that lives as "<path>.partial" while a run is in flight
/// and is renamed into place by finalize(), so interrupted runs are
/// detectable.
class MetricsWriter {
public:
    MetricsWriter(std::string path, std::vector<std::string> columns);
    ~MetricsWriter();

    void append(const std::vector<std::string>& cells);
    void finalize();

private:
    std::string path_;
    std::size_t columns_ = 0;
    bool finalized_ = false;
};

void write_epoch_metrics(const std::string& path, const std::vector<EpochMetrics>& rows);
void write_accuracy_table(const std::string& path, const std::vector<AccuracyRow>& rows);
void write_detection_table(const std::string& path, const std::vector<DetectionScore>& rows);
void write_masking_table(const std::string& path, const std::vector<MaskingCheck>& rows);

}  // namespace translab
