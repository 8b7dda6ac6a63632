#pragma once

#include "evdvsr/config.hpp"
#include "evdvsr/image.hpp"
#include "evdvsr/metrics.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace evdvsr::app {

struct TrainLogEntry {
    std::int64_t iter = 0;
    double lr = 0.0, l_r = 0.0, l_e = 0.0, total = 0.0, wall_ms = 0.0;
};

struct ValLogEntry {
    std::int64_t iter = 0;
    double psnr = 0.0, bicubic_psnr = 0.0;
};

/// Parsers for the training and validation logs; malformed lines throw DataError naming source:line.
std::vector<TrainLogEntry> parse_train_log(std::istream& in, const std::string& source = "<train log>");
std::vector<ValLogEntry> parse_val_log(std::istream& in, const std::string& source = "<val log>");

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::array<float, 3> color{0.1f, 0.3f, 0.8f};
};

struct PlotSpec {
    std::vector<Series> series;
    bool log_y = false;
    int width = 640;
    int height = 400;
};

/// Data range mapped onto the plot frame.
struct PlotAxes {
    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};

/// Line plot with a framed data area and numeric labels at the axis ends.
/// The x axis spans exactly the range of the data.
Image render_plot(const PlotSpec& spec, PlotAxes* axes = nullptr);

/// Artifacts found in one run directory (training and/or evaluation output).
struct RunSummary {
    std::string name;
    Config config;
    std::optional<metrics::ClipMetrics> model;
    std::optional<metrics::ClipMetrics> bicubic;
    std::vector<TrainLogEntry> train;
    std::vector<ValLogEntry> val;
};

/// Reads config.txt and whichever of metrics.txt, bicubic_metrics.txt, train_log.txt, val_log.txt exist.
RunSummary load_run(const std::filesystem::path& dir);

/// Run table: one row per run.
void write_run_table(std::ostream& out, const std::vector<RunSummary>& runs);
/// Ablation table: one row per distinct toggle hash, metrics averaged over its runs.
void write_ablation_table(std::ostream& out, const std::vector<RunSummary>& runs);

/// Writes report.txt and loss/PSNR curves (PNG) into `out_dir`.
void write_report(const std::vector<RunSummary>& runs, const std::filesystem::path& out_dir);

}  // namespace evdvsr::app
