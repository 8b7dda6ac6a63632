#pragma once

#include "evdvsr/image.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evdvsr::metrics {

inline constexpr double kPsnrCap = 99.0;

struct PsnrResult {
    double db = 0.0;
    bool saturated = false;
};

/// 10 log10(1 / MSE) over all channels; identical images saturate at kPsnrCap.
PsnrResult psnr(const Image& pred, const Image& gt);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), valid region,
/// C1 = 0.01^2, C2 = 0.03^2, averaged over channels and positions.
double ssim(const Image& pred, const Image& gt);

/// Dense flow field, (dx, dy) per pixel, such that a(x) ~ b(x + flow(x)).
struct Flow {
    int height = 0;
    int width = 0;
    std::vector<float> dx;
    std::vector<float> dy;
};

struct ClassicalFlowOptions {
    int levels = 3;
    int iterations = 5;
    int window_radius = 3;
    double regularization = 1e-3;
};

/// Pyramidal iterative gradient-based (Lucas-Kanade) flow on luminance.
/// Deterministic and weight-free.
Flow classical_flow(const Image& a, const Image& b, const ClassicalFlowOptions& options = {});

/// Mean L1 difference between flows of consecutive pred pairs and gt pairs, averaged over the clip.
double tof(std::span<const Image> pred, std::span<const Image> gt);

/// Mean SSIM between temporal-difference maps ((D + 1) / 2) of pred and gt.
double tcc(std::span<const Image> pred, std::span<const Image> gt);

struct ClipMetrics {
    std::string clip;
    int frames = 0;
    double psnr = 0.0;  // mean over frames
    bool psnr_saturated = false;
    double ssim = 0.0;
    double tof = 0.0;
    double tcc = 0.0;
    std::optional<double> lpips;  // never computed; reserved
};

ClipMetrics evaluate_clip(const std::string& name, std::span<const Image> pred, std::span<const Image> gt);

struct MetricReport {
    std::vector<ClipMetrics> clips;

    /// Mean of per-clip values; with `frame_weighted`, weighted by frame counts.
    ClipMetrics aggregate(bool frame_weighted = false) const;

    /// "clip, psnr, ssim, tof, tcc" lines with a trailing ALL row.
    void write_lines(std::ostream& out, bool frame_weighted = false) const;
    /// Human-readable aligned table.
    void write_table(std::ostream& out, bool frame_weighted = false) const;

    static MetricReport parse_lines(std::istream& in, const std::string& source = "<stream>");
};

}  // namespace evdvsr::metrics
