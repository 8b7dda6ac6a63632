#pragma once

#include "evdvsr/metrics.hpp"
#include "evdvsr/nn/model.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace evdvsr::app {

/// Spatial tiling of the LR input. Tiles are `tile` LR pixels square (a
/// multiple of 4), neighbours overlap by at least `overlap` pixels and are
/// blended with linear ramps across the overlap. tile = 0 runs the full frame.
struct TileOptions {
    int tile = 0;
    int overlap = 16;
};

/// Start offsets covering [0, length): regular stride tile - overlap, last tile flush with the end.
std::vector<int> tile_starts(int length, int tile, int overlap);

/// Restricts every LR tensor of the batch to the window and the HR tensors to the scaled window.
nn::Batch crop_batch(const nn::Batch& batch, int y0, int x0, int height, int width, int scale);

using ResidualFn = std::function<torch::Tensor(const nn::Batch&)>;

/// Blends per-tile HR residuals of `fn` into a full-frame residual [N,T,3,H,W].
torch::Tensor tiled_residual(const nn::Batch& batch, int scale, const TileOptions& tiles, const ResidualFn& fn);

/// Model output (residual + full-frame bicubic) without gradients.
torch::Tensor super_resolve(nn::EvDeblurVsr& model, const nn::Batch& batch, const TileOptions& tiles);
std::vector<Image> super_resolve(nn::EvDeblurVsr& model, const SequenceSample& sample, const TileOptions& tiles);

/// Bicubic | output | ground truth, side by side.
Image comparison_grid(const Image& bicubic, const Image& output, const Image& gt);

struct EvalOptions {
    TileOptions tiles;
    bool gt_as_pred = false;   // debug: score the ground truth against itself
    bool zero_events = false;  // debug: replace every voxel grid by zeros
    std::filesystem::path grid_dir;  // empty disables the PNG grids
};

struct EvalResult {
    metrics::MetricReport model;
    metrics::MetricReport bicubic;
};

/// Runs the model over every clip of a dataset directory and scores it against the ground truth.
EvalResult evaluate_dataset(nn::EvDeblurVsr& model, const std::filesystem::path& root, const EvalOptions& options);

/// Names of the clips evaluated by evaluate_dataset, in report order.
std::vector<std::string> dataset_clips(const std::filesystem::path& root);

/// Loads every clip of a dataset directory as a network sample.
std::vector<SequenceSample> load_samples(const std::filesystem::path& root, int scale, int bins,
                                         bool with_ground_truth = true);
SequenceSample load_sample(const std::filesystem::path& clip_dir, int scale, int bins, bool with_ground_truth);

SequenceSample zero_events(SequenceSample sample);

}  // namespace evdvsr::app
