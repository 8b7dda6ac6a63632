#pragma once

#include "evdvsr/config.hpp"
#include "evdvsr/nn/model.hpp"
#include "evdvsr/sequence.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace evdvsr::training {

/// Mean squared error over all elements.
torch::Tensor loss_r(const torch::Tensor& pred, const torch::Tensor& gt);
/// Edge-weighted Charbonnier: mean over pixels and channels of each frame,
/// then over frames (and batch), of mask * sqrt(diff^2 + eta^2).
torch::Tensor loss_e(const torch::Tensor& pred, const torch::Tensor& gt, const torch::Tensor& masks, double eta);

struct LossBreakdown {
    double l_r = 0.0;
    double l_e = 0.0;
    double total = 0.0;
};

/// Cosine annealing from base_lr at iteration 0 to lr_min at total_iters.
double cosine_lr(std::int64_t iteration, std::int64_t total_iters, double base_lr, double lr_min);

/// Loss terms of the model output on a batch with ground truth, honoring the loss toggles.
struct LossTerms {
    torch::Tensor l_r, l_e, total;
};
LossTerms compute_losses(const torch::Tensor& pred, const nn::Batch& batch, const TrainConfig& config);

struct TrainState {
    nn::EvDeblurVsr model{nullptr};
    std::unique_ptr<torch::optim::Adam> optimizer;
    std::int64_t iteration = 0;
    std::mt19937_64 rng;
};

/// Seeds torch and the data RNG from config.train.seed and builds a fresh model and optimizer.
TrainState init_state(const Config& config, bool break_clamp = false);

/// One Adam step at the scheduled learning rate. Returns the losses before the
/// update. Throws TrainingDivergence on a non-finite loss.
LossBreakdown train_step(TrainState& state, const nn::Batch& batch, const TrainConfig& config);

/// Random sub-clips, crops and flips for one batch.
nn::Batch sample_batch(std::span<const SequenceSample> data, const TrainConfig& config, std::mt19937_64& rng);

/// Supervised warm-up of the flow network on randomly translated training frames.
/// Returns the final mean endpoint error in LR pixels.
double flow_prefit(TrainState& state, std::span<const SequenceSample> data, const TrainConfig& config);

/// Written to a temporary file first and renamed, so a kill never leaves a torn checkpoint.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const Config& config);
void save_checkpoint(std::ostream& out, const TrainState& state, const Config& config);
/// Model configuration stored in a checkpoint.
ModelConfig read_checkpoint_model(const std::filesystem::path& path);
/// Full configuration the checkpoint was trained with.
Config read_checkpoint_config(const std::filesystem::path& path);
/// Restores model, optimizer, iteration and RNG. The stored model config must hash
/// equal to config.model, otherwise InvalidInput.
TrainState load_checkpoint(const std::filesystem::path& path, const Config& config);
TrainState load_checkpoint(std::istream& in, const Config& config);

/// Mean per-frame PSNR of the model and of the bicubic baseline on a clip.
struct ValidationResult {
    double psnr = 0.0;
    double bicubic_psnr = 0.0;
};
ValidationResult validate(nn::EvDeblurVsr& model, std::span<const SequenceSample> data);

struct FitOptions {
    std::filesystem::path out_dir;   // checkpoints (ckpt_<iter>.pt, latest.pt); empty disables
    std::ostream* log = nullptr;     // "iter, lr, L_r, L_e, L_total, wall_ms"
    std::ostream* val_log = nullptr; // "iter, psnr, bicubic_psnr"
    std::int64_t stop_after = -1;    // stop (as if killed) once this iteration count is reached
};

/// Runs the remaining iterations of `state` up to config.train.total_iters.
void fit(TrainState& state, const Config& config, std::span<const SequenceSample> train,
         std::span<const SequenceSample> val, const FitOptions& options);

inline constexpr const char* kLogHeader = "# iter, lr, L_r, L_e, L_total, wall_ms";

}  // namespace evdvsr::training
