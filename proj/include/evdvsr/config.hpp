#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace evdvsr {

enum class RfdOrder {
    image_to_event_first,  // i->e enhances events, then e->i deblurs frames
    event_to_image_first,
};

struct ModelConfig {
    int channels = 32;
    int residual_blocks = 5;
    int attention_heads = 4;
    int mlp_ratio = 2;
    int voxel_bins = 5;
    int scale = 4;
    int dcn_groups = 4;
    double dcn_offset_clamp = 10.0;  // LR pixels
    int flow_channels = 24;
    RfdOrder rfd_order = RfdOrder::image_to_event_first;
    bool use_i2e = true;
    bool use_intra = true;
    bool use_inter = true;
    bool use_ega = true;
    bool use_fga = true;

    void validate() const;
};

struct TrainConfig {
    std::string dataset;
    std::string val_dataset;
    int clip_length = 15;
    int crop_size = 64;
    int batch_size = 8;
    double base_lr = 1e-4;
    double lr_min = 1e-7;
    double flow_lr_scale = 0.25;
    std::int64_t total_iters = 20000;
    double flip_prob_h = 0.5;
    double flip_prob_v = 0.5;
    bool center_crop = false;
    std::uint64_t seed = 0;
    double eta = 1e-8;
    bool use_lr = true;
    bool use_le = true;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double adam_eps = 1e-8;
    std::int64_t flow_pretrain_iters = 300;
    std::int64_t checkpoint_every = 1000;
    std::int64_t validate_every = 1000;
    std::int64_t log_every = 1;

    void validate() const;
};

struct DataConfig {
    std::string source;  // directory of sharp high-rate clips; empty with --synthetic
    int clips = 2;
    int frames = 40;  // blurry frames per clip
    int hr_height = 256;
    int hr_width = 256;
    double threshold = 0.15;
    std::uint64_t seed = 0;
    double speed_min = 0.5;
    double speed_max = 3.0;
    int sharp_per_exposure_min = 8;
    int sharp_per_exposure_max = 24;
    int gap = 1;
    std::int64_t frame_interval_us = 1000;
};

struct EvalConfig {
    std::string dataset;
    std::string checkpoint;
    int tile_size = 0;  // LR pixels; 0 disables tiling
    int tile_overlap = 16;
    bool gt_as_pred = false;
    bool frame_weighted = false;
    bool write_grids = true;
    bool zero_events = false;
};

struct Config {
    ModelConfig model;
    TrainConfig train;
    DataConfig data;
    EvalConfig eval;

    void validate() const;
};

/// Parses `key = value` lines (UTF-8, '#' comments). Unknown keys throw InvalidInput.
void apply_config_text(Config& config, const std::string& text, const std::string& source = "<config>");
void apply_config_file(Config& config, const std::filesystem::path& path);

/// Sets one dotted key, e.g. "model.use_ega" = "false".
void set_config_value(Config& config, const std::string& key, const std::string& value);
std::string get_config_value(const Config& config, const std::string& key);

/// All keys in canonical order.
std::vector<std::string> config_keys();

/// Canonical `key = value` text. Doubles are printed round-trip exact.
std::string serialize_config(const Config& config);
std::string serialize_model_config(const ModelConfig& model);
ModelConfig parse_model_config(const std::string& text);

/// FNV-1a 64 of the canonical model config text, as 16 hex digits.
std::string model_config_hash(const ModelConfig& model);
/// Hash over ablation toggles only (architecture and loss switches).
std::string toggle_hash(const Config& config);
std::string toggle_summary(const Config& config);

std::string fnv1a_hex(const std::string& text);

}  // namespace evdvsr
