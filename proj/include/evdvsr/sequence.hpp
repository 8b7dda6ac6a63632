#pragma once

#include "evdvsr/events.hpp"
#include "evdvsr/image.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace evdvsr {

/// How blurry frames are cut out of a high-rate sharp clip. Exposure t
/// averages `sharp_per_exposure` consecutive sharp frames starting at
/// t * (sharp_per_exposure + gap); sharp frame j is stamped j * frame_interval_us.
struct ExposurePlan {
    int sharp_per_exposure = 12;
    int gap = 1;
    std::int64_t frame_interval_us = 1000;

    int period() const { return sharp_per_exposure + gap; }
    /// Sharp frames needed to cover `count` exposures.
    int required_frames(int count) const { return count * period() - gap; }
    std::vector<events::ExposureWindow> windows(int count) const;
    std::vector<std::int64_t> timestamps(int sharp_frames) const;
    /// Index of the sharp frame used as ground truth for exposure t (exposure centre).
    int reference_frame(int t) const { return t * period() + sharp_per_exposure / 2; }
};

/// Raw per-clip artifacts, as stored on disk.
struct ClipData {
    std::vector<Image> blurry_lr;  // T x (3 x h x w)
    std::vector<Image> sharp_hr;   // T x (3 x sH x sW)
    events::EventStream events_lr;
    events::EventStream events_hr;
    std::vector<events::ExposureWindow> exposures;
};

/// Network-ready training/evaluation sample.
struct SequenceSample {
    std::vector<Image> blurry_lr;
    std::vector<events::VoxelGrid> intra_voxels;
    std::vector<events::VoxelGrid> fwd_voxels;
    std::vector<events::VoxelGrid> bwd_voxels;
    std::vector<Image> sharp_hr;
    std::vector<Image> edge_masks;
    int scale = 4;

    int length() const { return static_cast<int>(blurry_lr.size()); }
    int lr_height() const { return blurry_lr.empty() ? 0 : blurry_lr.front().height; }
    int lr_width() const { return blurry_lr.empty() ? 0 : blurry_lr.front().width; }
    bool has_ground_truth() const { return !sharp_hr.empty(); }

    /// Throws InvalidInput on any shape or count inconsistency.
    void validate(int bins) const;
};

struct SynthesisOptions {
    int scale = 4;
    int bins = 5;
    events::SimulatorOptions simulator;
};

/// Blur by frame averaging, bicubic downsampling, simulated LR and HR events.
ClipData synthesize_clip(std::span<const Image> sharp_hr, const ExposurePlan& plan, int count,
                         const SynthesisOptions& options);

/// Voxelizes events and derives HR edge masks. Ground truth is optional (inference).
SequenceSample assemble_sample(const ClipData& clip, int scale, int bins);

SequenceSample build_sequence_sample(std::span<const Image> sharp_hr, const ExposurePlan& plan, int count,
                                     const SynthesisOptions& options);

/// Consecutive sub-sequence [first, first + length).
SequenceSample slice_frames(const SequenceSample& sample, int first, int length);

/// Spatial crop in LR coordinates; HR tensors are cropped at scale x the window.
SequenceSample crop(const SequenceSample& sample, int y0, int x0, int size);

/// Spatial flips applied consistently to every tensor. Voxel bins and polarity are untouched.
SequenceSample flip(const SequenceSample& sample, bool horizontal, bool vertical);

struct AugmentOptions {
    int crop_size = 64;
    bool center_crop = false;
    double flip_prob_h = 0.5;
    double flip_prob_v = 0.5;
};

SequenceSample augment(const SequenceSample& sample, const AugmentOptions& options, std::mt19937_64& rng);

}  // namespace evdvsr
