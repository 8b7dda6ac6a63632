#pragma once

#include "evdvsr/image.hpp"
#include "evdvsr/sequence.hpp"

#include <cstdint>
#include <vector>

namespace evdvsr {

/// Procedural moving-shapes scenes: a smooth panning background with
/// translating/rotating solid rectangles and textured sprites that bounce
/// off the frame borders. Speeds are HR pixels per sharp frame.
struct SyntheticOptions {
    int hr_height = 256;
    int hr_width = 256;
    double speed_min = 0.5;
    double speed_max = 3.0;
    int sharp_per_exposure_min = 8;
    int sharp_per_exposure_max = 24;
    int gap = 1;
    int shapes_min = 3;
    int shapes_max = 6;
    std::int64_t frame_interval_us = 1000;
};

struct SyntheticClip {
    std::vector<Image> frames;  // high-rate sharp RGB frames
    ExposurePlan plan;
};

/// Generates enough sharp frames for `exposures` blurry frames. Deterministic in `seed`.
SyntheticClip generate_synthetic_clip(int exposures, const SyntheticOptions& options, std::uint64_t seed);

}  // namespace evdvsr
