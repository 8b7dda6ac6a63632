#pragma once

#include "evdvsr/image.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace evdvsr::events {

/// A single brightness-change event. Timestamps are integer microseconds.
struct Event {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int64_t t = 0;
    std::int8_t p = 1;  // -1 or +1

    friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
    int width = 0;
    int height = 0;
    std::int64_t t_min = 0;
    std::int64_t t_max = 0;
    std::vector<Event> events;

    /// Throws InvalidInput when geometry, polarity or time ordering is violated.
    void validate() const;

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Closed exposure interval of one blurry frame.
struct ExposureWindow {
    std::int64_t t_start = 0;
    std::int64_t t_end = 0;
    int frame_index = 0;

    double midpoint() const { return 0.5 * (static_cast<double>(t_start) + static_cast<double>(t_end)); }
};

/// Time interval [begin, end] in microseconds that a voxel grid discretizes.
struct TimeWindow {
    double begin = 0.0;
    double end = 0.0;
};

enum class VoxelKind { intra, inter_forward, inter_backward };

struct VoxelGrid {
    int bins = 0;
    int height = 0;
    int width = 0;
    VoxelKind kind = VoxelKind::intra;
    TimeWindow window;
    std::vector<float> data;  // bins x height x width

    VoxelGrid() = default;
    VoxelGrid(int b, int h, int w, VoxelKind k, TimeWindow win);

    float& at(int b, int y, int x) { return data[(static_cast<std::size_t>(b) * height + y) * width + x]; }
    float at(int b, int y, int x) const { return data[(static_cast<std::size_t>(b) * height + y) * width + x]; }
    double total() const;
};

struct SimulatorOptions {
    double threshold = 0.15;  // contrast threshold in log units
    double log_eps = 1e-3;
};

/// Ideal per-pixel log-intensity threshold-crossing simulator over a
/// grayscale sequence (1 x H x W frames in [0,1]). Crossing times are
/// linearly interpolated between frame timestamps; output is time-sorted.
EventStream simulate_events(std::span<const Image> frames, std::span<const std::int64_t> timestamps,
                            const SimulatorOptions& options = {});

/// Same model on precomputed log-intensity frames (each of size height*width).
EventStream simulate_events_log(std::span<const std::vector<double>> log_frames, int width, int height,
                                std::span<const std::int64_t> timestamps, double threshold);

/// Pixel-wise mean of frames within one exposure.
Image synthesize_blur(std::span<const Image> frames);

struct Segmentation {
    std::vector<std::vector<Event>> intra;  // one per exposure
    std::vector<std::vector<Event>> inter;  // interval t -> t+1, (mid_t, mid_{t+1}]
    std::vector<TimeWindow> intra_windows;
    std::vector<TimeWindow> inter_windows;
};

/// Splits a stream into intra-exposure slices and inter-frame slices between
/// consecutive exposure midpoints (half-open on the left).
Segmentation segment_events(const EventStream& stream, std::span<const ExposureWindow> exposures);

/// Bilinear temporal voxelization over `bins` bins. With `reverse`, time is
/// mirrored and polarity negated (backward voxels).
VoxelGrid voxelize(std::span<const Event> events, TimeWindow window, int bins, int width, int height,
                   bool reverse = false, VoxelKind kind = VoxelKind::intra);

/// Mirrors a grid in bin order and negates it; an involution.
VoxelGrid reverse_voxel_grid(const VoxelGrid& grid);

/// Time-mirrors event timestamps inside the window and negates polarity.
std::vector<Event> reverse_events(std::span<const Event> events, std::int64_t t_begin, std::int64_t t_end);

std::vector<Event> flip_events_horizontal(std::span<const Event> events, int width);
std::vector<Event> flip_events_vertical(std::span<const Event> events, int height);

VoxelGrid flip_horizontal(const VoxelGrid& grid);
VoxelGrid flip_vertical(const VoxelGrid& grid);
VoxelGrid crop(const VoxelGrid& grid, int y0, int x0, int h, int w);

/// Edge weight map from an HR intra slice: bin-summed signed voxels,
/// normalized by the maximum magnitude, absolute value, replicated to 3 channels.
Image hr_edge_mask(std::span<const Event> events, TimeWindow window, int height, int width, int bins = 5);

}  // namespace evdvsr::events
