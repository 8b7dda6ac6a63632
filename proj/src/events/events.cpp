#include "evdvsr/events.hpp"

#include "evdvsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evdvsr::events {

void EventStream::validate() const {
    if (width <= 0 || height <= 0) throw InvalidInput("EventStream: non-positive geometry");
    if (t_min > t_max) throw InvalidInput("EventStream: t_min > t_max");
    std::int64_t last = t_min;
    for (const Event& e : events) {
        if (e.x >= width || e.y >= height) throw InvalidInput("EventStream: event outside sensor");
        if (e.p != 1 && e.p != -1) throw InvalidInput("EventStream: polarity must be +1 or -1");
        if (e.t < last || e.t > t_max) throw InvalidInput("EventStream: timestamps not ordered within [t_min, t_max]");
        last = e.t;
    }
}

VoxelGrid::VoxelGrid(int b, int h, int w, VoxelKind k, TimeWindow win)
    : bins(b), height(h), width(w), kind(k), window(win), data(static_cast<std::size_t>(b) * h * w, 0.0f) {}

double VoxelGrid::total() const {
    return std::accumulate(data.begin(), data.end(), 0.0);
}

EventStream simulate_events_log(std::span<const std::vector<double>> log_frames, int width, int height,
                                std::span<const std::int64_t> timestamps, double threshold) {
    if (log_frames.size() < 2) throw InvalidInput("simulate_events: need at least 2 frames");
    if (!(threshold > 0.0)) throw InvalidInput("simulate_events: threshold must be positive");
    if (timestamps.size() != log_frames.size()) throw InvalidInput("simulate_events: one timestamp per frame");
    const std::size_t pixels = static_cast<std::size_t>(width) * height;
    for (const auto& f : log_frames)
        if (f.size() != pixels) throw InvalidInput("simulate_events: frame shapes differ");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        if (timestamps[i] <= timestamps[i - 1]) throw InvalidInput("simulate_events: timestamps must increase");

    EventStream stream;
    stream.width = width;
    stream.height = height;
    stream.t_min = timestamps.front();
    stream.t_max = timestamps.back();

    std::vector<double> reference = log_frames.front();
    for (std::size_t k = 1; k < log_frames.size(); ++k) {
        const auto& prev = log_frames[k - 1];
        const auto& cur = log_frames[k];
        const std::int64_t t0 = timestamps[k - 1];
        const double span = static_cast<double>(timestamps[k] - t0);
        const std::size_t first_new = stream.events.size();
        for (std::size_t i = 0; i < pixels; ++i) {
            const double l0 = prev[i];
            const double l1 = cur[i];
            double& ref = reference[i];
            const auto emit = [&](std::int8_t polarity) {
                double frac = (ref - l0) / (l1 - l0);
                frac = std::clamp(frac, 0.0, 1.0);
                Event e;
                e.x = static_cast<std::uint16_t>(i % width);
                e.y = static_cast<std::uint16_t>(i / width);
                e.t = t0 + static_cast<std::int64_t>(std::llround(frac * span));
                e.p = polarity;
                stream.events.push_back(e);
            };
            while (l1 - ref >= threshold) {
                ref += threshold;
                emit(1);
            }
            while (ref - l1 >= threshold) {
                ref -= threshold;
                emit(-1);
            }
        }
        std::stable_sort(stream.events.begin() + static_cast<std::ptrdiff_t>(first_new), stream.events.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
    }
    return stream;
}

EventStream simulate_events(std::span<const Image> frames, std::span<const std::int64_t> timestamps,
                            const SimulatorOptions& options) {
    if (frames.size() < 2) throw InvalidInput("simulate_events: need at least 2 frames");
    if (!(options.threshold > 0.0)) throw InvalidInput("simulate_events: threshold must be positive");
    const int width = frames.front().width;
    const int height = frames.front().height;
    std::vector<std::vector<double>> logs;
    logs.reserve(frames.size());
    for (const Image& f : frames) {
        if (f.channels != 1 || f.width != width || f.height != height)
            throw InvalidInput("simulate_events: frames must be single-channel with equal shapes");
        std::vector<double> l(f.data.size());
        for (std::size_t i = 0; i < l.size(); ++i) l[i] = std::log(static_cast<double>(f.data[i]) + options.log_eps);
        logs.push_back(std::move(l));
    }
    return simulate_events_log(logs, width, height, timestamps, options.threshold);
}

Image synthesize_blur(std::span<const Image> frames) {
    if (frames.empty()) throw InvalidInput("synthesize_blur: no frames");
    const Image& first = frames.front();
    for (const Image& f : frames)
        if (!f.same_shape(first)) throw InvalidInput("synthesize_blur: frame shapes differ");
    Image out(first.channels, first.height, first.width);
    std::vector<float> values(frames.size());
    const double n = static_cast<double>(frames.size());
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        for (std::size_t k = 0; k < frames.size(); ++k) values[k] = frames[k].data[i];
        // canonical order makes the mean independent of frame order
        std::sort(values.begin(), values.end());
        double acc = 0.0;
        for (float v : values) acc += v;
        out.data[i] = std::clamp(static_cast<float>(acc / n), 0.0f, 1.0f);
    }
    return out;
}

Segmentation segment_events(const EventStream& stream, std::span<const ExposureWindow> exposures) {
    for (const auto& w : exposures)
        if (!(w.t_start < w.t_end)) throw InvalidInput("segment_events: exposure with t_start >= t_end");
    for (std::size_t i = 1; i < exposures.size(); ++i)
        if (!(exposures[i - 1].t_end < exposures[i].t_start))
            throw InvalidInput("segment_events: exposures overlap or are out of order");

    Segmentation seg;
    const std::size_t n = exposures.size();
    seg.intra.resize(n);
    seg.inter.resize(n > 0 ? n - 1 : 0);
    for (const auto& w : exposures)
        seg.intra_windows.push_back({static_cast<double>(w.t_start), static_cast<double>(w.t_end)});
    for (std::size_t i = 0; i + 1 < n; ++i)
        seg.inter_windows.push_back({exposures[i].midpoint(), exposures[i + 1].midpoint()});

    // two cursors over a time-sorted stream
    std::size_t intra_k = 0;
    std::size_t inter_k = 0;
    for (const Event& e : stream.events) {
        while (intra_k < n && exposures[intra_k].t_end < e.t) ++intra_k;
        if (intra_k < n && exposures[intra_k].t_start <= e.t) seg.intra[intra_k].push_back(e);
        const double t = static_cast<double>(e.t);
        while (inter_k < seg.inter.size() && seg.inter_windows[inter_k].end < t) ++inter_k;
        if (inter_k < seg.inter.size() && seg.inter_windows[inter_k].begin < t) seg.inter[inter_k].push_back(e);
    }
    return seg;
}

VoxelGrid voxelize(std::span<const Event> events, TimeWindow window, int bins, int width, int height, bool reverse,
                   VoxelKind kind) {
    if (bins < 1) throw InvalidInput("voxelize: bins must be >= 1");
    if (width <= 0 || height <= 0) throw InvalidInput("voxelize: non-positive geometry");
    const double length = window.end - window.begin;
    if (!(length > 0.0)) throw InvalidInput("voxelize: window must have positive length");

    std::vector<double> acc(static_cast<std::size_t>(bins) * height * width, 0.0);
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    const double last_bin = bins - 1;
    for (const Event& e : events) {
        if (e.x >= width || e.y >= height) throw InvalidInput("voxelize: event outside the grid");
        double ts = last_bin * (static_cast<double>(e.t) - window.begin) / length;
        ts = std::clamp(ts, 0.0, last_bin);
        const int lower = static_cast<int>(std::floor(ts));
        const double frac = ts - lower;
        const double polarity = reverse ? -e.p : e.p;
        const std::size_t pix = static_cast<std::size_t>(e.y) * width + e.x;
        const auto deposit = [&](int b, double w) {
            if (w <= 0.0) return;
            const int target = reverse ? bins - 1 - b : b;
            acc[target * plane + pix] += polarity * w;
        };
        deposit(lower, 1.0 - frac);
        if (lower + 1 < bins) deposit(lower + 1, frac);
    }
    VoxelGrid grid(bins, height, width, kind, window);
    for (std::size_t i = 0; i < acc.size(); ++i) grid.data[i] = static_cast<float>(acc[i]);
    return grid;
}

VoxelGrid reverse_voxel_grid(const VoxelGrid& grid) {
    VoxelGrid out = grid;
    const std::size_t plane = static_cast<std::size_t>(grid.height) * grid.width;
    for (int b = 0; b < grid.bins; ++b)
        for (std::size_t i = 0; i < plane; ++i)
            out.data[b * plane + i] = -grid.data[(grid.bins - 1 - b) * plane + i];
    if (grid.kind == VoxelKind::inter_forward) out.kind = VoxelKind::inter_backward;
    else if (grid.kind == VoxelKind::inter_backward) out.kind = VoxelKind::inter_forward;
    return out;
}

std::vector<Event> reverse_events(std::span<const Event> events, std::int64_t t_begin, std::int64_t t_end) {
    std::vector<Event> out(events.rbegin(), events.rend());
    for (Event& e : out) {
        e.t = t_begin + t_end - e.t;
        e.p = static_cast<std::int8_t>(-e.p);
    }
    return out;
}

std::vector<Event> flip_events_horizontal(std::span<const Event> events, int width) {
    std::vector<Event> out(events.begin(), events.end());
    for (Event& e : out) e.x = static_cast<std::uint16_t>(width - 1 - e.x);
    return out;
}

std::vector<Event> flip_events_vertical(std::span<const Event> events, int height) {
    std::vector<Event> out(events.begin(), events.end());
    for (Event& e : out) e.y = static_cast<std::uint16_t>(height - 1 - e.y);
    return out;
}

VoxelGrid flip_horizontal(const VoxelGrid& grid) {
    VoxelGrid out = grid;
    for (int b = 0; b < grid.bins; ++b)
        for (int y = 0; y < grid.height; ++y)
            for (int x = 0; x < grid.width; ++x) out.at(b, y, x) = grid.at(b, y, grid.width - 1 - x);
    return out;
}

VoxelGrid flip_vertical(const VoxelGrid& grid) {
    VoxelGrid out = grid;
    for (int b = 0; b < grid.bins; ++b)
        for (int y = 0; y < grid.height; ++y)
            for (int x = 0; x < grid.width; ++x) out.at(b, y, x) = grid.at(b, grid.height - 1 - y, x);
    return out;
}

VoxelGrid crop(const VoxelGrid& grid, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > grid.height || x0 + w > grid.width)
        throw InvalidInput("crop: window outside the voxel grid");
    VoxelGrid out(grid.bins, h, w, grid.kind, grid.window);
    for (int b = 0; b < grid.bins; ++b)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(b, y, x) = grid.at(b, y0 + y, x0 + x);
    return out;
}

Image hr_edge_mask(std::span<const Event> events, TimeWindow window, int height, int width, int bins) {
    const VoxelGrid grid = voxelize(events, window, bins, width, height);
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::vector<double> signed_sum(plane, 0.0);
    for (int b = 0; b < bins; ++b)
        for (std::size_t i = 0; i < plane; ++i) signed_sum[i] += grid.data[b * plane + i];
    double peak = 0.0;
    for (double v : signed_sum) peak = std::max(peak, std::abs(v));
    Image mask(3, height, width);
    if (peak > 0.0) {
        for (std::size_t i = 0; i < plane; ++i) {
            const float v = static_cast<float>(std::abs(signed_sum[i]) / peak);
            for (int c = 0; c < 3; ++c) mask.data[c * plane + i] = std::min(v, 1.0f);
        }
    }
    return mask;
}

}  // namespace evdvsr::events
