#include "evdvsr/sequence.hpp"

#include "evdvsr/error.hpp"
#include "evdvsr/resize.hpp"

#include <string>

namespace evdvsr {

using events::EventStream;
using events::ExposureWindow;
using events::VoxelGrid;
using events::VoxelKind;

std::vector<ExposureWindow> ExposurePlan::windows(int count) const {
    if (sharp_per_exposure < 2) throw InvalidInput("ExposurePlan: need at least 2 sharp frames per exposure");
    if (gap < 0 || frame_interval_us <= 0) throw InvalidInput("ExposurePlan: invalid gap or frame interval");
    std::vector<ExposureWindow> out;
    out.reserve(count);
    for (int t = 0; t < count; ++t) {
        const std::int64_t first = static_cast<std::int64_t>(t) * period();
        out.push_back({first * frame_interval_us, (first + sharp_per_exposure - 1) * frame_interval_us, t});
    }
    return out;
}

std::vector<std::int64_t> ExposurePlan::timestamps(int sharp_frames) const {
    std::vector<std::int64_t> ts(sharp_frames);
    for (int j = 0; j < sharp_frames; ++j) ts[j] = j * frame_interval_us;
    return ts;
}

void SequenceSample::validate(int bins) const {
    const int t = length();
    if (t < 1) throw InvalidInput("SequenceSample: empty");
    const int h = lr_height(), w = lr_width();
    if (scale < 1) throw InvalidInput("SequenceSample: invalid scale");
    for (const Image& f : blurry_lr)
        if (f.channels != 3 || f.height != h || f.width != w) throw InvalidInput("SequenceSample: LR frame shape");
    const auto check_voxels = [&](const std::vector<VoxelGrid>& v, int expected, const char* what) {
        if (static_cast<int>(v.size()) != expected)
            throw InvalidInput(std::string("SequenceSample: wrong number of ") + what);
        for (const VoxelGrid& g : v)
            if (g.bins != bins || g.height != h || g.width != w)
                throw InvalidInput(std::string("SequenceSample: shape mismatch in ") + what);
    };
    check_voxels(intra_voxels, t, "intra voxels");
    check_voxels(fwd_voxels, t - 1, "forward voxels");
    check_voxels(bwd_voxels, t - 1, "backward voxels");
    if (!sharp_hr.empty()) {
        if (static_cast<int>(sharp_hr.size()) != t || static_cast<int>(edge_masks.size()) != t)
            throw InvalidInput("SequenceSample: ground truth count mismatch");
        for (std::size_t i = 0; i < sharp_hr.size(); ++i) {
            const Image& g = sharp_hr[i];
            const Image& m = edge_masks[i];
            if (g.channels != 3 || g.height != h * scale || g.width != w * scale || !m.same_shape(g))
                throw InvalidInput("SequenceSample: HR shape inconsistent with scale");
        }
    }
}

ClipData synthesize_clip(std::span<const Image> sharp_hr, const ExposurePlan& plan, int count,
                         const SynthesisOptions& options) {
    if (count < 1) throw InvalidInput("synthesize_clip: need at least one exposure");
    const int needed = plan.required_frames(count);
    if (static_cast<int>(sharp_hr.size()) < needed)
        throw InvalidInput("synthesize_clip: clip has " + std::to_string(sharp_hr.size()) + " sharp frames, plan needs " +
                           std::to_string(needed));
    const std::span<const Image> used = sharp_hr.first(needed);
    for (const Image& f : used)
        if (f.channels != 3 || !f.same_shape(used.front())) throw InvalidInput("synthesize_clip: frames must be RGB, equal size");

    ClipData clip;
    clip.exposures = plan.windows(count);
    for (int t = 0; t < count; ++t) {
        const auto window = used.subspan(static_cast<std::size_t>(t) * plan.period(), plan.sharp_per_exposure);
        clip.blurry_lr.push_back(downsample_bicubic(events::synthesize_blur(window), options.scale));
        clip.sharp_hr.push_back(used[plan.reference_frame(t)]);
    }

    const auto timestamps = plan.timestamps(needed);
    std::vector<Image> gray_hr, gray_lr;
    gray_hr.reserve(needed);
    gray_lr.reserve(needed);
    for (const Image& f : used) {
        gray_hr.push_back(luminance(f));
        gray_lr.push_back(downsample_bicubic(gray_hr.back(), options.scale));
    }
    clip.events_lr = events::simulate_events(gray_lr, timestamps, options.simulator);
    clip.events_hr = events::simulate_events(gray_hr, timestamps, options.simulator);
    return clip;
}

SequenceSample assemble_sample(const ClipData& clip, int scale, int bins) {
    const int t = static_cast<int>(clip.blurry_lr.size());
    if (t < 1 || static_cast<int>(clip.exposures.size()) != t)
        throw InvalidInput("assemble_sample: exposure count must match frame count");
    const int h = clip.blurry_lr.front().height, w = clip.blurry_lr.front().width;
    if (clip.events_lr.width != w || clip.events_lr.height != h)
        throw InvalidInput("assemble_sample: event geometry " + std::to_string(clip.events_lr.width) + "x" +
                           std::to_string(clip.events_lr.height) + " does not match LR frames " + std::to_string(w) +
                           "x" + std::to_string(h));

    SequenceSample sample;
    sample.scale = scale;
    sample.blurry_lr = clip.blurry_lr;
    const auto seg = events::segment_events(clip.events_lr, clip.exposures);
    for (int i = 0; i < t; ++i)
        sample.intra_voxels.push_back(events::voxelize(seg.intra[i], seg.intra_windows[i], bins, w, h, false, VoxelKind::intra));
    for (int i = 0; i + 1 < t; ++i) {
        sample.fwd_voxels.push_back(
            events::voxelize(seg.inter[i], seg.inter_windows[i], bins, w, h, false, VoxelKind::inter_forward));
        sample.bwd_voxels.push_back(
            events::voxelize(seg.inter[i], seg.inter_windows[i], bins, w, h, true, VoxelKind::inter_backward));
    }

    if (!clip.sharp_hr.empty()) {
        sample.sharp_hr = clip.sharp_hr;
        const int hh = h * scale, hw = w * scale;
        if (clip.events_hr.width != hw || clip.events_hr.height != hh)
            throw InvalidInput("assemble_sample: HR event geometry does not match scale");
        const auto seg_hr = events::segment_events(clip.events_hr, clip.exposures);
        for (int i = 0; i < t; ++i)
            sample.edge_masks.push_back(events::hr_edge_mask(seg_hr.intra[i], seg_hr.intra_windows[i], hh, hw, bins));
    }
    sample.validate(bins);
    return sample;
}

SequenceSample build_sequence_sample(std::span<const Image> sharp_hr, const ExposurePlan& plan, int count,
                                     const SynthesisOptions& options) {
    return assemble_sample(synthesize_clip(sharp_hr, plan, count, options), options.scale, options.bins);
}

SequenceSample slice_frames(const SequenceSample& sample, int first, int length) {
    if (first < 0 || length < 1 || first + length > sample.length())
        throw InvalidInput("slice_frames: range outside the sequence");
    SequenceSample out;
    out.scale = sample.scale;
    const auto take = [](const auto& v, int a, int n) { return std::vector(v.begin() + a, v.begin() + a + n); };
    out.blurry_lr = take(sample.blurry_lr, first, length);
    out.intra_voxels = take(sample.intra_voxels, first, length);
    out.fwd_voxels = take(sample.fwd_voxels, first, length - 1);
    out.bwd_voxels = take(sample.bwd_voxels, first, length - 1);
    if (sample.has_ground_truth()) {
        out.sharp_hr = take(sample.sharp_hr, first, length);
        out.edge_masks = take(sample.edge_masks, first, length);
    }
    return out;
}

SequenceSample crop(const SequenceSample& sample, int y0, int x0, int size) {
    SequenceSample out;
    out.scale = sample.scale;
    const int s = sample.scale;
    for (const Image& f : sample.blurry_lr) out.blurry_lr.push_back(evdvsr::crop(f, y0, x0, size, size));
    for (const VoxelGrid& g : sample.intra_voxels) out.intra_voxels.push_back(events::crop(g, y0, x0, size, size));
    for (const VoxelGrid& g : sample.fwd_voxels) out.fwd_voxels.push_back(events::crop(g, y0, x0, size, size));
    for (const VoxelGrid& g : sample.bwd_voxels) out.bwd_voxels.push_back(events::crop(g, y0, x0, size, size));
    for (const Image& f : sample.sharp_hr) out.sharp_hr.push_back(evdvsr::crop(f, y0 * s, x0 * s, size * s, size * s));
    for (const Image& m : sample.edge_masks) out.edge_masks.push_back(evdvsr::crop(m, y0 * s, x0 * s, size * s, size * s));
    return out;
}

SequenceSample flip(const SequenceSample& sample, bool horizontal, bool vertical) {
    SequenceSample out = sample;
    const auto apply_image = [&](std::vector<Image>& v) {
        for (Image& f : v) {
            if (horizontal) f = flip_horizontal(f);
            if (vertical) f = flip_vertical(f);
        }
    };
    const auto apply_voxels = [&](std::vector<VoxelGrid>& v) {
        for (VoxelGrid& g : v) {
            if (horizontal) g = events::flip_horizontal(g);
            if (vertical) g = events::flip_vertical(g);
        }
    };
    apply_image(out.blurry_lr);
    apply_image(out.sharp_hr);
    apply_image(out.edge_masks);
    apply_voxels(out.intra_voxels);
    apply_voxels(out.fwd_voxels);
    apply_voxels(out.bwd_voxels);
    return out;
}

SequenceSample augment(const SequenceSample& sample, const AugmentOptions& options, std::mt19937_64& rng) {
    const int h = sample.lr_height(), w = sample.lr_width();
    const int size = options.crop_size;
    if (size > h || size > w) throw InvalidInput("augment: crop larger than the frame");
    int y0 = (h - size) / 2, x0 = (w - size) / 2;
    if (!options.center_crop) {
        y0 = std::uniform_int_distribution<int>(0, h - size)(rng);
        x0 = std::uniform_int_distribution<int>(0, w - size)(rng);
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const bool fh = coin(rng) < options.flip_prob_h;
    const bool fv = coin(rng) < options.flip_prob_v;
    SequenceSample out = (size == h && size == w) ? sample : crop(sample, y0, x0, size);
    if (fh || fv) out = flip(out, fh, fv);
    return out;
}

}  // namespace evdvsr
