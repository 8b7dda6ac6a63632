#include "evdvsr/app/inference.hpp"

#include "evdvsr/dataset.hpp"
#include "evdvsr/error.hpp"
#include "evdvsr/png_io.hpp"

#include <algorithm>

namespace evdvsr::app {

namespace fs = std::filesystem;

std::vector<int> tile_starts(int length, int tile, int overlap) {
    if (tile <= 0 || tile >= length) return {0};
    if (overlap < 0 || overlap >= tile) throw InvalidInput("tile overlap must lie in [0, tile)");
    std::vector<int> out;
    for (int s = 0;; s += tile - overlap) {
        if (s + tile >= length) {
            out.push_back(length - tile);
            break;
        }
        out.push_back(s);
    }
    return out;
}

nn::Batch crop_batch(const nn::Batch& b, int y0, int x0, int height, int width, int scale) {
    const auto lr = [&](const torch::Tensor& t) {
        return t.defined() ? t.narrow(3, y0, height).narrow(4, x0, width) : t;
    };
    const auto hr = [&](const torch::Tensor& t) {
        return t.defined() ? t.narrow(3, y0 * scale, height * scale).narrow(4, x0 * scale, width * scale) : t;
    };
    nn::Batch out;
    out.frames = lr(b.frames);
    out.intra = lr(b.intra);
    out.fwd = lr(b.fwd);
    out.bwd = lr(b.bwd);
    out.bicubic = hr(b.bicubic);
    out.gt = hr(b.gt);
    out.masks = hr(b.masks);
    return out;
}

namespace {

// Weight along one axis of a tile: ramps up over `ramp` samples on sides that face another tile.
torch::Tensor ramp_weights(int length, int ramp, bool rise, bool fall) {
    auto w = torch::ones({length}, torch::kDouble);
    if (ramp <= 0) return w;
    const auto pos = torch::arange(length, torch::kDouble) + 0.5;
    if (rise) w = torch::minimum(w, pos / ramp);
    if (fall) w = torch::minimum(w, (length - pos) / ramp);
    return w;
}

}  // namespace

torch::Tensor tiled_residual(const nn::Batch& batch, int scale, const TileOptions& tiles, const ResidualFn& fn) {
    const int h = static_cast<int>(batch.frames.size(3)), w = static_cast<int>(batch.frames.size(4));
    if (tiles.tile <= 0 || (tiles.tile >= h && tiles.tile >= w)) return fn(batch);
    if (tiles.tile % 4 != 0) throw InvalidInput("tile size must be a multiple of 4");
    const auto ys = tile_starts(h, tiles.tile, tiles.overlap), xs = tile_starts(w, tiles.tile, tiles.overlap);
    const int th = std::min(tiles.tile, h), tw = std::min(tiles.tile, w);
    const int ramp = tiles.overlap * scale;
    torch::Tensor acc, weight;
    for (int y0 : ys)
        for (int x0 : xs) {
            const torch::Tensor res = fn(crop_batch(batch, y0, x0, th, tw, scale)).to(torch::kDouble);
            if (!acc.defined()) {
                auto shape = res.sizes().vec();
                shape[3] = static_cast<int64_t>(h) * scale;
                shape[4] = static_cast<int64_t>(w) * scale;
                acc = torch::zeros(shape, torch::kDouble);
                weight = torch::zeros({shape[3], shape[4]}, torch::kDouble);
            }
            const auto wy = ramp_weights(th * scale, ramp, y0 > 0, y0 + th < h);
            const auto wx = ramp_weights(tw * scale, ramp, x0 > 0, x0 + tw < w);
            const auto wt = wy.unsqueeze(1) * wx.unsqueeze(0);
            acc.narrow(3, y0 * scale, th * scale).narrow(4, x0 * scale, tw * scale).add_(res * wt);
            weight.narrow(0, y0 * scale, th * scale).narrow(1, x0 * scale, tw * scale).add_(wt);
        }
    return (acc / weight).to(batch.frames.scalar_type());
}

torch::Tensor super_resolve(nn::EvDeblurVsr& model, const nn::Batch& batch, const TileOptions& tiles) {
    torch::NoGradGuard guard;
    const torch::Tensor res =
        tiled_residual(batch, model->config.scale, tiles, [&](const nn::Batch& b) { return model->residual(b); });
    return res + batch.bicubic;
}

std::vector<Image> super_resolve(nn::EvDeblurVsr& model, const SequenceSample& sample, const TileOptions& tiles) {
    const torch::Tensor out = super_resolve(model, nn::make_batch(sample), tiles);
    std::vector<Image> frames;
    for (int64_t t = 0; t < out.size(1); ++t) frames.push_back(nn::tensor_to_image(out[0][t]));
    return frames;
}

Image comparison_grid(const Image& bicubic, const Image& output, const Image& gt) {
    if (!bicubic.same_shape(output) || !bicubic.same_shape(gt)) throw InvalidInput("comparison_grid: shape mismatch");
    constexpr int gap = 4;
    Image grid(bicubic.channels, bicubic.height, 3 * bicubic.width + 2 * gap, 1.0f);
    const Image* parts[] = {&bicubic, &output, &gt};
    for (int p = 0; p < 3; ++p)
        for (int c = 0; c < grid.channels; ++c)
            for (int y = 0; y < grid.height; ++y)
                for (int x = 0; x < bicubic.width; ++x)
                    grid.at(c, y, p * (bicubic.width + gap) + x) = std::clamp(parts[p]->at(c, y, x), 0.0f, 1.0f);
    return grid;
}

SequenceSample load_sample(const fs::path& clip_dir, int scale, int bins, bool with_ground_truth) {
    return assemble_sample(read_clip(clip_dir, with_ground_truth), scale, bins);
}

std::vector<std::string> dataset_clips(const fs::path& root) {
    auto names = list_clips(root);
    if (names.empty()) throw DataError("no clips under " + root.string());
    return names;
}

std::vector<SequenceSample> load_samples(const fs::path& root, int scale, int bins, bool with_ground_truth) {
    const DatasetManifest manifest = read_manifest(root);
    if (manifest.scale != scale)
        throw InvalidInput("dataset " + root.string() + " was synthesized at scale " + std::to_string(manifest.scale) +
                           ", model expects " + std::to_string(scale));
    std::vector<SequenceSample> out;
    for (const auto& name : dataset_clips(root)) out.push_back(load_sample(root / name, scale, bins, with_ground_truth));
    return out;
}

SequenceSample zero_events(SequenceSample sample) {
    for (auto* grids : {&sample.intra_voxels, &sample.fwd_voxels, &sample.bwd_voxels})
        for (auto& g : *grids) std::fill(g.data.begin(), g.data.end(), 0.0f);
    return sample;
}

EvalResult evaluate_dataset(nn::EvDeblurVsr& model, const fs::path& root, const EvalOptions& options) {
    const auto names = dataset_clips(root);
    const auto samples = load_samples(root, model->config.scale, model->config.voxel_bins, true);
    EvalResult result;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SequenceSample sample = options.zero_events ? zero_events(samples[i]) : samples[i];
        std::vector<Image> bicubic;
        const nn::Batch batch = nn::make_batch(sample);
        for (int64_t t = 0; t < batch.length(); ++t) bicubic.push_back(nn::tensor_to_image(batch.bicubic[0][t]));
        const std::vector<Image> pred = options.gt_as_pred ? sample.sharp_hr : super_resolve(model, sample, options.tiles);
        result.model.clips.push_back(metrics::evaluate_clip(names[i], pred, sample.sharp_hr));
        result.bicubic.clips.push_back(metrics::evaluate_clip(names[i], bicubic, sample.sharp_hr));
        if (!options.grid_dir.empty()) {
            fs::create_directories(options.grid_dir / names[i]);
            for (std::size_t t = 0; t < pred.size(); ++t)
                write_png(options.grid_dir / names[i] / frame_filename(static_cast<int>(t)),
                          comparison_grid(bicubic[t], pred[t], sample.sharp_hr[t]));
        }
    }
    return result;
}

}  // namespace evdvsr::app
