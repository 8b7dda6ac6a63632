#include "evdvsr/nn/model.hpp"

#include "evdvsr/error.hpp"
#include "evdvsr/resize.hpp"

#include <algorithm>
#include <cstring>

namespace evdvsr::nn {

namespace {

torch::Tensor stack_or_empty(std::vector<torch::Tensor> items, std::vector<int64_t> empty_shape) {
    if (items.empty()) return torch::zeros(empty_shape);
    return torch::stack(items);
}

torch::Tensor split_time(const torch::Tensor& flat, int64_t n, int64_t t) {
    auto sizes = flat.sizes().vec();
    sizes[0] = t;
    sizes.insert(sizes.begin(), n);
    return flat.view(sizes);
}

}  // namespace

Batch Batch::to(torch::ScalarType dtype) const {
    const auto cast = [&](const torch::Tensor& t) { return t.defined() ? t.to(dtype) : t; };
    return {cast(frames), cast(intra), cast(fwd), cast(bwd), cast(bicubic), cast(gt), cast(masks)};
}

torch::Tensor image_to_tensor(const Image& img) {
    auto t = torch::empty({img.channels, img.height, img.width}, torch::kFloat);
    std::memcpy(t.data_ptr<float>(), img.data.data(), img.data.size() * sizeof(float));
    return t;
}

Image tensor_to_image(const torch::Tensor& tensor) {
    const torch::Tensor t = tensor.detach().to(torch::kFloat).contiguous();
    if (t.dim() != 3) throw InvalidInput("tensor_to_image: expected a [C,H,W] tensor");
    Image img(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), static_cast<int>(t.size(2)));
    std::memcpy(img.data.data(), t.data_ptr<float>(), img.data.size() * sizeof(float));
    return img;
}

torch::Tensor voxel_to_tensor(const events::VoxelGrid& grid) {
    auto t = torch::empty({grid.bins, grid.height, grid.width}, torch::kFloat);
    std::memcpy(t.data_ptr<float>(), grid.data.data(), grid.data.size() * sizeof(float));
    return t;
}

Batch make_batch(std::span<const SequenceSample> samples) {
    if (samples.empty()) throw InvalidInput("make_batch: no samples");
    const auto& first = samples.front();
    const int bins = first.intra_voxels.empty() ? 0 : first.intra_voxels.front().bins;
    const bool with_gt = std::all_of(samples.begin(), samples.end(), [](const auto& s) { return s.has_ground_truth(); });
    std::vector<torch::Tensor> frames, intra, fwd, bwd, bicubic, gt, masks;
    for (const auto& s : samples) {
        s.validate(bins);
        if (s.length() != first.length() || s.lr_height() != first.lr_height() || s.lr_width() != first.lr_width() ||
            s.scale != first.scale)
            throw InvalidInput("make_batch: samples differ in length or geometry");
        std::vector<torch::Tensor> f, in, fw, bw, bi, g, m;
        for (const auto& img : s.blurry_lr) {
            f.push_back(image_to_tensor(img));
            bi.push_back(image_to_tensor(upsample_bicubic(img, s.scale)));
        }
        for (const auto& v : s.intra_voxels) in.push_back(voxel_to_tensor(v));
        for (const auto& v : s.fwd_voxels) fw.push_back(voxel_to_tensor(v));
        for (const auto& v : s.bwd_voxels) bw.push_back(voxel_to_tensor(v));
        const int64_t h = s.lr_height(), w = s.lr_width();
        frames.push_back(torch::stack(f));
        bicubic.push_back(torch::stack(bi));
        intra.push_back(torch::stack(in));
        fwd.push_back(stack_or_empty(fw, {0, bins, h, w}));
        bwd.push_back(stack_or_empty(bw, {0, bins, h, w}));
        if (with_gt) {
            for (const auto& img : s.sharp_hr) g.push_back(image_to_tensor(img));
            for (const auto& img : s.edge_masks) m.push_back(image_to_tensor(img));
            gt.push_back(torch::stack(g));
            masks.push_back(torch::stack(m));
        }
    }
    Batch b;
    b.frames = torch::stack(frames);
    b.intra = torch::stack(intra);
    b.fwd = torch::stack(fwd);
    b.bwd = torch::stack(bwd);
    b.bicubic = torch::stack(bicubic);
    if (with_gt) {
        b.gt = torch::stack(gt);
        b.masks = torch::stack(masks);
    }
    return b;
}

Batch make_batch(const SequenceSample& sample) { return make_batch(std::span<const SequenceSample>(&sample, 1)); }

EvDeblurVsrImpl::EvDeblurVsrImpl(const ModelConfig& cfg, bool break_clamp) : config(cfg) {
    config.validate();
    const int c = config.channels;
    frame_extractor = register_module("frame_extractor", FeatureExtractor(3, c, config.residual_blocks));
    intra_extractor = register_module("intra_extractor", FeatureExtractor(config.voxel_bins, c, config.residual_blocks));
    inter_extractor = register_module("inter_extractor", FeatureExtractor(config.voxel_bins, c, config.residual_blocks));
    rfd = register_module("rfd", Rfd(c, config.attention_heads, config.mlp_ratio,
                                     config.rfd_order == RfdOrder::event_to_image_first, config.use_i2e));
    flow = register_module("flow", FlowEstimator(config.flow_channels));
    HdaOptions hda{c, config.dcn_groups, config.dcn_offset_clamp, config.use_ega, config.use_fga, break_clamp};
    hda_backward = register_module("hda_backward", Hda(hda));
    hda_forward = register_module("hda_forward", Hda(hda));
    fuse_backward = register_module("fuse_backward", Fusion(2 * c, c));
    fuse_forward = register_module("fuse_forward", Fusion(3 * c, c));
    upsampler = register_module("upsampler", Upsampler(c, config.scale));
}

void EvDeblurVsrImpl::check(const Batch& b) const {
    const auto bad = [](const std::string& what) { throw InvalidInput("model: " + what); };
    if (!b.frames.defined() || b.frames.dim() != 5 || b.frames.size(2) != 3) bad("frames must be [N,T,3,h,w]");
    const int64_t n = b.frames.size(0), t = b.frames.size(1), h = b.frames.size(3), w = b.frames.size(4);
    if (t < 1) bad("empty clip");
    const std::vector<int64_t> voxel{n, t, config.voxel_bins, h, w};
    const std::vector<int64_t> inter{n, t - 1, config.voxel_bins, h, w};
    if (b.intra.sizes() != voxel) bad("intra voxels do not match frames or voxel_bins");
    if (b.fwd.sizes() != inter || b.bwd.sizes() != inter) bad("inter voxels do not match frames or voxel_bins");
    const std::vector<int64_t> hr{n, t, 3, h * config.scale, w * config.scale};
    if (b.bicubic.sizes() != hr) bad("bicubic skip does not match the configured scale");
    if (h % 4 != 0 || w % 4 != 0) bad("LR height and width must be divisible by 4");
}

Encoded EvDeblurVsrImpl::encode(const Batch& b) {
    check(b);
    const int64_t n = b.batch(), t = b.length();
    Encoded enc;
    const torch::Tensor frames = b.frames.flatten(0, 1);
    const torch::Tensor intra = config.use_intra ? b.intra : torch::zeros_like(b.intra);
    const RfdOutput r = rfd(frame_extractor(frames), intra_extractor(intra.flatten(0, 1)));
    enc.frame = split_time(r.frame, n, t);
    enc.event = split_time(r.event, n, t);
    if (t > 1) {
        const torch::Tensor next = b.frames.narrow(1, 1, t - 1).flatten(0, 1);
        const torch::Tensor prev = b.frames.narrow(1, 0, t - 1).flatten(0, 1);
        const auto flows = flow(torch::cat({next, prev}), torch::cat({prev, next})).chunk(2);
        enc.flow_fwd = split_time(flows[0], n, t - 1);
        enc.flow_bwd = split_time(flows[1], n, t - 1);
        const torch::Tensor fwd = config.use_inter ? b.fwd : torch::zeros_like(b.fwd);
        const torch::Tensor bwd = config.use_inter ? b.bwd : torch::zeros_like(b.bwd);
        const auto inter = inter_extractor(torch::cat({fwd.flatten(0, 1), bwd.flatten(0, 1)})).chunk(2);
        enc.inter_fwd = split_time(inter[0], n, t - 1);
        enc.inter_bwd = split_time(inter[1], n, t - 1);
    }
    return enc;
}

std::vector<torch::Tensor> EvDeblurVsrImpl::propagate_backward(const Encoded& enc) {
    const int64_t t_len = enc.frame.size(1);
    std::vector<torch::Tensor> out(static_cast<std::size_t>(t_len));
    torch::Tensor h;
    for (int64_t t = t_len - 1; t >= 0; --t) {
        const torch::Tensor fi = enc.frame.select(1, t), fe = enc.event.select(1, t);
        const torch::Tensor aligned =
            t == t_len - 1 ? torch::zeros_like(fi)
                           : hda_backward(h, enc.inter_bwd.select(1, t), enc.flow_bwd.select(1, t), fe, fi);
        h = fuse_backward(torch::cat({aligned, fi}, 1));
        out[static_cast<std::size_t>(t)] = h;
    }
    return out;
}

std::vector<torch::Tensor> EvDeblurVsrImpl::propagate_forward(const Encoded& enc,
                                                              const std::vector<torch::Tensor>* backward) {
    const int64_t t_len = enc.frame.size(1);
    std::vector<torch::Tensor> out;
    torch::Tensor h;
    for (int64_t t = 0; t < t_len; ++t) {
        const torch::Tensor fi = enc.frame.select(1, t), fe = enc.event.select(1, t);
        const torch::Tensor aligned =
            t == 0 ? torch::zeros_like(fi)
                   : hda_forward(h, enc.inter_fwd.select(1, t - 1), enc.flow_fwd.select(1, t - 1), fe, fi);
        const torch::Tensor b = backward ? (*backward)[static_cast<std::size_t>(t)] : torch::zeros_like(fi);
        h = fuse_forward(torch::cat({aligned, fi, b}, 1));
        out.push_back(h);
    }
    return out;
}

torch::Tensor EvDeblurVsrImpl::residual(const Batch& b) {
    const Encoded enc = encode(b);
    const auto back = propagate_backward(enc);
    const auto fwd = propagate_forward(enc, &back);
    const torch::Tensor features = torch::stack(fwd, 1);
    return split_time(upsampler(features.flatten(0, 1)), b.batch(), b.length());
}

torch::Tensor EvDeblurVsrImpl::forward(const Batch& b) { return residual(b) + b.bicubic; }

std::vector<torch::Tensor> EvDeblurVsrImpl::flow_parameters() { return flow->parameters(); }

std::vector<torch::Tensor> EvDeblurVsrImpl::main_parameters() {
    std::vector<torch::Tensor> out;
    for (const auto& item : named_parameters())
        if (item.key().rfind("flow.", 0) != 0) out.push_back(item.value());
    return out;
}

}  // namespace evdvsr::nn
