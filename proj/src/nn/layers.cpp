#include "evdvsr/nn/layers.hpp"

#include "evdvsr/error.hpp"

#include <cmath>
#include <string>

namespace F = torch::nn::functional;

namespace evdvsr::nn {

namespace {

torch::nn::Conv2d conv(int in, int out, int kernel) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel).padding(kernel / 2));
}

void zero_init(torch::nn::Conv2d& c) {
    torch::NoGradGuard guard;
    c->weight.zero_();
    if (c->bias.defined()) c->bias.zero_();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw InvalidInput(message);
}

}  // namespace

torch::Tensor leaky(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.1)); }

torch::Tensor sample_points(const torch::Tensor& input, const torch::Tensor& px, const torch::Tensor& py,
                            Padding padding) {
    const auto n = input.size(0), c = input.size(1), h = input.size(2), w = input.size(3);
    const auto p = px.size(1);
    torch::Tensor x = px, y = py;
    if (padding == Padding::border) {
        x = x.clamp(0, static_cast<double>(w - 1));
        y = y.clamp(0, static_cast<double>(h - 1));
    }
    const torch::Tensor x0f = x.detach().floor(), y0f = y.detach().floor();
    const torch::Tensor fx = x - x0f, fy = y - y0f;
    const torch::Tensor x0 = x0f.to(torch::kLong), y0 = y0f.to(torch::kLong);
    const torch::Tensor x1 = x0 + 1, y1 = y0 + 1;
    const torch::Tensor flat = input.reshape({n, c, h * w});

    const auto corner = [&](const torch::Tensor& xi, const torch::Tensor& yi) {
        const torch::Tensor index = yi.clamp(0, h - 1) * w + xi.clamp(0, w - 1);
        torch::Tensor v = flat.gather(2, index.unsqueeze(1).expand({n, c, p}));
        if (padding == Padding::zeros) {
            const torch::Tensor inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h);
            v = v * inside.unsqueeze(1).to(input.scalar_type());
        }
        return v;
    };
    const torch::Tensor wx1 = fx.unsqueeze(1), wy1 = fy.unsqueeze(1);
    const torch::Tensor wx0 = 1 - wx1, wy0 = 1 - wy1;
    return corner(x0, y0) * (wx0 * wy0) + corner(x1, y0) * (wx1 * wy0) + corner(x0, y1) * (wx0 * wy1) +
           corner(x1, y1) * (wx1 * wy1);
}

torch::Tensor backward_warp(const torch::Tensor& feature, const torch::Tensor& flow) {
    const auto n = feature.size(0), c = feature.size(1), h = feature.size(2), w = feature.size(3);
    require(flow.dim() == 4 && flow.size(0) == n && flow.size(1) == 2 && flow.size(2) == h && flow.size(3) == w,
            "backward_warp: flow must be [N,2,H,W] matching the feature");
    const auto opts = feature.options();
    const torch::Tensor gx = torch::arange(w, opts).view({1, 1, w}).expand({n, h, w});
    const torch::Tensor gy = torch::arange(h, opts).view({1, h, 1}).expand({n, h, w});
    const torch::Tensor px = (gx + flow.select(1, 0)).reshape({n, h * w});
    const torch::Tensor py = (gy + flow.select(1, 1)).reshape({n, h * w});
    return sample_points(feature, px, py, Padding::border).view({n, c, h, w});
}

torch::Tensor pixel_shuffle(const torch::Tensor& x, int r) {
    const auto n = x.size(0), crr = x.size(1), h = x.size(2), w = x.size(3);
    require(crr % (r * r) == 0, "pixel_shuffle: channels must be divisible by r^2");
    const auto c = crr / (r * r);
    return x.view({n, c, r, r, h, w}).permute({0, 1, 4, 2, 5, 3}).reshape({n, c, h * r, w * r});
}

torch::Tensor deform_conv3x3(const torch::Tensor& input, const torch::Tensor& offsets, const torch::Tensor& mask,
                             const torch::Tensor& weight, const torch::Tensor& bias, int groups) {
    const auto n = input.size(0), c = input.size(1), h = input.size(2), w = input.size(3);
    require(c % groups == 0, "deform_conv3x3: channels must be divisible by groups");
    require(offsets.size(1) == groups * 18 && mask.size(1) == groups * 9, "deform_conv3x3: offset/mask channel count");
    const auto opts = input.options();
    // Regular 3x3 grid: tap k = ky * 3 + kx sits at (kx - 1, ky - 1).
    const torch::Tensor tap = torch::arange(9, opts);
    const torch::Tensor tap_x = (torch::remainder(tap, 3) - 1).view({1, 1, 9, 1, 1});
    const torch::Tensor tap_y = (torch::floor(tap / 3) - 1).view({1, 1, 9, 1, 1});
    const torch::Tensor gx = torch::arange(w, opts).view({1, 1, 1, 1, w});
    const torch::Tensor gy = torch::arange(h, opts).view({1, 1, 1, h, 1});
    const torch::Tensor off = offsets.view({n, groups, 9, 2, h, w});
    const torch::Tensor px = (gx + tap_x + off.select(3, 0)).reshape({n * groups, 9 * h * w});
    const torch::Tensor py = (gy + tap_y + off.select(3, 1)).reshape({n * groups, 9 * h * w});
    const torch::Tensor grouped = input.reshape({n * groups, c / groups, h, w});
    torch::Tensor cols = sample_points(grouped, px, py, Padding::zeros).view({n, groups, c / groups, 9, h, w});
    cols = cols * mask.view({n, groups, 1, 9, h, w});
    cols = cols.reshape({n, c * 9, h, w});
    return F::conv2d(cols, weight.reshape({weight.size(0), c * 9, 1, 1}), F::Conv2dFuncOptions().bias(bias));
}

ChannelLayerNormImpl::ChannelLayerNormImpl(int channels) {
    weight = register_parameter("weight", torch::ones({channels}));
    bias = register_parameter("bias", torch::zeros({channels}));
}

torch::Tensor ChannelLayerNormImpl::forward(const torch::Tensor& x) {
    const torch::Tensor mean = x.mean(1, true);
    const torch::Tensor var = (x - mean).pow(2).mean(1, true);
    const torch::Tensor y = (x - mean) / torch::sqrt(var + 1e-6);
    return y * weight.view({1, -1, 1, 1}) + bias.view({1, -1, 1, 1});
}

ResidualBlockImpl::ResidualBlockImpl(int channels) {
    conv1 = register_module("conv1", conv(channels, channels, 3));
    conv2 = register_module("conv2", conv(channels, channels, 3));
    scale = register_parameter("scale", torch::full({1}, 0.1));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + scale * conv2(torch::relu(conv1(x))); }

FeatureExtractorImpl::FeatureExtractorImpl(int in, int channels, int count) : in_channels(in) {
    stem = register_module("stem", conv(in, channels, 3));
    blocks = register_module("blocks", torch::nn::ModuleList());
    for (int i = 0; i < count; ++i) blocks->push_back(ResidualBlock(channels));
}

torch::Tensor FeatureExtractorImpl::forward(const torch::Tensor& x) {
    require(x.dim() == 4 && x.size(1) == in_channels,
            "feature extractor: expected " + std::to_string(in_channels) + " input channels");
    torch::Tensor y = leaky(stem(x));
    for (const auto& block : *blocks) y = block->as<ResidualBlock>()->forward(y);
    return y;
}

torch::Tensor channel_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                const torch::Tensor& temperature, int heads, torch::Tensor* attention) {
    const auto n = q.size(0), c = q.size(1), h = q.size(2), w = q.size(3);
    const auto shape = std::vector<int64_t>{n, heads, c / heads, h * w};
    const torch::Tensor qn = F::normalize(q.reshape(shape), F::NormalizeFuncOptions().dim(-1));
    const torch::Tensor kn = F::normalize(k.reshape(shape), F::NormalizeFuncOptions().dim(-1));
    const torch::Tensor logits = qn.matmul(kn.transpose(-2, -1)) * temperature.view({1, heads, 1, 1});
    const torch::Tensor attn = torch::softmax(logits, -1);
    if (attention) *attention = attn;
    return attn.matmul(v.reshape(shape)).reshape({n, c, h, w});
}

ChannelAttentionBlockImpl::ChannelAttentionBlockImpl(int channels, int h) : heads(h) {
    qkv = register_module("qkv", conv(channels, 3 * channels, 1));
    project = register_module("project", conv(channels, channels, 1));
    temperature = register_parameter("temperature", torch::ones({heads}));
    zero_init(project);
}

torch::Tensor ChannelAttentionBlockImpl::forward(const torch::Tensor& x, torch::Tensor* attention) {
    const auto parts = qkv(x).chunk(3, 1);
    return x + project(channel_attention(parts[0], parts[1], parts[2], temperature, heads, attention));
}

CrossModalAttentionImpl::CrossModalAttentionImpl(int channels, int h, int mlp_ratio) : heads(h) {
    to_q = register_module("to_q", conv(channels, channels, 1));
    to_k = register_module("to_k", conv(channels, channels, 1));
    to_v = register_module("to_v", conv(channels, channels, 1));
    norm = register_module("norm", ChannelLayerNorm(channels));
    fc1 = register_module("fc1", conv(channels, mlp_ratio * channels, 1));
    fc2 = register_module("fc2", conv(mlp_ratio * channels, channels, 1));
    temperature = register_parameter("temperature", torch::ones({heads}));
    zero_init(to_v);
    zero_init(fc2);
}

torch::Tensor CrossModalAttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& kv,
                                               torch::Tensor* attention) {
    require(query.sizes() == kv.sizes(), "cross_modal_attention: feature shapes differ");
    const torch::Tensor y = query + channel_attention(to_q(query), to_k(kv), to_v(kv), temperature, heads, attention);
    return y + fc2(torch::gelu(fc1(norm(y))));
}

RfdImpl::RfdImpl(int channels, int heads, int mlp_ratio, bool e2i_first, bool i2e)
    : event_to_image_first(e2i_first), use_i2e(i2e) {
    cab_frame = register_module("cab_frame", ChannelAttentionBlock(channels, heads));
    cab_event = register_module("cab_event", ChannelAttentionBlock(channels, heads));
    image_to_event = register_module("image_to_event", CrossModalAttention(channels, heads, mlp_ratio));
    event_to_image = register_module("event_to_image", CrossModalAttention(channels, heads, mlp_ratio));
}

RfdOutput RfdImpl::forward(const torch::Tensor& frame_feat, const torch::Tensor& event_feat) {
    require(frame_feat.sizes() == event_feat.sizes(), "rfd: feature shapes differ");
    const torch::Tensor fi = cab_frame(frame_feat);
    const torch::Tensor fe = cab_event(event_feat);
    RfdOutput out;
    if (!event_to_image_first) {
        out.event = use_i2e ? image_to_event(fe, fi) : fe;
        out.frame = event_to_image(fi, out.event);
    } else {
        out.frame = event_to_image(fi, fe);
        out.event = use_i2e ? image_to_event(fe, out.frame) : fe;
    }
    return out;
}

FlowEstimatorImpl::FlowEstimatorImpl(int hidden, int count) : levels(count) {
    stages = register_module("stages", torch::nn::ModuleList());
    for (int l = 0; l < levels; ++l) {
        torch::nn::Sequential stage(conv(8, hidden, 3), torch::nn::ReLU(), conv(hidden, hidden, 3), torch::nn::ReLU(),
                                    conv(hidden, 2, 3));
        auto last = stage[4]->as<torch::nn::Conv2d>();
        torch::NoGradGuard guard;
        last->weight.zero_();
        last->bias.zero_();
        stages->push_back(stage);
    }
}

torch::Tensor FlowEstimatorImpl::forward(const torch::Tensor& frame, const torch::Tensor& ref) {
    require(frame.sizes() == ref.sizes() && frame.dim() == 4 && frame.size(1) == 3,
            "estimate_flow: expected two [N,3,H,W] frames of equal shape");
    const int64_t factor = int64_t{1} << (levels - 1);
    require(frame.size(2) % factor == 0 && frame.size(3) % factor == 0,
            "estimate_flow: H and W must be divisible by " + std::to_string(factor));
    std::vector<torch::Tensor> a{frame - 0.5}, b{ref - 0.5};
    for (int l = 1; l < levels; ++l) {
        a.push_back(F::avg_pool2d(a.back(), F::AvgPool2dFuncOptions(2)));
        b.push_back(F::avg_pool2d(b.back(), F::AvgPool2dFuncOptions(2)));
    }
    const auto& coarse = a.back();
    torch::Tensor flow = torch::zeros({coarse.size(0), 2, coarse.size(2), coarse.size(3)}, coarse.options());
    for (int l = levels - 1; l >= 0; --l) {
        if (l != levels - 1)
            flow = 2.0 * F::interpolate(flow, F::InterpolateFuncOptions()
                                                  .size(std::vector<int64_t>{a[l].size(2), a[l].size(3)})
                                                  .mode(torch::kBilinear)
                                                  .align_corners(false));
        const torch::Tensor warped = backward_warp(b[l], flow);
        flow = flow + stages[levels - 1 - l]->as<torch::nn::Sequential>()->forward(torch::cat({a[l], warped, flow}, 1));
    }
    return flow;
}

EgaImpl::EgaImpl(int c) : channels(c) {
    event_proj = register_module("event_proj", conv(c, c, 1));
    hidden_proj = register_module("hidden_proj", conv(c, c, 1));
    zero_init(event_proj);
}

torch::Tensor EgaImpl::forward(const torch::Tensor& h_prev, const torch::Tensor& event_feat, torch::Tensor* scores) {
    require(h_prev.sizes() == event_feat.sizes(), "ega: hidden state and event feature shapes differ");
    const torch::Tensor e = event_proj(event_feat);
    const torch::Tensor s = torch::softmax(e * hidden_proj(h_prev), 1);
    if (scores) *scores = s;
    return h_prev * (static_cast<double>(channels) * s) + e;
}

HdaImpl::HdaImpl(const HdaOptions& o) : options(o) {
    const int c = o.channels;
    ega = register_module("ega", Ega(c));
    const int pool = (o.use_ega ? c : 0) + (o.use_fga ? c : 0) + 2 * c + 2;
    cond1 = register_module("cond1", conv(pool, c, 3));
    cond2 = register_module("cond2", conv(c, c, 3));
    cond_out = register_module("cond_out", conv(c, o.groups * 27, 3));
    zero_init(cond_out);
    auto ref = conv(c, c, 3);  // default conv initialization for the deformable kernel
    dcn_weight = register_parameter("dcn_weight", ref->weight.detach().clone());
    dcn_bias = register_parameter("dcn_bias", ref->bias.detach().clone());
}

torch::Tensor HdaImpl::forward(const torch::Tensor& h_prev, const torch::Tensor& inter_feat, const torch::Tensor& flow,
                               const torch::Tensor& event_feat, const torch::Tensor& frame_feat, HdaTrace* trace) {
    require(h_prev.sizes() == inter_feat.sizes() && h_prev.sizes() == event_feat.sizes() &&
                h_prev.sizes() == frame_feat.sizes(),
            "hda: inputs must be spatially aligned with equal channel counts");
    require(flow.size(0) == h_prev.size(0) && flow.size(1) == 2 && flow.size(2) == h_prev.size(2) &&
                flow.size(3) == h_prev.size(3),
            "hda: flow shape mismatch");
    const auto n = h_prev.size(0), h = h_prev.size(2), w = h_prev.size(3);
    const int g = options.groups;
    std::vector<torch::Tensor> pool;
    torch::Tensor scores;
    if (options.use_ega) pool.push_back(ega(h_prev, inter_feat, &scores));
    const torch::Tensor guide = options.use_fga ? flow : torch::zeros_like(flow);
    if (options.use_fga) pool.push_back(backward_warp(h_prev, flow));
    pool.push_back(event_feat);
    pool.push_back(frame_feat);
    pool.push_back(guide);
    torch::Tensor c = leaky(cond1(torch::cat(pool, 1)));
    c = leaky(cond2(c));
    const torch::Tensor raw = cond_out(c);
    const torch::Tensor raw_offsets = raw.narrow(1, 0, g * 18);
    const torch::Tensor raw_mask = raw.narrow(1, g * 18, g * 9);
    const double bound = options.offset_clamp;
    const torch::Tensor residual =
        options.break_clamp ? raw_offsets : bound * torch::tanh(raw_offsets / bound);
    const torch::Tensor offsets =
        residual + guide.view({n, 1, 1, 2, h, w}).expand({n, g, 9, 2, h, w}).reshape({n, g * 18, h, w});
    const torch::Tensor mask = 2.0 * torch::sigmoid(raw_mask);
    if (trace) *trace = {offsets, residual, mask, scores};
    return deform_conv3x3(h_prev, offsets, mask, dcn_weight, dcn_bias, g);
}

FusionImpl::FusionImpl(int in, int channels) {
    conv1 = register_module("conv1", conv(in, channels, 3));
    conv2 = register_module("conv2", conv(channels, channels, 3));
}

torch::Tensor FusionImpl::forward(const torch::Tensor& x) { return conv2(leaky(conv1(x))); }

UpsamplerImpl::UpsamplerImpl(int channels, int s) : scale(s) {
    require(s == 2 || s == 4, "upsample: scale must be 2 or 4");
    stages = register_module("stages", torch::nn::ModuleList());
    for (int i = 0; i < (s == 4 ? 2 : 1); ++i) stages->push_back(conv(channels, 4 * channels, 3));
    conv_last = register_module("conv_last", conv(channels, 3, 3));
    zero_init(conv_last);
}

torch::Tensor UpsamplerImpl::forward(const torch::Tensor& x) {
    torch::Tensor y = x;
    for (const auto& stage : *stages) y = leaky(pixel_shuffle(stage->as<torch::nn::Conv2d>()->forward(y), 2));
    return conv_last(y);
}

}  // namespace evdvsr::nn
