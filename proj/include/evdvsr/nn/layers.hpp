#pragma once

#include <torch/torch.h>

namespace evdvsr::nn {

enum class Padding { border, zeros };

/// Bilinear sampling of `input` [N,C,H,W] at points (px, py) [N,P] given in
/// pixel coordinates. Returns [N,C,P]. Integer coordinates reproduce the
/// input exactly. Differentiable in the input and in the coordinates.
torch::Tensor sample_points(const torch::Tensor& input, const torch::Tensor& px, const torch::Tensor& py,
                            Padding padding);

/// Samples `feature` at (x + dx, y + dy), flow [N,2,H,W]; border-clamped.
torch::Tensor backward_warp(const torch::Tensor& feature, const torch::Tensor& flow);

/// [N, C*r*r, H, W] -> [N, C, H*r, W*r] (same channel ordering as the usual sub-pixel convolution).
torch::Tensor pixel_shuffle(const torch::Tensor& x, int r);

/// Modulated deformable 3x3 convolution (stride 1, padding 1). `offsets`
/// [N, G*9*2, H, W] are displacements from the regular grid, laid out as
/// (group, tap, {dx, dy}); `mask` [N, G*9, H, W]. Out-of-image samples are zero.
torch::Tensor deform_conv3x3(const torch::Tensor& input, const torch::Tensor& offsets, const torch::Tensor& mask,
                             const torch::Tensor& weight, const torch::Tensor& bias, int groups);

torch::Tensor leaky(const torch::Tensor& x);

/// Layer normalization over the channel axis of a [N,C,H,W] map.
class ChannelLayerNormImpl : public torch::nn::Module {
public:
    explicit ChannelLayerNormImpl(int channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::Tensor weight, bias;
};
TORCH_MODULE(ChannelLayerNorm);

/// x + scale * conv(relu(conv(x))). The scalar scale is learnable.
class ResidualBlockImpl : public torch::nn::Module {
public:
    explicit ResidualBlockImpl(int channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    torch::Tensor scale;
};
TORCH_MODULE(ResidualBlock);

/// Stem conv + LeakyReLU followed by residual blocks.
class FeatureExtractorImpl : public torch::nn::Module {
public:
    FeatureExtractorImpl(int in_channels, int channels, int blocks);
    torch::Tensor forward(const torch::Tensor& x);

    int in_channels;
    torch::nn::Conv2d stem{nullptr};
    torch::nn::ModuleList blocks;
};
TORCH_MODULE(FeatureExtractor);

/// Attention over the channel axis: for each head, an (C/h x C/h) map
/// softmax(norm(q) norm(k)^T * temperature) built from spatially L2-normalized
/// queries and keys. Returns attn @ v and optionally the attention maps.
torch::Tensor channel_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                const torch::Tensor& temperature, int heads, torch::Tensor* attention = nullptr);

/// Multi-head channel self-attention block with residual; output projection zero-initialized.
class ChannelAttentionBlockImpl : public torch::nn::Module {
public:
    ChannelAttentionBlockImpl(int channels, int heads);
    torch::Tensor forward(const torch::Tensor& x, torch::Tensor* attention = nullptr);

    int heads;
    torch::nn::Conv2d qkv{nullptr}, project{nullptr};
    torch::Tensor temperature;
};
TORCH_MODULE(ChannelAttentionBlock);

/// Queries from one modality, keys/values from the other:
/// y = query + attn(q, k) v; out = y + MLP(LN(y)). Value path and MLP output start at zero.
class CrossModalAttentionImpl : public torch::nn::Module {
public:
    CrossModalAttentionImpl(int channels, int heads, int mlp_ratio);
    torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& kv, torch::Tensor* attention = nullptr);

    int heads;
    torch::nn::Conv2d to_q{nullptr}, to_k{nullptr}, to_v{nullptr}, fc1{nullptr}, fc2{nullptr};
    ChannelLayerNorm norm{nullptr};
    torch::Tensor temperature;
};
TORCH_MODULE(CrossModalAttention);

struct RfdOutput {
    torch::Tensor frame;  // deblurred frame feature
    torch::Tensor event;  // scene-enhanced event feature
};

/// Reciprocal feature deblurring between the frame and event features.
class RfdImpl : public torch::nn::Module {
public:
    RfdImpl(int channels, int heads, int mlp_ratio, bool event_to_image_first, bool use_i2e);
    RfdOutput forward(const torch::Tensor& frame_feat, const torch::Tensor& event_feat);

    bool event_to_image_first;
    bool use_i2e;
    ChannelAttentionBlock cab_frame{nullptr}, cab_event{nullptr};
    CrossModalAttention image_to_event{nullptr};  // queries from events, keys/values from frames
    CrossModalAttention event_to_image{nullptr};  // queries from frames, keys/values from events
};
TORCH_MODULE(Rfd);

/// Three-level coarse-to-fine residual flow network. forward(frame, ref)
/// returns flow [N,2,H,W] with frame(x) ~ ref(x + flow(x)). H and W must be divisible by 4.
class FlowEstimatorImpl : public torch::nn::Module {
public:
    explicit FlowEstimatorImpl(int hidden, int levels = 3);
    torch::Tensor forward(const torch::Tensor& frame, const torch::Tensor& ref);

    int levels;
    torch::nn::ModuleList stages;
};
TORCH_MODULE(FlowEstimator);

/// Event-guided alignment: similarity between the hidden state and the
/// inter-frame event feature modulates the hidden state channel-wise.
class EgaImpl : public torch::nn::Module {
public:
    explicit EgaImpl(int channels);
    torch::Tensor forward(const torch::Tensor& h_prev, const torch::Tensor& event_feat, torch::Tensor* scores = nullptr);

    int channels;
    torch::nn::Conv2d event_proj{nullptr}, hidden_proj{nullptr};
};
TORCH_MODULE(Ega);

struct HdaOptions {
    int channels = 32;
    int groups = 4;
    double offset_clamp = 10.0;
    bool use_ega = true;
    bool use_fga = true;
    bool break_clamp = false;  // fault injection: drop the offset bound
};

struct HdaTrace {
    torch::Tensor offsets;   // [N, G*9*2, H, W], including the flow
    torch::Tensor residual;  // offsets minus flow
    torch::Tensor mask;
    torch::Tensor scores;    // EGA similarity scores
};

/// Hybrid deformable alignment of the previous hidden state.
class HdaImpl : public torch::nn::Module {
public:
    explicit HdaImpl(const HdaOptions& options);
    torch::Tensor forward(const torch::Tensor& h_prev, const torch::Tensor& inter_feat, const torch::Tensor& flow,
                          const torch::Tensor& event_feat, const torch::Tensor& frame_feat, HdaTrace* trace = nullptr);

    HdaOptions options;
    Ega ega{nullptr};
    torch::nn::Conv2d cond1{nullptr}, cond2{nullptr}, cond_out{nullptr};
    torch::Tensor dcn_weight, dcn_bias;
};
TORCH_MODULE(Hda);

/// Two-layer convolutional fusion: conv -> LeakyReLU -> conv.
class FusionImpl : public torch::nn::Module {
public:
    FusionImpl(int in_channels, int channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
};
TORCH_MODULE(Fusion);

/// Sub-pixel upsampling head producing the HR residual (the bicubic skip is added by the caller).
class UpsamplerImpl : public torch::nn::Module {
public:
    UpsamplerImpl(int channels, int scale);
    torch::Tensor forward(const torch::Tensor& x);

    int scale;
    torch::nn::ModuleList stages;
    torch::nn::Conv2d conv_last{nullptr};
};
TORCH_MODULE(Upsampler);

}  // namespace evdvsr::nn
