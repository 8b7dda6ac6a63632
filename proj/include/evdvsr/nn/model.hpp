#pragma once

#include "evdvsr/config.hpp"
#include "evdvsr/nn/layers.hpp"
#include "evdvsr/sequence.hpp"

#include <span>
#include <vector>

namespace evdvsr::nn {

/// Stacked network inputs. Shapes use N = batch, T = frames, B = voxel bins,
/// (h, w) LR size and (H, W) = s * (h, w).
struct Batch {
    torch::Tensor frames;   // [N,T,3,h,w]
    torch::Tensor intra;    // [N,T,B,h,w]
    torch::Tensor fwd;      // [N,T-1,B,h,w]
    torch::Tensor bwd;      // [N,T-1,B,h,w]
    torch::Tensor bicubic;  // [N,T,3,H,W] skip path, precomputed on the CPU side
    torch::Tensor gt;       // [N,T,3,H,W] or undefined
    torch::Tensor masks;    // [N,T,3,H,W] or undefined
    int64_t batch() const { return frames.size(0); }
    int64_t length() const { return frames.size(1); }
    Batch to(torch::ScalarType dtype) const;
};

torch::Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const torch::Tensor& t);
torch::Tensor voxel_to_tensor(const events::VoxelGrid& grid);

/// Samples must agree in length and geometry. Ground truth is stacked only when every sample has it.
Batch make_batch(std::span<const SequenceSample> samples);
Batch make_batch(const SequenceSample& sample);

/// Per-frame encodings shared by both propagation directions.
struct Encoded {
    torch::Tensor frame;      // F^{i'} [N,T,C,h,w]
    torch::Tensor event;      // F^{e'} [N,T,C,h,w]
    torch::Tensor inter_fwd;  // [N,T-1,C,h,w] features of forward inter voxels
    torch::Tensor inter_bwd;  // [N,T-1,C,h,w] features of backward inter voxels
    torch::Tensor flow_fwd;   // [N,T-1,2,h,w] flow t+1 -> t
    torch::Tensor flow_bwd;   // [N,T-1,2,h,w] flow t -> t+1
};

class EvDeblurVsrImpl : public torch::nn::Module {
public:
    explicit EvDeblurVsrImpl(const ModelConfig& config, bool break_clamp = false);

    /// HR clip [N,T,3,H,W] = upsampled residual + bicubic skip.
    torch::Tensor forward(const Batch& batch);
    /// Network output without the bicubic skip.
    torch::Tensor residual(const Batch& batch);

    Encoded encode(const Batch& batch);
    /// Backward sweep t = T-1 .. 0; returns the per-frame outputs b_t.
    std::vector<torch::Tensor> propagate_backward(const Encoded& enc);
    /// Forward sweep t = 0 .. T-1 consuming the backward outputs. With
    /// `backward` null the sweep runs on its own (b_t replaced by zeros).
    std::vector<torch::Tensor> propagate_forward(const Encoded& enc, const std::vector<torch::Tensor>* backward);

    /// Throws InvalidInput if the batch does not fit the configuration.
    void check(const Batch& batch) const;

    std::vector<torch::Tensor> flow_parameters();
    std::vector<torch::Tensor> main_parameters();

    ModelConfig config;
    FeatureExtractor frame_extractor{nullptr}, intra_extractor{nullptr}, inter_extractor{nullptr};
    Rfd rfd{nullptr};
    FlowEstimator flow{nullptr};
    Hda hda_backward{nullptr}, hda_forward{nullptr};
    Fusion fuse_backward{nullptr}, fuse_forward{nullptr};
    Upsampler upsampler{nullptr};
};
TORCH_MODULE(EvDeblurVsr);

}  // namespace evdvsr::nn
