#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "priordepth/attention.hpp"
#include "priordepth/nn_ops.hpp"
#include "priordepth/tensor.hpp"

namespace priordepth {

// conv -> optional batch norm -> optional activation
struct ConvUnit {
    ConvParams conv;
    bool has_bn = false;
    BatchNormParams bn;
    bool has_act = false;
    Activation act = Activation::HardSwish;

    Tensor4 forward(const Tensor4& x) const;
    std::size_t param_count() const;
};

// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] init, fan_in = in_c/groups * kh * kw.
ConvUnit seeded_conv_unit(int in_c, int out_c, int k, int stride, int padding, int groups,
                          bool with_bn, bool with_act, Activation act, std::mt19937& rng);

// 3x3 depthwise + 1x1 pointwise, batch norm and hardswish after the pointwise.
struct PatchEmbedUnit {
    ConvUnit dw;
    ConvUnit pw;

    Tensor4 forward(const Tensor4& x) const;
    std::size_t param_count() const;
};

// Three parallel paths of 1, 2 and 3 stacked embed units; stacking grows the
// receptive field (two 3x3 cover 5x5, three cover 7x7). The first unit of
// each path downsamples by 2 so all paths emit the same shape.
struct MsPatchEmbedParams {
    std::array<std::vector<PatchEmbedUnit>, 3> paths;

    std::array<Tensor4, 3> forward(const Tensor4& x) const;
    std::size_t param_count() const;
};

// 1x1 projections to q/k/v followed by factorized attention over the
// flattened (h*w) token grid.
struct GlobalBranchParams {
    ConvParams wq, wk, wv;
    int heads = 1;

    Tensor4 forward(const Tensor4& x) const;
    std::size_t param_count() const;
};

// Depthwise bottleneck: 1x1, 3x3 depthwise, 1x1.
struct LocalBranchParams {
    ConvUnit c1, dw, c2;

    Tensor4 forward(const Tensor4& x) const;
    std::size_t param_count() const;
};

struct HybridLayerConfig {
    int in_channels = 0;
    int embed_dim = 0;
    int n_global = 3; // 2 in the first hybrid stage, 3 afterwards
};

// Patch embed -> n_global attention branches + 1 local branch on path 0 ->
// channel concat -> 1x1 interaction conv back to embed_dim. Downsamples by 2.
struct HybridLayerParams {
    HybridLayerConfig cfg;
    MsPatchEmbedParams embed;
    std::vector<GlobalBranchParams> global_branches;
    LocalBranchParams local;
    ConvParams interaction;

    std::size_t param_count() const;
};

Tensor4 hybrid_layer(const Tensor4& x, const HybridLayerParams& p);

// Two 3x3 convolutions (the first strided) halving the spatial dims.
struct ConvStemParams {
    ConvUnit a, b;
    std::size_t param_count() const;
};

Tensor4 conv_stem(const Tensor4& image, const ConvStemParams& p);

std::array<Tensor4, 3> ms_patch_embed(const Tensor4& x, const MsPatchEmbedParams& p);

// conv -> x2 bilinear upsample -> concat skip -> CPA -> conv
struct ContextPriorLayerParams {
    ConvUnit pre;
    CpaParams cpa;
    ConvUnit post;
    std::size_t param_count() const;
};

Tensor4 context_prior_layer(const Tensor4& x, const Tensor4& skip,
                            const ContextPriorLayerParams& p);

// conv -> x2 bilinear upsample -> concat skip -> energy gate + batch norm -> conv
struct SemanticPriorLayerParams {
    ConvUnit pre;
    EnergyConfig energy;
    BatchNormParams refine_bn;
    ConvUnit post;
    std::size_t param_count() const;
};

Tensor4 semantic_prior_layer(const Tensor4& x, const Tensor4& skip,
                             const SemanticPriorLayerParams& p);

struct DepthNetConfig {
    int in_channels = 3;
    int stem_width = 16;
    std::array<int, 4> stage_widths{16, 24, 32, 48};
    int cpa_reduction = 8;
};

// Encoder: stem + four hybrid layers (H/2 .. H/32). Decoder: one context
// prior layer, three semantic prior layers, and a final depth layer, with
// stage-k features skipped into the decoder layer of matching resolution.
// Sigmoid heads sit at 1/8, 1/4, 1/2 and full resolution.
struct DepthNetParams {
    DepthNetConfig cfg;
    ConvStemParams stem;
    std::array<HybridLayerParams, 4> stages;
    ContextPriorLayerParams context;
    std::array<SemanticPriorLayerParams, 3> semantic;
    ConvUnit depth_pre;
    std::array<ConvUnit, 4> heads; // at 1/8, 1/4, 1/2, 1/1

    static DepthNetParams seeded(const DepthNetConfig& cfg, std::uint32_t seed);
    std::size_t param_count() const;

    std::map<std::string, Tensor4> named_tensors() const;
    void assign_named_tensors(const std::map<std::string, Tensor4>& tensors);
};

struct DepthNetOutput {
    // sigmoid maps ordered full, 1/2, 1/4, 1/8 resolution
    std::array<Tensor4, 4> sigmoid_maps;
};

DepthNetOutput depthnet_forward(const Tensor4& image, const DepthNetParams& p);

// Parameter directory I/O: one PLT1 file per tensor plus manifest.json
// listing name -> file and shape.
void save_params(const std::map<std::string, Tensor4>& tensors, const std::string& dir);
std::map<std::string, Tensor4> load_params(const std::string& dir);

} // namespace priordepth
