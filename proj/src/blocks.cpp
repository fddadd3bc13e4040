#include "priordepth/blocks.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "priordepth/tensor_io.hpp"

namespace priordepth {

namespace {

ConvParams seeded_conv(int in_c, int out_c, int k, int stride, int padding, int groups,
                       std::mt19937& rng) {
    ConvParams p;
    const int fan_in = (in_c / groups) * k * k;
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    p.weights = random_uniform(out_c, in_c / groups, k, k, -bound, bound, rng);
    p.bias.resize(out_c);
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (float& b : p.bias) b = dist(rng);
    p.stride = stride;
    p.padding = padding;
    p.groups = groups;
    return p;
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
    if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w())
        fail_shape("concat_channels", "spatial/batch dims differ");
    Tensor4 y(a.n(), a.c() + b.c(), a.h(), a.w());
    for (int n = 0; n < a.n(); ++n) {
        for (int c = 0; c < a.c(); ++c)
            for (int i = 0; i < a.h(); ++i)
                for (int j = 0; j < a.w(); ++j) y.at(n, c, i, j) = a.at(n, c, i, j);
        for (int c = 0; c < b.c(); ++c)
            for (int i = 0; i < a.h(); ++i)
                for (int j = 0; j < a.w(); ++j) y.at(n, a.c() + c, i, j) = b.at(n, c, i, j);
    }
    return y;
}

Tensor4 flatten_tokens(const Tensor4& x) {
    Tensor4 t(x.n(), 1, x.h() * x.w(), x.c());
    for (int n = 0; n < x.n(); ++n)
        for (int c = 0; c < x.c(); ++c)
            for (int i = 0; i < x.h(); ++i)
                for (int j = 0; j < x.w(); ++j) t.at(n, 0, i * x.w() + j, c) = x.at(n, c, i, j);
    return t;
}

Tensor4 unflatten_tokens(const Tensor4& t, int h, int w) {
    Tensor4 x(t.n(), t.w(), h, w);
    for (int n = 0; n < t.n(); ++n)
        for (int c = 0; c < t.w(); ++c)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) x.at(n, c, i, j) = t.at(n, 0, i * w + j, c);
    return x;
}

std::size_t conv_param_count(const ConvParams& p) {
    return p.weights.size() + p.bias.size();
}

} // namespace

Tensor4 ConvUnit::forward(const Tensor4& x) const {
    Tensor4 y = conv2d(x, conv);
    if (has_bn) y = batch_norm(y, bn);
    if (has_act) y = activation(y, act);
    return y;
}

std::size_t ConvUnit::param_count() const {
    std::size_t n = conv_param_count(conv);
    if (has_bn) n += bn.gamma.size() + bn.beta.size();
    return n;
}

ConvUnit seeded_conv_unit(int in_c, int out_c, int k, int stride, int padding, int groups,
                          bool with_bn, bool with_act, Activation act, std::mt19937& rng) {
    ConvUnit u;
    u.conv = seeded_conv(in_c, out_c, k, stride, padding, groups, rng);
    u.has_bn = with_bn;
    if (with_bn) {
        u.bn.gamma.assign(out_c, 1.0f);
        u.bn.beta.assign(out_c, 0.0f);
    }
    u.has_act = with_act;
    u.act = act;
    return u;
}

Tensor4 PatchEmbedUnit::forward(const Tensor4& x) const { return pw.forward(dw.forward(x)); }

std::size_t PatchEmbedUnit::param_count() const { return dw.param_count() + pw.param_count(); }

std::array<Tensor4, 3> MsPatchEmbedParams::forward(const Tensor4& x) const {
    std::array<Tensor4, 3> out;
    for (int p = 0; p < 3; ++p) {
        Tensor4 y = x;
        for (const PatchEmbedUnit& u : paths[p]) y = u.forward(y);
        out[p] = std::move(y);
    }
    return out;
}

std::size_t MsPatchEmbedParams::param_count() const {
    std::size_t n = 0;
    for (const auto& path : paths)
        for (const PatchEmbedUnit& u : path) n += u.param_count();
    return n;
}

std::array<Tensor4, 3> ms_patch_embed(const Tensor4& x, const MsPatchEmbedParams& p) {
    return p.forward(x);
}

Tensor4 GlobalBranchParams::forward(const Tensor4& x) const {
    const Tensor4 q = flatten_tokens(conv2d(x, wq));
    const Tensor4 k = flatten_tokens(conv2d(x, wk));
    const Tensor4 v = flatten_tokens(conv2d(x, wv));
    return unflatten_tokens(factor_att(q, k, v, heads), x.h(), x.w());
}

std::size_t GlobalBranchParams::param_count() const {
    return conv_param_count(wq) + conv_param_count(wk) + conv_param_count(wv);
}

Tensor4 LocalBranchParams::forward(const Tensor4& x) const {
    return c2.forward(dw.forward(c1.forward(x)));
}

std::size_t LocalBranchParams::param_count() const {
    return c1.param_count() + dw.param_count() + c2.param_count();
}

std::size_t HybridLayerParams::param_count() const {
    std::size_t n = embed.param_count() + local.param_count() + conv_param_count(interaction);
    for (const GlobalBranchParams& g : global_branches) n += g.param_count();
    return n;
}

Tensor4 hybrid_layer(const Tensor4& x, const HybridLayerParams& p) {
    if (x.c() != p.cfg.in_channels) fail_shape("hybrid_layer", "input channels mismatch");
    const std::array<Tensor4, 3> paths = p.embed.forward(x);

    Tensor4 cat;
    for (std::size_t g = 0; g < p.global_branches.size(); ++g) {
        Tensor4 y = p.global_branches[g].forward(paths[g % 3]);
        cat = g == 0 ? std::move(y) : concat_channels(cat, y);
    }
    cat = concat_channels(cat, p.local.forward(paths[0]));
    return conv2d(cat, p.interaction);
}

std::size_t ConvStemParams::param_count() const { return a.param_count() + b.param_count(); }

Tensor4 conv_stem(const Tensor4& image, const ConvStemParams& p) {
    if (image.h() % 2 != 0 || image.w() % 2 != 0)
        fail_shape("conv_stem", "input dims must be even");
    return p.b.forward(p.a.forward(image));
}

std::size_t ContextPriorLayerParams::param_count() const {
    std::size_t n = pre.param_count() + post.param_count();
    n += conv_param_count(cpa.wq) + conv_param_count(cpa.wk) + conv_param_count(cpa.wv);
    n += cpa.w1.weights.size() + cpa.w2.weights.size() + 1; // g
    return n;
}

Tensor4 context_prior_layer(const Tensor4& x, const Tensor4& skip,
                            const ContextPriorLayerParams& p) {
    Tensor4 y = p.pre.forward(x);
    y = bilinear_resize(y, 2 * y.h(), 2 * y.w());
    if (y.h() != skip.h() || y.w() != skip.w())
        fail_shape("context_prior_layer", "skip dims must be 2x the input dims");
    y = concat_channels(y, skip);
    y = cpa(y, p.cpa);
    return p.post.forward(y);
}

std::size_t SemanticPriorLayerParams::param_count() const {
    return pre.param_count() + post.param_count() + refine_bn.gamma.size() + refine_bn.beta.size();
}

Tensor4 semantic_prior_layer(const Tensor4& x, const Tensor4& skip,
                             const SemanticPriorLayerParams& p) {
    Tensor4 y = p.pre.forward(x);
    y = bilinear_resize(y, 2 * y.h(), 2 * y.w());
    if (y.h() != skip.h() || y.w() != skip.w())
        fail_shape("semantic_prior_layer", "skip dims must be 2x the input dims");
    y = concat_channels(y, skip);
    const Tensor4 f = simam_energy(y, p.energy);
    y = simam_refine(y, f, p.refine_bn);
    return p.post.forward(y);
}

DepthNetParams DepthNetParams::seeded(const DepthNetConfig& cfg, std::uint32_t seed) {
    std::mt19937 rng(seed);
    DepthNetParams p;
    p.cfg = cfg;

    p.stem.a = seeded_conv_unit(cfg.in_channels, cfg.stem_width, 3, 2, 1, 1, true, true,
                                Activation::HardSwish, rng);
    p.stem.b = seeded_conv_unit(cfg.stem_width, cfg.stem_width, 3, 1, 1, 1, true, true,
                                Activation::HardSwish, rng);

    int in_c = cfg.stem_width;
    for (int s = 0; s < 4; ++s) {
        const int embed = cfg.stage_widths[s];
        HybridLayerParams& hl = p.stages[s];
        hl.cfg = {in_c, embed, s == 0 ? 2 : 3};
        for (int path = 0; path < 3; ++path) {
            hl.embed.paths[path].resize(path + 1);
            for (int u = 0; u <= path; ++u) {
                const int uin = u == 0 ? in_c : embed;
                const int stride = u == 0 ? 2 : 1;
                PatchEmbedUnit& pu = hl.embed.paths[path][u];
                pu.dw = seeded_conv_unit(uin, uin, 3, stride, 1, uin, false, false,
                                         Activation::HardSwish, rng);
                pu.pw = seeded_conv_unit(uin, embed, 1, 1, 0, 1, true, true,
                                         Activation::HardSwish, rng);
            }
        }
        hl.global_branches.resize(hl.cfg.n_global);
        for (GlobalBranchParams& g : hl.global_branches) {
            g.wq = seeded_conv(embed, embed, 1, 1, 0, 1, rng);
            g.wk = seeded_conv(embed, embed, 1, 1, 0, 1, rng);
            g.wv = seeded_conv(embed, embed, 1, 1, 0, 1, rng);
        }
        hl.local.c1 = seeded_conv_unit(embed, embed, 1, 1, 0, 1, false, true,
                                       Activation::HardSwish, rng);
        hl.local.dw = seeded_conv_unit(embed, embed, 3, 1, 1, embed, false, true,
                                       Activation::HardSwish, rng);
        hl.local.c2 = seeded_conv_unit(embed, embed, 1, 1, 0, 1, false, false,
                                       Activation::HardSwish, rng);
        hl.interaction = seeded_conv((hl.cfg.n_global + 1) * embed, embed, 1, 1, 0, 1, rng);
        in_c = embed;
    }

    // decoder widths follow the skip widths: mid = skip, concat = 2*skip, out = skip
    const std::array<int, 4> skips{cfg.stem_width, cfg.stage_widths[0], cfg.stage_widths[1],
                                   cfg.stage_widths[2]};
    {
        const int skip_w = skips[3];
        p.context.pre = seeded_conv_unit(cfg.stage_widths[3], skip_w, 3, 1, 1, 1, false, true,
                                         Activation::Elu, rng);
        p.context.cpa = CpaParams::seeded(2 * skip_w, cfg.cpa_reduction, 0.5f, rng);
        p.context.post = seeded_conv_unit(2 * skip_w, skip_w, 3, 1, 1, 1, false, true,
                                          Activation::Elu, rng);
    }
    for (int i = 0; i < 3; ++i) {
        const int in_w = i == 0 ? skips[3] : skips[3 - i];
        const int skip_w = skips[2 - i];
        SemanticPriorLayerParams& sp = p.semantic[i];
        sp.pre = seeded_conv_unit(in_w, skip_w, 3, 1, 1, 1, false, true, Activation::Elu, rng);
        sp.energy = EnergyConfig{};
        sp.refine_bn.gamma.assign(2 * skip_w, 1.0f);
        sp.refine_bn.beta.assign(2 * skip_w, 0.0f);
        sp.post = seeded_conv_unit(2 * skip_w, skip_w, 3, 1, 1, 1, false, true, Activation::Elu, rng);
    }
    p.depth_pre = seeded_conv_unit(skips[0], skips[0], 3, 1, 1, 1, false, true, Activation::Elu, rng);

    const std::array<int, 4> head_in{skips[2], skips[1], skips[0], skips[0]}; // 1/8,1/4,1/2,1/1
    for (int i = 0; i < 4; ++i)
        p.heads[i] = seeded_conv_unit(head_in[i], 1, 3, 1, 1, 1, false, true, Activation::Sigmoid,
                                      rng);
    return p;
}

std::size_t DepthNetParams::param_count() const {
    std::size_t n = stem.param_count() + context.param_count() + depth_pre.param_count();
    for (const auto& s : stages) n += s.param_count();
    for (const auto& s : semantic) n += s.param_count();
    for (const auto& h : heads) n += h.param_count();
    return n;
}

DepthNetOutput depthnet_forward(const Tensor4& image, const DepthNetParams& p) {
    if (image.h() % 32 != 0 || image.w() % 32 != 0 || image.h() < 32 || image.w() < 32)
        fail_shape("depthnet_forward", "input dims must be divisible by 32");
    if (image.c() != p.cfg.in_channels) fail_shape("depthnet_forward", "input channels mismatch");

    const Tensor4 e1 = conv_stem(image, p.stem);     // H/2
    const Tensor4 e2 = hybrid_layer(e1, p.stages[0]); // H/4
    const Tensor4 e3 = hybrid_layer(e2, p.stages[1]); // H/8
    const Tensor4 e4 = hybrid_layer(e3, p.stages[2]); // H/16
    const Tensor4 e5 = hybrid_layer(e4, p.stages[3]); // H/32

    const Tensor4 d4 = context_prior_layer(e5, e4, p.context);      // H/16
    const Tensor4 d3 = semantic_prior_layer(d4, e3, p.semantic[0]); // H/8
    const Tensor4 d2 = semantic_prior_layer(d3, e2, p.semantic[1]); // H/4
    const Tensor4 d1 = semantic_prior_layer(d2, e1, p.semantic[2]); // H/2
    const Tensor4 d0 = p.depth_pre.forward(bilinear_resize(d1, 2 * d1.h(), 2 * d1.w()));

    DepthNetOutput out;
    out.sigmoid_maps[0] = p.heads[3].forward(d0);
    out.sigmoid_maps[1] = p.heads[2].forward(d1);
    out.sigmoid_maps[2] = p.heads[1].forward(d2);
    out.sigmoid_maps[3] = p.heads[0].forward(d3);
    return out;
}

// ---------------------------------------------------------------------------
// parameter naming and serialization

namespace {

Tensor4 vec_tensor(const std::vector<float>& v) {
    return Tensor4(1, 1, 1, static_cast<int>(v.size()), std::vector<float>(v));
}

std::vector<float> tensor_vec(const Tensor4& t, std::size_t expect, const std::string& name) {
    if (t.size() != expect)
        throw std::invalid_argument("assign_named_tensors: bad length for " + name);
    return std::vector<float>(t.values().begin(), t.values().end());
}

struct NamedSink {
    std::map<std::string, Tensor4>* out = nullptr;
    const std::map<std::string, Tensor4>* in = nullptr;

    void tensor(const std::string& name, Tensor4& t) {
        if (out) (*out)[name] = t;
        if (in) {
            auto it = in->find(name);
            if (it == in->end())
                throw std::invalid_argument("assign_named_tensors: missing tensor " + name);
            if (!it->second.same_shape(t))
                throw std::invalid_argument("assign_named_tensors: shape mismatch for " + name);
            t = it->second;
        }
    }
    void vec(const std::string& name, std::vector<float>& v) {
        if (out) (*out)[name] = vec_tensor(v);
        if (in) {
            auto it = in->find(name);
            if (it == in->end())
                throw std::invalid_argument("assign_named_tensors: missing tensor " + name);
            v = tensor_vec(it->second, v.size(), name);
        }
    }
    void scalar(const std::string& name, float& s) {
        std::vector<float> v{s};
        vec(name, v);
        s = v[0];
    }

    void conv(const std::string& prefix, ConvParams& p) {
        tensor(prefix + ".weight", p.weights);
        vec(prefix + ".bias", p.bias);
    }
    void unit(const std::string& prefix, ConvUnit& u) {
        conv(prefix, u.conv);
        if (u.has_bn) {
            vec(prefix + ".bn.gamma", u.bn.gamma);
            vec(prefix + ".bn.beta", u.bn.beta);
        }
    }
    void visit(const std::string& prefix, CpaParams& p) {
        conv(prefix + ".wq", p.wq);
        conv(prefix + ".wk", p.wk);
        conv(prefix + ".wv", p.wv);
        tensor(prefix + ".w1.weight", p.w1.weights);
        tensor(prefix + ".w2.weight", p.w2.weights);
        scalar(prefix + ".g", p.g);
    }
    void visit(const std::string& prefix, DepthNetParams& p) {
        unit(prefix + "stem.a", p.stem.a);
        unit(prefix + "stem.b", p.stem.b);
        for (int s = 0; s < 4; ++s) {
            const std::string sp = prefix + "s" + std::to_string(s);
            HybridLayerParams& hl = p.stages[s];
            for (int path = 0; path < 3; ++path)
                for (std::size_t u = 0; u < hl.embed.paths[path].size(); ++u) {
                    const std::string up =
                        sp + ".embed.p" + std::to_string(path) + ".u" + std::to_string(u);
                    unit(up + ".dw", hl.embed.paths[path][u].dw);
                    unit(up + ".pw", hl.embed.paths[path][u].pw);
                }
            for (std::size_t g = 0; g < hl.global_branches.size(); ++g) {
                const std::string gp = sp + ".att" + std::to_string(g);
                conv(gp + ".wq", hl.global_branches[g].wq);
                conv(gp + ".wk", hl.global_branches[g].wk);
                conv(gp + ".wv", hl.global_branches[g].wv);
            }
            unit(sp + ".local.c1", hl.local.c1);
            unit(sp + ".local.dw", hl.local.dw);
            unit(sp + ".local.c2", hl.local.c2);
            conv(sp + ".interaction", hl.interaction);
        }
        unit(prefix + "dec.cpl.pre", p.context.pre);
        visit(prefix + "dec.cpl.cpa", p.context.cpa);
        unit(prefix + "dec.cpl.post", p.context.post);
        for (int i = 0; i < 3; ++i) {
            const std::string dp = prefix + "dec.spl" + std::to_string(i);
            unit(dp + ".pre", p.semantic[i].pre);
            vec(dp + ".bn.gamma", p.semantic[i].refine_bn.gamma);
            vec(dp + ".bn.beta", p.semantic[i].refine_bn.beta);
            unit(dp + ".post", p.semantic[i].post);
        }
        unit(prefix + "dec.depth", p.depth_pre);
        for (int i = 0; i < 4; ++i)
            unit(prefix + "head" + std::to_string(i), p.heads[i]);
    }
};

} // namespace

std::map<std::string, Tensor4> DepthNetParams::named_tensors() const {
    std::map<std::string, Tensor4> out;
    NamedSink sink;
    sink.out = &out;
    sink.visit("", const_cast<DepthNetParams&>(*this));
    return out;
}

void DepthNetParams::assign_named_tensors(const std::map<std::string, Tensor4>& tensors) {
    NamedSink sink;
    sink.in = &tensors;
    sink.visit("", *this);
}

void save_params(const std::map<std::string, Tensor4>& tensors, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    int idx = 0;
    for (const auto& [name, t] : tensors) {
        const std::string file = "t" + std::to_string(idx++) + ".plt";
        tensor_write(t, (fs::path(dir) / file).string());
        manifest["tensors"].push_back(
            {{"name", name}, {"file", file}, {"shape", {t.n(), t.c(), t.h(), t.w()}}});
    }
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("save_params: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

std::map<std::string, Tensor4> load_params(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("load_params: cannot open manifest in " + dir);
    nlohmann::json manifest;
    in >> manifest;

    std::map<std::string, Tensor4> out;
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        Tensor4 t = tensor_read((fs::path(dir) / entry.at("file").get<std::string>()).string());
        const auto shape = entry.at("shape");
        if (t.n() != shape[0].get<int>() || t.c() != shape[1].get<int>() ||
            t.h() != shape[2].get<int>() || t.w() != shape[3].get<int>())
            throw std::runtime_error("load_params: manifest shape mismatch for " + name);
        out.emplace(name, std::move(t));
    }
    return out;
}

} // namespace priordepth
