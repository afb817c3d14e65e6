#pragma once

// Serialization of probability-head weights and precomputed provider
// features through the named-tensor container, plus the provider that
// replays features from such a file.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "depthbin/io.hpp"
#include "depthbin/probhead.hpp"
#include "depthbin/refine.hpp"

namespace depthbin {

namespace detail {

inline NamedTensor conv_weight_tensor(const std::string& name, const Conv2d& c) {
    return NamedTensor{name, {c.out_channels, c.in_channels, c.kh, c.kw}, c.weights};
}

inline NamedTensor conv_bias_tensor(const std::string& name, const Conv2d& c) {
    return NamedTensor{name, {c.out_channels}, c.bias};
}

inline void append_conv(std::vector<NamedTensor>& out, const std::string& prefix, const Conv2d& c) {
    out.push_back(conv_weight_tensor(prefix + "/weight", c));
    out.push_back(conv_bias_tensor(prefix + "/bias", c));
}

inline Conv2d conv_from_tensors(const std::map<std::string, const NamedTensor*>& by_name,
                                const std::string& prefix) {
    const auto wit = by_name.find(prefix + "/weight");
    const auto bit = by_name.find(prefix + "/bias");
    if (wit == by_name.end() || bit == by_name.end())
        throw IoError("missing tensor " + prefix + "/weight or /bias");
    const NamedTensor& wt = *wit->second;
    if (wt.shape.size() != 4) throw IoError("tensor " + prefix + "/weight must be 4-D");
    Conv2d c{wt.shape[0], wt.shape[1], wt.shape[2], wt.shape[3], wt.data, bit->second->data};
    if (c.bias.size() != static_cast<std::size_t>(c.out_channels))
        throw IoError("tensor " + prefix + "/bias size mismatch");
    return c;
}

}  // namespace detail

inline std::vector<NamedTensor> prob_head_to_tensors(const ProbHeadWeights& w, const std::string& prefix) {
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < w.proj_convs.size(); ++i)
        detail::append_conv(out, prefix + "/proj" + std::to_string(i), w.proj_convs[i]);
    detail::append_conv(out, prefix + "/hidden", w.hidden_conv);
    detail::append_conv(out, prefix + "/offset", w.offset_conv);
    detail::append_conv(out, prefix + "/modulation", w.modulation_conv);
    out.push_back(NamedTensor{prefix + "/deform/kernel", {w.deform_k, w.deform_k}, w.deform_kernel});
    out.push_back(NamedTensor{prefix + "/deform/bias", {1}, {w.deform_bias}});
    detail::append_conv(out, prefix + "/gru_update", w.gru_update);
    detail::append_conv(out, prefix + "/gru_reset", w.gru_reset);
    detail::append_conv(out, prefix + "/gru_candidate", w.gru_candidate);
    detail::append_conv(out, prefix + "/head", w.head_conv);
    return out;
}

inline ProbHeadWeights prob_head_from_tensors(const std::vector<NamedTensor>& tensors,
                                              const std::string& prefix) {
    std::map<std::string, const NamedTensor*> by_name;
    for (const NamedTensor& t : tensors) by_name[t.name] = &t;
    ProbHeadWeights w;
    for (int i = 0; i < 4; ++i)
        w.proj_convs.push_back(detail::conv_from_tensors(by_name, prefix + "/proj" + std::to_string(i)));
    w.hidden_conv = detail::conv_from_tensors(by_name, prefix + "/hidden");
    w.offset_conv = detail::conv_from_tensors(by_name, prefix + "/offset");
    w.modulation_conv = detail::conv_from_tensors(by_name, prefix + "/modulation");
    const auto kit = by_name.find(prefix + "/deform/kernel");
    const auto bit = by_name.find(prefix + "/deform/bias");
    if (kit == by_name.end() || bit == by_name.end() || kit->second->shape.size() != 2 ||
        bit->second->data.size() != 1)
        throw IoError("missing or malformed deform tensors under " + prefix);
    w.deform_k = kit->second->shape[0];
    w.deform_kernel = kit->second->data;
    w.deform_bias = bit->second->data[0];
    w.gru_update = detail::conv_from_tensors(by_name, prefix + "/gru_update");
    w.gru_reset = detail::conv_from_tensors(by_name, prefix + "/gru_reset");
    w.gru_candidate = detail::conv_from_tensors(by_name, prefix + "/gru_candidate");
    w.head_conv = detail::conv_from_tensors(by_name, prefix + "/head");
    require_valid(check_prob_head_weights(w));
    return w;
}

inline void save_stage_weights(const std::vector<ProbHeadWeights>& stages, const std::string& path) {
    std::vector<NamedTensor> tensors;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        std::vector<NamedTensor> stage = prob_head_to_tensors(stages[i], "stage" + std::to_string(i));
        tensors.insert(tensors.end(), std::make_move_iterator(stage.begin()),
                       std::make_move_iterator(stage.end()));
    }
    write_tensor_container(tensors, path);
}

inline std::vector<ProbHeadWeights> load_stage_weights(const std::string& path, int n_stages) {
    const std::vector<NamedTensor> tensors = read_tensor_container(path);
    std::vector<ProbHeadWeights> stages;
    stages.reserve(n_stages);
    for (int i = 0; i < n_stages; ++i)
        stages.push_back(prob_head_from_tensors(tensors, "stage" + std::to_string(i)));
    return stages;
}

/// Replays provider outputs stored in a tensor container. Expected entries:
/// "context" (C x H x W), "layer0".."layer3" (C x H x W), "initial_depth"
/// (H x W), and optionally "initial_mask" (H x W, nonzero = valid).
class ExternalFileProvider final : public FeatureProvider {
public:
    explicit ExternalFileProvider(const std::string& path) {
        const std::vector<NamedTensor> tensors = read_tensor_container(path);
        std::map<std::string, const NamedTensor*> by_name;
        for (const NamedTensor& t : tensors) by_name[t.name] = &t;

        const auto volume = [&](const std::string& name) {
            const auto it = by_name.find(name);
            if (it == by_name.end()) throw IoError("missing tensor " + name + " in " + path);
            const NamedTensor& t = *it->second;
            if (t.shape.size() != 3) throw IoError("tensor " + name + " must be 3-D");
            return FeatureMap(Volume<double>(t.shape[0], t.shape[1], t.shape[2], t.data));
        };
        context_.emplace(volume("context"));
        for (int i = 0; i < 4; ++i) layers_.push_back(volume("layer" + std::to_string(i)));

        const auto dit = by_name.find("initial_depth");
        if (dit == by_name.end() || dit->second->shape.size() != 2)
            throw IoError("missing or malformed initial_depth in " + path);
        const int h = dit->second->shape[0];
        const int w = dit->second->shape[1];
        Grid<double> values(h, w, dit->second->data);
        Grid<std::uint8_t> mask(h, w, 1);
        const auto mit = by_name.find("initial_mask");
        if (mit != by_name.end()) {
            if (mit->second->data.size() != values.size())
                throw IoError("initial_mask size mismatch in " + path);
            for (std::size_t i = 0; i < mask.size(); ++i)
                mask[i] = mit->second->data[i] != 0.0 ? 1 : 0;
        }
        initial_depth_.emplace(std::move(values), std::move(mask));
    }

    ProviderOutput produce(const FeatureMap& color, const DepthMap&) const override {
        if (context_->height() != color.height() || context_->width() != color.width())
            throw ValidationFailure(ValidationError::shape_mismatch,
                                    "stored features do not match the color grid");
        return ProviderOutput{*context_, layers_, *initial_depth_};
    }

    int context_channels() const { return context_->channels(); }
    int layer_channels() const { return layers_.front().channels(); }

private:
    std::optional<FeatureMap> context_;
    std::vector<FeatureMap> layers_;
    std::optional<DepthMap> initial_depth_;
};

}  // namespace depthbin
