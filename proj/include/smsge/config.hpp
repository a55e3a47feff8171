#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace smsge {

// Architecture and ablation switches. Defaults follow the reference setup:
// D_t = 8, P = 8, D_h = 256, temperatures and fusion coefficient 1.
struct ModelConfig {
    int feature_dim = 8;   // node feature width D_t
    int num_heads = 8;     // structural relation matrices P
    int hidden_dim = 256;  // encoder state width D_h per layer
    int head_hidden = 256; // reconstruction-head hidden width
    double t1 = 1.0;       // structural relation temperature
    double t2 = 1.0;       // collaborative relation temperature
    double lambda_c = 1.0; // collaboration fusion coefficient

    bool multi_graph = true;              // MG: all four scales vs joint scale only
    bool structural_relations = true;     // SR: learned attention vs uniform averaging
    bool collaborative_relations = true;  // CR: collaboration fusion on/off
    bool cross_scale_inference = true;    // CSI: cross-scale heads on/off
    bool subsequence_reconstruction = true;  // SSR: sampled subsequences vs full length

    int frames = 6;  // sequence length f
    int rounds = 1;  // sampling rounds r

    std::vector<int> active_scales() const {
        if (multi_graph) return {0, 1, 2, 3};
        return {1};
    }
    // Ordered scale pairs (a, b), a <= b, over the active scales.
    std::vector<std::pair<int, int>> scale_pairs() const {
        std::vector<std::pair<int, int>> out;
        auto scales = active_scales();
        for (std::size_t i = 0; i < scales.size(); ++i)
            for (std::size_t j = i; j < scales.size(); ++j)
                out.emplace_back(scales[i], scales[j]);
        return out;
    }
    // Reconstruction-head pairs: all (a, b) under CSI, diagonal otherwise.
    std::vector<std::pair<int, int>> head_pairs() const {
        if (cross_scale_inference) return scale_pairs();
        std::vector<std::pair<int, int>> out;
        for (int s : active_scales()) out.emplace_back(s, s);
        return out;
    }
};

struct TrainConfig {
    ModelConfig model;
    std::string preset = "kinect20";
    double learning_rate = 0.0025;
    int epochs = 300;
    int batch = 8;  // sequences per optimizer step
    std::uint64_t seed = 1;
    double grad_clip = 5.0;  // global-norm clip; <= 0 disables
    int threads = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct ProbeConfig {
    int hidden = 256;
    double learning_rate = 1e-3;
    int epochs = 100;
    std::uint64_t seed = 1;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const ProbeConfig& c);
void from_json(const nlohmann::json& j, ProbeConfig& c);

}  // namespace smsge
