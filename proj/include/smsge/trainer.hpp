#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "smsge/adam.hpp"
#include "smsge/config.hpp"
#include "smsge/data.hpp"
#include "smsge/model.hpp"

namespace smsge {

struct LoadedSequence {
    SkeletonSequence seq;                 // normalized coordinates
    std::vector<MultiScaleFrame> frames;  // one per frame
};

struct TrainDataset {
    Topology topology;
    MergeMap parts, bodies;
    std::vector<int> node_counts;  // indexed by scale id
    std::vector<LoadedSequence> sequences;
};

// Chunks raw sequences into f-frame windows, optionally centers them on the
// root joint and builds the multi-scale graphs.
TrainDataset build_dataset(const Topology& topology, const MergeMap& parts,
                           const MergeMap& bodies, const std::vector<SkeletonSequence>& seqs,
                           int frames, bool center);

// Manifest-driven loader; `which` restricts to entry indices (empty = all).
TrainDataset load_dataset(const std::string& manifest_path, int frames,
                          const std::vector<int>& which = {});

struct Checkpoint {
    TrainConfig config;
    ModelParams params;
    AdamState adam;
    long epoch = 0;
    std::array<std::uint64_t, 4> rng_state{};
    std::vector<double> loss_history;  // summed batch loss per epoch
};

// Self-supervised pretraining with Adam; deterministic under (seed, thread
// mode). Writes one "epoch <n> loss <v>" line per epoch to `log`.
Checkpoint pretrain(const TrainDataset& data, const TrainConfig& cfg, std::ostream* log);

// Continues a checkpoint for extra epochs; a resumed run reproduces an
// uninterrupted one exactly.
void continue_pretrain(Checkpoint& ck, const TrainDataset& data, int extra_epochs,
                       std::ostream* log);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Effective computation paths for a flag set.
struct AblationPlan {
    std::vector<int> scales;
    bool learned_attention = true;
    bool collaboration_fusion = true;
    std::vector<std::pair<int, int>> head_pairs;
    bool random_subsequences = true;
    std::string summary() const;
};
AblationPlan apply_ablation(const ModelConfig& cfg);

// 4-joint toy instance for gradient verification.
TrainDataset make_toy_dataset(int frames, int num_sequences, std::uint64_t seed);
ModelConfig toy_model_config(int frames);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<std::pair<std::string, double>> per_tensor;
};

// Central finite differences against the analytic gradient of the total
// reconstruction loss, every coordinate of every parameter group.
GradCheckReport grad_check(const TrainDataset& data, const ModelConfig& cfg,
                           std::uint64_t seed, double epsilon);

// The batch the gradient checker differentiates: every sequence, sampled
// subsequences of each length plus the full-length sequence (so the
// recurrent path is exercised even at f = 2).
MsrBatch grad_check_batch(const TrainDataset& data, const ModelConfig& cfg, std::uint64_t seed);

}  // namespace smsge
