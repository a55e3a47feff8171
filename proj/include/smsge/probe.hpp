#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "smsge/config.hpp"
#include "smsge/matrix.hpp"
#include "smsge/trainer.hpp"

namespace smsge {

// Frozen skeleton-level representation of one sequence: per frame the
// concatenated encoded graph states of the active scales.
struct SequenceFeatures {
    int id = -1;
    std::string view;
    std::string split;
    Matrix states;  // f x (S * D_h)
};

// Encodes every sequence at full length with the pretrained parameters held
// fixed and concatenates the per-scale states per frame.
std::vector<SequenceFeatures> extract_features(const TrainDataset& data, const Checkpoint& ck);

// One-hidden-layer identity classifier over frozen features.
struct ProbeModel {
    std::vector<int> classes;  // original identity labels, ascending
    Matrix w1, b1, w2, b2;
};

// Cross-entropy over all frame-level features, full-batch Adam.
ProbeModel train_probe(const std::vector<SequenceFeatures>& train, const ProbeConfig& cfg,
                       std::ostream* log);

// Per-frame softmax probabilities averaged over frames; sums to 1.
std::vector<double> predict_sequence(const ProbeModel& probe, const Matrix& states);

struct CmcReport {
    std::vector<double> cmc;  // length num_classes, non-decreasing
    double rank1 = 0.0;
    double nauc = 0.0;  // 0..100
    int num_classes = 0;
    int num_sequences = 0;
};

// Ranks classes by score (descending, ties by ascending class index);
// cmc[k] is the fraction of sequences whose true class is in the top k+1.
CmcReport cmc_from_scores(const std::vector<std::vector<double>>& scores,
                          const std::vector<int>& true_class_indices);

// Full protocol: average probabilities per sequence, rank, report. Test
// identities must be known to the probe.
CmcReport evaluate(const std::vector<SequenceFeatures>& test, const ProbeModel& probe);

nlohmann::json report_json(const CmcReport& report);
void write_cmc_csv(const CmcReport& report, const std::string& path);

// Feature and probe containers (same archive format as checkpoints).
void save_features(const std::vector<SequenceFeatures>& feats, const nlohmann::json& meta,
                   const std::string& path);
std::pair<std::vector<SequenceFeatures>, nlohmann::json> load_features(const std::string& path);
void save_probe(const ProbeModel& probe, const std::string& path);
ProbeModel load_probe(const std::string& path);

}  // namespace smsge
