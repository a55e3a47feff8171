#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smsge/matrix.hpp"
#include "smsge/rng.hpp"
#include "smsge/topology.hpp"

namespace smsge {

// f frames of J 3D joints (meters) with identity/view labels.
struct SkeletonSequence {
    std::vector<Matrix> frames;  // each J x 3
    int identity = -1;
    std::string view;
    std::string source;
    std::string split;  // carried through from the manifest; may be empty
};

struct ManifestEntry {
    std::string path;
    int id = -1;
    std::string view;
    std::string split;  // "train", "test", or "" (unassigned)
};

struct DatasetManifest {
    std::string preset;
    bool normalize = true;
    std::vector<ManifestEntry> sequences;
};

// Text format: one frame per line, 3J space-separated decimal floats in
// topology joint order. Parse errors carry the offending line number.
SkeletonSequence parse_sequence(const std::string& path, const Topology& topology);
void write_sequence(const std::string& path, const SkeletonSequence& seq);

// Rendering precision of the text format; quantizing through it makes
// parse(write(x)) an exact identity.
double quantize9(double v);

DatasetManifest read_manifest(const std::string& path);
void write_manifest(const DatasetManifest& m, const std::string& path);

// Paths inside a manifest are relative to the manifest's directory.
std::string resolve_manifest_path(const std::string& manifest_path, const std::string& entry_path);

enum class SplitPolicy { ExplicitTags, LeaveOnePerIdentity, LeaveOnePerView };

// Returns (train, test) manifest-entry indices. Enforces the classifier
// protocol: every test identity must keep at least one training sequence.
std::pair<std::vector<int>, std::vector<int>> split_dataset(const DatasetManifest& m,
                                                            SplitPolicy policy, Rng& rng);

// Translates every frame so the root joint sits at the origin.
SkeletonSequence normalize(const SkeletonSequence& seq, const Topology& topology);

// Non-overlapping f-frame windows; remainder frames are dropped.
std::vector<SkeletonSequence> chunk_sequences(const std::vector<SkeletonSequence>& seqs, int f);

// Identity-specific gait description for the synthetic generator.
struct GaitParams {
    std::uint64_t identity_seed = 0;
    std::vector<double> limb_lengths;   // per topology edge, meters
    std::vector<double> phase_offsets;  // per topology edge, radians
    std::vector<double> swing_weights;  // per topology edge, fraction of stride
    double frequency_hz = 1.0;
    double stride_amplitude = 0.45;  // radians
    double noise_sigma = 0.005;      // meters
};

struct SyntheticConfig {
    int identities = 5;
    int sequences_per_identity = 4;
    int frames = 6;
    double noise_sigma = 0.005;
    std::uint64_t seed = 1;
};

// Canonical standing pose for a preset (deterministic fallback layout for
// custom topologies).
Matrix rest_pose(const Topology& topology);

GaitParams make_gait_params(const Topology& topology, const MergeMap& bodies,
                            int identity_index, std::uint64_t master_seed, double noise_sigma);

// One gait cycle sample: swing angles are sinusoidal around the rest pose,
// so bone lengths are constant over time up to the additive noise.
SkeletonSequence synth_sequence(const Topology& topology, const GaitParams& params, int frames,
                                double initial_phase, double yaw, Rng& noise_rng);

std::vector<SkeletonSequence> generate_synthetic(const SyntheticConfig& cfg,
                                                 const Topology& topology,
                                                 const MergeMap& bodies);

}  // namespace smsge
