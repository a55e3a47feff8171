#include "smsge/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "smsge/checkpoint.hpp"
#include "smsge/parallel.hpp"

namespace smsge {

namespace {

constexpr std::uint64_t kInitStream = 0x5EED;
constexpr std::uint64_t kTrainStream = 0x7EA1;

const char* kCheckpointMagic = "SMSGE1";

std::string format_loss(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

// Names the first parameter group holding a non-finite value, if any.
std::optional<std::string> find_non_finite(const ModelParams& p) {
    std::optional<std::string> hit;
    for_each_tensor(p, [&](const std::string& name, const Matrix& m) {
        if (hit) return;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (!std::isfinite(m.data()[i])) {
                hit = name;
                return;
            }
    });
    return hit;
}

void run_epochs(Checkpoint& ck, const TrainDataset& data, int epochs, std::ostream* log) {
    const TrainConfig& cfg = ck.config;
    const int f = cfg.model.frames;
    const int n = static_cast<int>(data.sequences.size());
    Rng rng(0);
    rng.set_state(ck.rng_state);
    ModelParams grads = ck.params;

    std::vector<int> full(static_cast<std::size_t>(f));
    for (int t = 0; t < f; ++t) full[static_cast<std::size_t>(t)] = t;

    for (int e = 0; e < epochs; ++e) {
        const auto perm = rng.permutation(static_cast<std::size_t>(n));
        double epoch_loss = 0.0;
        for (int at = 0; at < n; at += cfg.batch) {
            MsrBatch batch;
            const int end = std::min(n, at + cfg.batch);
            for (int i = at; i < end; ++i) {
                const auto& ls = data.sequences[perm[static_cast<std::size_t>(i)]];
                batch.sequences.push_back(&ls.frames);
                if (cfg.model.subsequence_reconstruction)
                    batch.samples.push_back(sample_subsequences(f, cfg.model.rounds, rng));
                else
                    batch.samples.push_back({full});
            }
            zero_tensors(grads);
            const double loss = msr_loss_and_grads(batch, ck.params, cfg.model, &grads);
            if (!std::isfinite(loss)) {
                std::ostringstream os;
                os << "pretrain: non-finite loss at epoch " << ck.epoch + 1;
                if (auto g = find_non_finite(grads))
                    os << " (parameter group '" << *g << "' has non-finite gradient)";
                else if (auto p = find_non_finite(ck.params))
                    os << " (parameter group '" << *p << "' has non-finite values)";
                throw std::runtime_error(os.str());
            }
            if (cfg.grad_clip > 0.0) {
                const double norm = global_grad_norm(grads);
                if (norm > cfg.grad_clip) scale_tensors(grads, cfg.grad_clip / norm);
            }
            adam_step(ck.params, grads, ck.adam, cfg.learning_rate, cfg.adam_beta1,
                      cfg.adam_beta2, cfg.adam_eps);
            epoch_loss += loss;
        }
        ++ck.epoch;
        ck.loss_history.push_back(epoch_loss);
        if (log) (*log) << "epoch " << ck.epoch << " loss " << format_loss(epoch_loss) << "\n";
    }
    ck.rng_state = rng.state();
}

}  // namespace

TrainDataset build_dataset(const Topology& topology, const MergeMap& parts,
                           const MergeMap& bodies, const std::vector<SkeletonSequence>& seqs,
                           int frames, bool center) {
    TrainDataset d;
    d.topology = topology;
    d.parts = parts;
    d.bodies = bodies;
    d.node_counts = scale_node_counts(topology, parts, bodies);
    auto chunks = chunk_sequences(seqs, frames);
    d.sequences.resize(chunks.size());
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(chunks.size()); ++i) {
        try {
            LoadedSequence& ls = d.sequences[static_cast<std::size_t>(i)];
            ls.seq = center ? normalize(chunks[static_cast<std::size_t>(i)], topology)
                            : chunks[static_cast<std::size_t>(i)];
            ls.frames = build_multiscale(ls.seq.frames, topology, parts, bodies);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return d;
}

TrainDataset load_dataset(const std::string& manifest_path, int frames,
                          const std::vector<int>& which) {
    const DatasetManifest m = read_manifest(manifest_path);
    const Topology topo = build_topology(m.preset);
    auto [parts, bodies] = build_merge_maps(topo);
    std::vector<SkeletonSequence> seqs;
    auto load_entry = [&](int i) {
        const auto& e = m.sequences[static_cast<std::size_t>(i)];
        SkeletonSequence s = parse_sequence(resolve_manifest_path(manifest_path, e.path), topo);
        s.identity = e.id;
        s.view = e.view;
        s.split = e.split;
        seqs.push_back(std::move(s));
    };
    if (which.empty())
        for (int i = 0; i < static_cast<int>(m.sequences.size()); ++i) load_entry(i);
    else
        for (int i : which) load_entry(i);
    return build_dataset(topo, parts, bodies, seqs, frames, m.normalize);
}

Checkpoint pretrain(const TrainDataset& data, const TrainConfig& cfg, std::ostream* log) {
    if (data.sequences.empty()) throw std::invalid_argument("pretrain: empty dataset");
    for (const auto& ls : data.sequences)
        if (static_cast<int>(ls.frames.size()) != cfg.model.frames)
            throw std::invalid_argument("pretrain: sequence frame count != configured f");
    set_threads(cfg.threads);
    Checkpoint ck;
    ck.config = cfg;
    ck.params = make_params(cfg.model, data.node_counts);
    Rng init_rng(derive_seed(cfg.seed, kInitStream));
    init_params(ck.params, cfg.model, init_rng);
    ck.adam = make_adam_state(ck.params);
    Rng rng(derive_seed(cfg.seed, kTrainStream));
    ck.rng_state = rng.state();
    run_epochs(ck, data, cfg.epochs, log);
    return ck;
}

void continue_pretrain(Checkpoint& ck, const TrainDataset& data, int extra_epochs,
                       std::ostream* log) {
    set_threads(ck.config.threads);
    run_epochs(ck, data, extra_epochs, log);
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    nlohmann::json header;
    header["kind"] = "checkpoint";
    header["config"] = ck.config;
    header["epoch"] = ck.epoch;
    header["adam_step"] = ck.adam.step;
    header["rng_state"] = ck.rng_state;
    header["loss_history"] = ck.loss_history;
    std::vector<std::pair<std::string, const Matrix*>> tensors;
    for_each_tensor(ck.params, [&](const std::string& n, const Matrix& m) {
        tensors.emplace_back("param." + n, &m);
    });
    for_each_tensor(ck.adam.m, [&](const std::string& n, const Matrix& m) {
        tensors.emplace_back("adam.m." + n, &m);
    });
    for_each_tensor(ck.adam.v, [&](const std::string& n, const Matrix& m) {
        tensors.emplace_back("adam.v." + n, &m);
    });
    write_archive(path, kCheckpointMagic, header, tensors);
}

Checkpoint load_checkpoint(const std::string& path) {
    Archive a = read_archive(path, kCheckpointMagic);
    Checkpoint ck;
    ck.config = a.header.at("config").get<TrainConfig>();
    ck.epoch = a.header.at("epoch").get<long>();
    ck.rng_state = a.header.at("rng_state").get<std::array<std::uint64_t, 4>>();
    ck.loss_history = a.header.at("loss_history").get<std::vector<double>>();

    const Topology topo = build_topology(ck.config.preset);
    auto [parts, bodies] = build_merge_maps(topo);
    ck.params = make_params(ck.config.model, scale_node_counts(topo, parts, bodies));
    ck.adam = make_adam_state(ck.params);
    ck.adam.step = a.header.at("adam_step").get<long>();

    auto load_into = [&](const std::string& prefix, ModelParams& dst) {
        for_each_tensor(dst, [&](const std::string& n, Matrix& m) {
            const Matrix& src = a.find(prefix + n);
            if (!src.same_shape(m)) {
                std::ostringstream os;
                os << path << ": tensor '" << prefix + n << "' has shape " << src.rows() << "x"
                   << src.cols() << ", expected " << m.rows() << "x" << m.cols();
                throw std::runtime_error(os.str());
            }
            m = src;
        });
    };
    load_into("param.", ck.params);
    load_into("adam.m.", ck.adam.m);
    load_into("adam.v.", ck.adam.v);
    return ck;
}

std::string AblationPlan::summary() const {
    std::ostringstream os;
    os << "scales:";
    for (int s : scales) os << " " << s;
    os << " | attention: " << (learned_attention ? "learned" : "uniform");
    os << " | fusion: " << (collaboration_fusion ? "on" : "off");
    os << " | heads:";
    for (auto [a, b] : head_pairs) os << " (" << a << "," << b << ")";
    os << " | samples: "
       << (random_subsequences ? "random subsequences" : "full-length only");
    return os.str();
}

AblationPlan apply_ablation(const ModelConfig& cfg) {
    AblationPlan plan;
    plan.scales = cfg.active_scales();
    plan.learned_attention = cfg.structural_relations;
    plan.collaboration_fusion = cfg.collaborative_relations;
    plan.head_pairs = cfg.head_pairs();
    plan.random_subsequences = cfg.subsequence_reconstruction;
    return plan;
}

TrainDataset make_toy_dataset(int frames, int num_sequences, std::uint64_t seed) {
    Topology topo;
    topo.joint_count = 4;
    topo.edges = {{0, 1}, {1, 2}, {1, 3}};
    topo.root = 0;
    topo.preset_name = "toy4";
    validate_topology(topo);
    MergeMap parts{2, {{0, 1}, {2}, {3}}};
    MergeMap bodies{3, {{0, 1, 2}, {3}}};
    validate_merge_map(topo, parts);
    validate_merge_map(topo, bodies);

    Rng rng(derive_seed(seed, 0x70F));
    std::vector<SkeletonSequence> seqs;
    for (int s = 0; s < num_sequences; ++s) {
        SkeletonSequence seq;
        seq.identity = s;
        seq.source = "toy";
        for (int t = 0; t < frames; ++t) {
            Matrix frame(4, 3);
            for (std::size_t i = 0; i < frame.size(); ++i)
                frame.data()[i] = rng.uniform(-0.5, 0.5);
            seq.frames.push_back(std::move(frame));
        }
        seqs.push_back(std::move(seq));
    }
    return build_dataset(topo, parts, bodies, seqs, frames, true);
}

ModelConfig toy_model_config(int frames) {
    ModelConfig cfg;
    cfg.feature_dim = 4;
    cfg.num_heads = 2;
    cfg.hidden_dim = 10;
    cfg.head_hidden = 6;
    cfg.frames = frames;
    cfg.rounds = 1;
    return cfg;
}

MsrBatch grad_check_batch(const TrainDataset& data, const ModelConfig& cfg,
                          std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x6C));
    MsrBatch batch;
    const int f = cfg.frames;
    std::vector<int> full(static_cast<std::size_t>(f));
    for (int t = 0; t < f; ++t) full[static_cast<std::size_t>(t)] = t;
    for (const auto& ls : data.sequences) {
        batch.sequences.push_back(&ls.frames);
        auto samples = f >= 2 ? sample_subsequences(f, cfg.rounds, rng)
                              : std::vector<std::vector<int>>{};
        samples.push_back(full);
        batch.samples.push_back(std::move(samples));
    }
    return batch;
}

GradCheckReport grad_check(const TrainDataset& data, const ModelConfig& cfg,
                           std::uint64_t seed, double epsilon) {
    ModelParams params = make_params(cfg, data.node_counts);
    Rng init_rng(derive_seed(seed, kInitStream));
    init_params(params, cfg, init_rng);
    const MsrBatch batch = grad_check_batch(data, cfg, seed);

    ModelParams grads = params;
    zero_tensors(grads);
    msr_loss_and_grads(batch, params, cfg, &grads);

    GradCheckReport report;
    auto ps = tensor_ptrs(params);
    auto gs = tensor_ptrs(grads);
    std::vector<std::string> names;
    for_each_tensor(params,
                    [&](const std::string& n, const Matrix&) { names.push_back(n); });

    for (std::size_t t = 0; t < ps.size(); ++t) {
        double tensor_worst = 0.0;
        Matrix& m = *ps[t];
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double saved = m.data()[i];
            m.data()[i] = saved + epsilon;
            const double up = msr_loss_and_grads(batch, params, cfg, nullptr);
            m.data()[i] = saved - epsilon;
            const double down = msr_loss_and_grads(batch, params, cfg, nullptr);
            m.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double analytic = gs[t]->data()[i];
            if (!std::isfinite(numeric) || !std::isfinite(analytic))
                throw std::runtime_error("grad_check: non-finite comparison in " + names[t]);
            const double rel = std::fabs(analytic - numeric) /
                               std::max(std::fabs(analytic) + std::fabs(numeric), 1e-3);
            tensor_worst = std::max(tensor_worst, rel);
        }
        report.per_tensor.emplace_back(names[t], tensor_worst);
        report.max_rel_error = std::max(report.max_rel_error, tensor_worst);
    }
    return report;
}

}  // namespace smsge
