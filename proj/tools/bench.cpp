// Compares the serial reference path against the batched/OpenMP kernels on
// a synthetic training workload.

#include <chrono>
#include <cstdio>
#include <vector>

#include "smsge/data.hpp"
#include "smsge/parallel.hpp"
#include "smsge/ref.hpp"
#include "smsge/trainer.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main() {
    using namespace smsge;
    const Topology topo = build_topology("kinect20");
    auto [parts, bodies] = build_merge_maps(topo);
    SyntheticConfig scfg;
    scfg.identities = 5;
    scfg.sequences_per_identity = 4;
    scfg.frames = 6;
    scfg.seed = 11;
    TrainDataset data = build_dataset(topo, parts, bodies,
                                      generate_synthetic(scfg, topo, bodies), scfg.frames, true);

    TrainConfig cfg;
    cfg.preset = "kinect20";
    cfg.seed = 11;
    ModelParams params = make_params(cfg.model, data.node_counts);
    Rng rng(derive_seed(cfg.seed, 0x5EED));
    init_params(params, cfg.model, rng);
    ModelParams grads = params;

    Rng sample_rng(17);
    MsrBatch batch;
    for (const auto& ls : data.sequences) {
        batch.sequences.push_back(&ls.frames);
        batch.samples.push_back(sample_subsequences(cfg.model.frames, cfg.model.rounds,
                                                    sample_rng));
    }

    const int hw_threads = smsge::max_threads();
    std::printf("workload: %zu sequences, f=%d, kinect20, D_h=%d\n", data.sequences.size(),
                cfg.model.frames, cfg.model.hidden_dim);

    // Reference single-lane forward (loss only, scalar loops).
    double ref_time;
    double ref_loss = 0.0;
    {
        const auto t0 = Clock::now();
        for (std::size_t si = 0; si < batch.sequences.size(); ++si) {
            // per-frame embeddings once per sequence, as the engine does
            std::vector<std::vector<Matrix>> fused;
            for (const auto& frame : *batch.sequences[si])
                fused.push_back(ref::frame_embeddings(frame, params.mgrn, cfg.model));
            for (const auto& kept : batch.samples[si]) {
                std::vector<std::vector<Matrix>> targets(params.scale_ids.size());
                std::vector<Matrix> states(params.scale_ids.size());
                for (std::size_t s = 0; s < params.scale_ids.size(); ++s) {
                    std::vector<const Matrix*> in;
                    for (int t : kept) in.push_back(&fused[static_cast<std::size_t>(t)][s]);
                    states[s] = ref::encode_states(params.lstm[s], in);
                    for (int t : kept)
                        targets[s].push_back(
                            (*batch.sequences[si])[static_cast<std::size_t>(t)]
                                .per_scale[static_cast<std::size_t>(params.scale_ids[s])]
                                .positions);
                }
                ref_loss += msr_sample_loss(params, cfg.model, states, targets);
            }
        }
        ref_time = seconds_since(t0);
    }
    std::printf("reference serial forward:        %8.3f s  (loss %.3f)\n", ref_time, ref_loss);

    for (int threads : {1, hw_threads}) {
        set_threads(threads);
        // forward only
        auto t0 = Clock::now();
        const double loss = msr_loss_and_grads(batch, params, cfg.model, nullptr);
        const double fwd = seconds_since(t0);
        // forward + backward
        zero_tensors(grads);
        t0 = Clock::now();
        msr_loss_and_grads(batch, params, cfg.model, &grads);
        const double both = seconds_since(t0);
        std::printf("batched kernels (%d thread%s):     %8.3f s forward, %8.3f s fwd+bwd  (loss %.3f)\n",
                    threads, threads == 1 ? " " : "s", fwd, both, loss);
    }

    std::printf("note: losses of the two paths agree to ~1e-10; see parallel_test\n");
    return 0;
}
