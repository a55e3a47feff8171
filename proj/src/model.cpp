#include "smsge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>

namespace smsge {

namespace {

int index_of_scale(const std::vector<int>& scales, int scale) {
    auto it = std::find(scales.begin(), scales.end(), scale);
    if (it == scales.end()) throw std::runtime_error("model: scale not active");
    return static_cast<int>(it - scales.begin());
}

void fill_glorot(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
}

}  // namespace

ModelParams make_params(const ModelConfig& cfg, const std::vector<int>& node_counts) {
    ModelParams p;
    p.scale_ids = cfg.active_scales();
    p.head_pair_ids = cfg.head_pairs();
    if (cfg.collaborative_relations) p.fusion_pair_ids = cfg.scale_pairs();

    const std::size_t dt = static_cast<std::size_t>(cfg.feature_dim);
    const std::size_t dh = static_cast<std::size_t>(cfg.hidden_dim);

    p.mgrn.scales.resize(p.scale_ids.size());
    for (auto& sp : p.mgrn.scales) {
        sp.node_map.assign(static_cast<std::size_t>(cfg.num_heads), Matrix(dt, 3));
        if (cfg.structural_relations)
            sp.relation.assign(static_cast<std::size_t>(cfg.num_heads), Matrix(2 * dt, 1));
    }
    p.mgrn.fusion.assign(p.fusion_pair_ids.size(), Matrix(dt, dt));

    p.lstm.resize(p.scale_ids.size());
    for (std::size_t s = 0; s < p.scale_ids.size(); ++s) {
        const std::size_t in =
            static_cast<std::size_t>(node_counts[static_cast<std::size_t>(p.scale_ids[s])]) * dt;
        p.lstm[s].l1 = {Matrix(4 * dh, in), Matrix(4 * dh, dh), Matrix(4 * dh, 1)};
        p.lstm[s].l2 = {Matrix(4 * dh, dh), Matrix(4 * dh, dh), Matrix(4 * dh, 1)};
    }

    for (auto [a, b] : p.head_pair_ids) {
        (void)a;
        HeadParams h;
        const std::size_t hh = static_cast<std::size_t>(cfg.head_hidden);
        const std::size_t out =
            static_cast<std::size_t>(node_counts[static_cast<std::size_t>(b)]) * 3;
        h.w1 = Matrix(hh, dh);
        h.b1 = Matrix(hh, 1);
        h.w2 = Matrix(out, hh);
        h.b2 = Matrix(out, 1);
        p.heads.push_back(std::move(h));
    }
    return p;
}

void init_params(ModelParams& p, const ModelConfig& cfg, Rng& rng) {
    const std::size_t dt = static_cast<std::size_t>(cfg.feature_dim);
    const std::size_t dh = static_cast<std::size_t>(cfg.hidden_dim);
    for (auto& sp : p.mgrn.scales) {
        for (auto& w : sp.node_map) fill_glorot(w, 3, dt, rng);
        for (auto& w : sp.relation) fill_glorot(w, 2 * dt, 1, rng);
    }
    for (auto& w : p.mgrn.fusion) fill_glorot(w, dt, dt, rng);
    for (auto& l : p.lstm) {
        fill_glorot(l.l1.wx, l.l1.wx.cols(), dh, rng);
        fill_glorot(l.l1.wh, dh, dh, rng);
        l.l1.b.zero();
        fill_glorot(l.l2.wx, l.l2.wx.cols(), dh, rng);
        fill_glorot(l.l2.wh, dh, dh, rng);
        l.l2.b.zero();
    }
    for (auto& h : p.heads) {
        fill_glorot(h.w1, h.w1.cols(), h.w1.rows(), rng);
        h.b1.zero();
        fill_glorot(h.w2, h.w2.cols(), h.w2.rows(), rng);
        h.b2.zero();
    }
}

void zero_tensors(ModelParams& p) {
    for_each_tensor(p, [](const std::string&, Matrix& m) { m.zero(); });
}

namespace {

template <typename Params, typename Fn>
void enumerate_tensors(Params& p, const Fn& fn) {
    for (std::size_t s = 0; s < p.mgrn.scales.size(); ++s) {
        const std::string base = "mgrn.s" + std::to_string(p.scale_ids[s]);
        auto& sp = p.mgrn.scales[s];
        for (std::size_t h = 0; h < sp.node_map.size(); ++h) {
            fn(base + ".h" + std::to_string(h) + ".wv", sp.node_map[h]);
            if (!sp.relation.empty())
                fn(base + ".h" + std::to_string(h) + ".wr", sp.relation[h]);
        }
    }
    for (std::size_t i = 0; i < p.mgrn.fusion.size(); ++i) {
        auto [a, b] = p.fusion_pair_ids[i];
        fn("mgrn.c" + std::to_string(a) + std::to_string(b) + ".wc", p.mgrn.fusion[i]);
    }
    for (std::size_t s = 0; s < p.lstm.size(); ++s) {
        const std::string base = "lstm.s" + std::to_string(p.scale_ids[s]);
        fn(base + ".l1.wx", p.lstm[s].l1.wx);
        fn(base + ".l1.wh", p.lstm[s].l1.wh);
        fn(base + ".l1.b", p.lstm[s].l1.b);
        fn(base + ".l2.wx", p.lstm[s].l2.wx);
        fn(base + ".l2.wh", p.lstm[s].l2.wh);
        fn(base + ".l2.b", p.lstm[s].l2.b);
    }
    for (std::size_t i = 0; i < p.heads.size(); ++i) {
        auto [a, b] = p.head_pair_ids[i];
        const std::string base = "head." + std::to_string(a) + std::to_string(b);
        fn(base + ".w1", p.heads[i].w1);
        fn(base + ".b1", p.heads[i].b1);
        fn(base + ".w2", p.heads[i].w2);
        fn(base + ".b2", p.heads[i].b2);
    }
}

}  // namespace

void for_each_tensor(ModelParams& p,
                     const std::function<void(const std::string&, Matrix&)>& fn) {
    enumerate_tensors(p, fn);
}

void for_each_tensor(const ModelParams& p,
                     const std::function<void(const std::string&, const Matrix&)>& fn) {
    enumerate_tensors(p, fn);
}

std::vector<std::vector<int>> sample_subsequences(int f, int r, Rng& rng) {
    if (f < 2) throw std::invalid_argument("sample_subsequences: f must be >= 2");
    if (r < 1) throw std::invalid_argument("sample_subsequences: rounds must be >= 1");
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(r) * static_cast<std::size_t>(f - 1));
    for (int round = 0; round < r; ++round)
        for (int k = 1; k < f; ++k) out.push_back(rng.ordered_subset(f, k));
    return out;
}

namespace {

// One batched encoder run over samples sharing the same subsequence length.
struct GroupRun {
    int k = 0;
    std::vector<std::pair<int, int>> lanes;       // (seq index, sample index)
    std::vector<std::vector<Matrix>> x;           // [scale][t]: lanes x n*D_t
    std::vector<LstmCache> lstm;                  // [scale]
    std::vector<std::vector<Matrix>> dh;          // [scale][t]: lanes x D_h
};

void run_mgrn_forward(const MsrBatch& batch, const ModelParams& params, const ModelConfig& cfg,
                      std::vector<MgrnCache>& caches) {
    const int nseq = static_cast<int>(batch.sequences.size());
    const int f = static_cast<int>(batch.sequences[0]->size());
    caches.assign(static_cast<std::size_t>(nseq) * static_cast<std::size_t>(f), MgrnCache());
#pragma omp parallel for schedule(static)
    for (int idx = 0; idx < nseq * f; ++idx) {
        const int si = idx / f, t = idx % f;
        mgrn_forward((*batch.sequences[si])[static_cast<std::size_t>(t)], params.mgrn, cfg,
                     caches[static_cast<std::size_t>(idx)]);
    }
}

}  // namespace

double msr_loss_and_grads(const MsrBatch& batch, const ModelParams& params,
                          const ModelConfig& cfg, ModelParams* grads) {
    const auto scales = cfg.active_scales();
    const int ns = static_cast<int>(scales.size());
    const int nseq = static_cast<int>(batch.sequences.size());
    if (nseq == 0) return 0.0;
    if (batch.samples.size() != batch.sequences.size())
        throw std::invalid_argument("msr: samples/sequences size mismatch");
    const int f = static_cast<int>(batch.sequences[0]->size());
    for (const auto* seq : batch.sequences)
        if (static_cast<int>(seq->size()) != f)
            throw std::invalid_argument("msr: sequences must share the frame count");
    const int dt = cfg.feature_dim;

    std::vector<MgrnCache> caches;
    run_mgrn_forward(batch, params, cfg, caches);

    // Group samples by length so the encoders run batched.
    std::map<int, std::vector<std::pair<int, int>>> by_len;
    for (int si = 0; si < nseq; ++si)
        for (int sj = 0; sj < static_cast<int>(batch.samples[si].size()); ++sj) {
            const auto& kept = batch.samples[si][sj];
            if (kept.empty()) throw std::invalid_argument("msr: empty subsequence");
            for (int idx : kept)
                if (idx < 0 || idx >= f)
                    throw std::invalid_argument("msr: kept frame index out of range");
            by_len[static_cast<int>(kept.size())].push_back({si, sj});
        }

    std::vector<GroupRun> runs;
    runs.reserve(by_len.size());
    for (auto& [k, lanes] : by_len) {
        GroupRun run;
        run.k = k;
        run.lanes = lanes;
        run.x.resize(static_cast<std::size_t>(ns));
        run.lstm.resize(static_cast<std::size_t>(ns));
        if (grads) run.dh.resize(static_cast<std::size_t>(ns));
        const std::size_t rows = lanes.size();
        for (int s = 0; s < ns; ++s) {
            const std::size_t width =
                caches[0].fused[static_cast<std::size_t>(s)].size();  // n * D_t
            auto& xs = run.x[static_cast<std::size_t>(s)];
            xs.assign(static_cast<std::size_t>(k), Matrix(rows, width));
            for (int t = 0; t < k; ++t) {
                for (std::size_t lane = 0; lane < rows; ++lane) {
                    const auto [si, sj] = lanes[lane];
                    const int frame = batch.samples[si][static_cast<std::size_t>(sj)]
                                                   [static_cast<std::size_t>(t)];
                    const Matrix& g =
                        caches[static_cast<std::size_t>(si * f + frame)].fused[static_cast<std::size_t>(s)];
                    std::memcpy(xs[static_cast<std::size_t>(t)].row(lane), g.data(),
                                width * sizeof(double));
                }
            }
            lstm_forward(params.lstm[static_cast<std::size_t>(s)], xs,
                         run.lstm[static_cast<std::size_t>(s)]);
            if (grads)
                run.dh[static_cast<std::size_t>(s)].assign(
                    static_cast<std::size_t>(k),
                    Matrix(rows, static_cast<std::size_t>(cfg.hidden_dim)));
        }
        runs.push_back(std::move(run));
    }

    // Reconstruction heads and the L1 objective.
    double loss = 0.0;
    for (auto& run : runs) {
        const std::size_t rows = run.lanes.size();
        for (std::size_t hi = 0; hi < params.heads.size(); ++hi) {
            const auto [a, b] = params.head_pair_ids[hi];
            const int ia = index_of_scale(scales, a);
            for (int t = 0; t < run.k; ++t) {
                const Matrix& h = run.lstm[static_cast<std::size_t>(ia)].h2[static_cast<std::size_t>(t)];
                HeadCache hc;
                Matrix recon = head_forward(params.heads[hi], h, hc);
                Matrix target(rows, recon.cols());
                for (std::size_t lane = 0; lane < rows; ++lane) {
                    const auto [si, sj] = run.lanes[lane];
                    const int frame = batch.samples[si][static_cast<std::size_t>(sj)]
                                                   [static_cast<std::size_t>(t)];
                    const Matrix& pos = (*batch.sequences[si])[static_cast<std::size_t>(frame)]
                                            .per_scale[static_cast<std::size_t>(b)]
                                            .positions;
                    if (pos.size() != recon.cols())
                        throw std::runtime_error("msr: target/reconstruction shape mismatch");
                    std::memcpy(target.row(lane), pos.data(), pos.size() * sizeof(double));
                }
                if (grads) {
                    Matrix dout(recon.rows(), recon.cols());
                    for (std::size_t i = 0; i < recon.size(); ++i) {
                        const double d = recon.data()[i] - target.data()[i];
                        loss += std::fabs(d);
                        dout.data()[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                    }
                    head_backward(params.heads[hi], hc, h, dout,
                                  run.dh[static_cast<std::size_t>(ia)][static_cast<std::size_t>(t)],
                                  grads->heads[hi]);
                } else {
                    for (std::size_t i = 0; i < recon.size(); ++i)
                        loss += std::fabs(recon.data()[i] - target.data()[i]);
                }
            }
        }
    }
    if (!grads) return loss;

    // Encoder backward; gradients w.r.t. fused node embeddings collect per
    // (sequence, frame, scale).
    std::vector<std::vector<Matrix>> d_fused(caches.size());
    for (std::size_t idx = 0; idx < caches.size(); ++idx) {
        d_fused[idx].resize(static_cast<std::size_t>(ns));
        for (int s = 0; s < ns; ++s) {
            const Matrix& g = caches[idx].fused[static_cast<std::size_t>(s)];
            d_fused[idx][static_cast<std::size_t>(s)] = Matrix(g.rows(), g.cols());
        }
    }
    for (auto& run : runs) {
        for (int s = 0; s < ns; ++s) {
            std::vector<Matrix> dx;
            lstm_backward(params.lstm[static_cast<std::size_t>(s)],
                          run.x[static_cast<std::size_t>(s)],
                          run.lstm[static_cast<std::size_t>(s)],
                          run.dh[static_cast<std::size_t>(s)], dx,
                          grads->lstm[static_cast<std::size_t>(s)]);
            for (int t = 0; t < run.k; ++t) {
                for (std::size_t lane = 0; lane < run.lanes.size(); ++lane) {
                    const auto [si, sj] = run.lanes[lane];
                    const int frame = batch.samples[si][static_cast<std::size_t>(sj)]
                                                   [static_cast<std::size_t>(t)];
                    Matrix& dst = d_fused[static_cast<std::size_t>(si * f + frame)]
                                         [static_cast<std::size_t>(s)];
                    const double* src = dx[static_cast<std::size_t>(t)].row(lane);
                    double* d = dst.data();
                    const std::size_t width = dst.size();
                    for (std::size_t i = 0; i < width; ++i) d[i] += src[i];
                }
            }
        }
    }

    // Relation-network backward; cheap relative to the encoders, kept
    // serial so gradient accumulation order is fixed.
    for (int idx = 0; idx < nseq * f; ++idx) {
        const int si = idx / f, t = idx % f;
        mgrn_backward((*batch.sequences[si])[static_cast<std::size_t>(t)], params.mgrn, cfg,
                      caches[static_cast<std::size_t>(idx)],
                      d_fused[static_cast<std::size_t>(idx)], grads->mgrn);
    }
    (void)dt;
    return loss;
}

std::vector<std::vector<Matrix>> encode_sequences(
    const std::vector<const std::vector<MultiScaleFrame>*>& seqs, const ModelParams& params,
    const ModelConfig& cfg) {
    if (seqs.empty()) return {};
    const int f = static_cast<int>(seqs[0]->size());
    if (f < 1) throw std::invalid_argument("encode_sequences: empty sequence");
    MsrBatch batch;
    batch.sequences = seqs;
    std::vector<int> all(static_cast<std::size_t>(f));
    for (int t = 0; t < f; ++t) all[static_cast<std::size_t>(t)] = t;
    batch.samples.assign(seqs.size(), {all});
    for (const auto* s : seqs)
        if (static_cast<int>(s->size()) != f)
            throw std::invalid_argument("encode_sequences: sequences must share the frame count");

    const auto scales = cfg.active_scales();
    const int ns = static_cast<int>(scales.size());
    std::vector<MgrnCache> caches;
    run_mgrn_forward(batch, params, cfg, caches);

    std::vector<std::vector<Matrix>> out(
        seqs.size(), std::vector<Matrix>(static_cast<std::size_t>(ns)));
    const std::size_t rows = seqs.size();
    for (int s = 0; s < ns; ++s) {
        const std::size_t width = caches[0].fused[static_cast<std::size_t>(s)].size();
        std::vector<Matrix> x(static_cast<std::size_t>(f), Matrix(rows, width));
        for (int t = 0; t < f; ++t)
            for (std::size_t lane = 0; lane < rows; ++lane) {
                const Matrix& g = caches[lane * static_cast<std::size_t>(f) +
                                         static_cast<std::size_t>(t)]
                                      .fused[static_cast<std::size_t>(s)];
                std::memcpy(x[static_cast<std::size_t>(t)].row(lane), g.data(),
                            width * sizeof(double));
            }
        LstmCache lc;
        lstm_forward(params.lstm[static_cast<std::size_t>(s)], x, lc);
        for (std::size_t lane = 0; lane < rows; ++lane) {
            Matrix& h = out[lane][static_cast<std::size_t>(s)];
            h = Matrix(static_cast<std::size_t>(f), static_cast<std::size_t>(cfg.hidden_dim));
            for (int t = 0; t < f; ++t)
                std::memcpy(h.row(static_cast<std::size_t>(t)),
                            lc.h2[static_cast<std::size_t>(t)].row(lane),
                            static_cast<std::size_t>(cfg.hidden_dim) * sizeof(double));
        }
    }
    return out;
}

std::vector<Matrix> encode_single(const std::vector<MultiScaleFrame>& frames,
                                  const std::vector<int>& kept, const ModelParams& params,
                                  const ModelConfig& cfg) {
    if (kept.empty()) throw std::invalid_argument("encode_single: empty subsequence");
    const auto scales = cfg.active_scales();
    std::vector<Matrix> out(scales.size());
    std::vector<MgrnCache> caches(kept.size());
    for (std::size_t t = 0; t < kept.size(); ++t)
        mgrn_forward(frames[static_cast<std::size_t>(kept[t])], params.mgrn, cfg, caches[t]);
    for (std::size_t s = 0; s < scales.size(); ++s) {
        std::vector<Matrix> x;
        x.reserve(kept.size());
        for (std::size_t t = 0; t < kept.size(); ++t) {
            const Matrix& g = caches[t].fused[s];
            Matrix xt(1, g.size());
            std::memcpy(xt.data(), g.data(), g.size() * sizeof(double));
            x.push_back(std::move(xt));
        }
        LstmCache lc;
        lstm_forward(params.lstm[s], x, lc);
        out[s] = Matrix(kept.size(), static_cast<std::size_t>(cfg.hidden_dim));
        for (std::size_t t = 0; t < kept.size(); ++t)
            std::memcpy(out[s].row(t), lc.h2[t].data(),
                        static_cast<std::size_t>(cfg.hidden_dim) * sizeof(double));
    }
    return out;
}

Matrix reconstruct(const ModelParams& p, const ModelConfig& cfg, int scale_a, int scale_b,
                   const Matrix& states) {
    if (scale_a > scale_b)
        throw std::invalid_argument("reconstruct: pair (" + std::to_string(scale_a) + "," +
                                    std::to_string(scale_b) + ") with a > b rejected");
    (void)cfg;
    for (std::size_t hi = 0; hi < p.head_pair_ids.size(); ++hi) {
        if (p.head_pair_ids[hi] == std::make_pair(scale_a, scale_b)) {
            HeadCache hc;
            return head_forward(p.heads[hi], states, hc);
        }
    }
    throw std::runtime_error("reconstruct: head (" + std::to_string(scale_a) + "," +
                             std::to_string(scale_b) + ") is not active");
}

double msr_sample_loss(const ModelParams& p, const ModelConfig& cfg,
                       const std::vector<Matrix>& states,
                       const std::vector<std::vector<Matrix>>& targets) {
    const auto scales = cfg.active_scales();
    double loss = 0.0;
    for (std::size_t hi = 0; hi < p.heads.size(); ++hi) {
        const auto [a, b] = p.head_pair_ids[hi];
        const int ia = index_of_scale(scales, a);
        const int ib = index_of_scale(scales, b);
        HeadCache hc;
        Matrix recon = head_forward(p.heads[hi], states[static_cast<std::size_t>(ia)], hc);
        for (std::size_t t = 0; t < recon.rows(); ++t) {
            const Matrix& target = targets[static_cast<std::size_t>(ib)][t];
            if (target.size() != recon.cols())
                throw std::runtime_error("msr: target/reconstruction shape mismatch");
            const double* tr = target.data();
            const double* rr = recon.row(t);
            for (std::size_t i = 0; i < target.size(); ++i) loss += std::fabs(rr[i] - tr[i]);
        }
    }
    return loss;
}

}  // namespace smsge
