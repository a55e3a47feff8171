#include "smsge/mgrn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smsge {

namespace {

constexpr double kLeakySlope = 0.2;

double leaky(double x) { return x > 0.0 ? x : kLeakySlope * x; }
double leaky_grad(double x) { return x > 0.0 ? 1.0 : kLeakySlope; }

int scale_index(const std::vector<int>& scales, int scale) {
    auto it = std::find(scales.begin(), scales.end(), scale);
    if (it == scales.end()) throw std::runtime_error("mgrn: scale not active");
    return static_cast<int>(it - scales.begin());
}

// One scale's attention + aggregation; caches everything backward needs.
void forward_scale(const ScaleGraph& g, const MgrnScaleParams& sp, const ModelConfig& cfg,
                   std::vector<Matrix>& mapped, std::vector<std::vector<double>>& logit_pre,
                   std::vector<std::vector<double>>& attn, std::vector<Matrix>& agg_pre,
                   Matrix& prefuse) {
    const int n = static_cast<int>(g.positions.rows());
    const int dt = cfg.feature_dim;
    const int heads = cfg.num_heads;
    std::size_t pair_count = 0;
    for (const auto& nb : g.neighbors) pair_count += nb.size();

    mapped.assign(static_cast<std::size_t>(heads), Matrix());
    logit_pre.assign(static_cast<std::size_t>(heads), {});
    attn.assign(static_cast<std::size_t>(heads), {});
    agg_pre.assign(static_cast<std::size_t>(heads), Matrix());
    prefuse = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(dt));

    for (int p = 0; p < heads; ++p) {
        Matrix& u = mapped[p];
        u = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(dt));
        matmul_nt(g.positions, sp.node_map[p], u);

        std::vector<double>& weights = attn[p];
        weights.resize(pair_count);
        if (cfg.structural_relations) {
            const double* wl = sp.relation[p].data();
            const double* wr = wl + dt;
            std::vector<double> left(n), right(n);
            for (int i = 0; i < n; ++i) {
                left[i] = dot(wl, u.row(i), dt);
                right[i] = dot(wr, u.row(i), dt);
            }
            std::vector<double>& pre = logit_pre[p];
            pre.resize(pair_count);
            std::size_t at = 0;
            for (int i = 0; i < n; ++i) {
                const auto& nb = g.neighbors[i];
                std::vector<double> scores(nb.size());
                for (std::size_t k = 0; k < nb.size(); ++k) {
                    const double raw = left[i] + right[nb[k]];
                    pre[at + k] = raw;
                    scores[k] = leaky(raw);
                }
                auto w = t_softmax(scores, cfg.t1);
                std::copy(w.begin(), w.end(), weights.begin() + static_cast<std::ptrdiff_t>(at));
                at += nb.size();
            }
        } else {
            std::size_t at = 0;
            for (int i = 0; i < n; ++i) {
                const double w = 1.0 / static_cast<double>(g.neighbors[i].size());
                for (std::size_t k = 0; k < g.neighbors[i].size(); ++k) weights[at + k] = w;
                at += g.neighbors[i].size();
            }
        }

        Matrix& z = agg_pre[p];
        z = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(dt));
        std::size_t at = 0;
        for (int i = 0; i < n; ++i) {
            double* zi = z.row(i);
            for (int j : g.neighbors[i]) {
                const double a = weights[at++];
                const double* uj = u.row(j);
                for (int q = 0; q < dt; ++q) zi[q] += a * uj[q];
            }
        }
        const double inv_heads = 1.0 / static_cast<double>(heads);
        for (std::size_t i = 0; i < z.size(); ++i)
            prefuse.data()[i] += inv_heads * std::max(0.0, z.data()[i]);
    }
}

}  // namespace

std::vector<double> t_softmax(const std::vector<double>& logits, double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("t_softmax: temperature must be positive");
    if (logits.empty()) throw std::invalid_argument("t_softmax: empty index set");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - mx) / temperature);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<std::vector<double>> structural_logits(const ScaleGraph& graph,
                                                   const MgrnScaleParams& params, int head) {
    const int n = static_cast<int>(graph.positions.rows());
    const int dt = static_cast<int>(params.node_map[head].rows());
    Matrix u(static_cast<std::size_t>(n), static_cast<std::size_t>(dt));
    matmul_nt(graph.positions, params.node_map[head], u);
    const double* wl = params.relation[head].data();
    const double* wr = wl + dt;
    std::vector<std::vector<double>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double li = dot(wl, u.row(i), dt);
        out[i].reserve(graph.neighbors[i].size());
        for (int j : graph.neighbors[i]) out[i].push_back(leaky(li + dot(wr, u.row(j), dt)));
    }
    return out;
}

Matrix aggregate_heads(const ScaleGraph& graph, const MgrnScaleParams& params, double t1,
                       bool use_attention) {
    ModelConfig cfg;
    cfg.feature_dim = static_cast<int>(params.node_map[0].rows());
    cfg.num_heads = static_cast<int>(params.node_map.size());
    cfg.t1 = t1;
    cfg.structural_relations = use_attention;
    std::vector<Matrix> mapped, agg_pre;
    std::vector<std::vector<double>> logit_pre, attn;
    Matrix prefuse;
    forward_scale(graph, params, cfg, mapped, logit_pre, attn, agg_pre, prefuse);
    return prefuse;
}

Matrix collab_matrix(const Matrix& emb_a, const Matrix& emb_b, double t2) {
    Matrix s(emb_a.rows(), emb_b.rows());
    matmul_nt(emb_a, emb_b, s);
    for (std::size_t i = 0; i < s.rows(); ++i) {
        std::vector<double> row(s.row(i), s.row(i) + s.cols());
        auto w = t_softmax(row, t2);
        std::copy(w.begin(), w.end(), s.row(i));
    }
    return s;
}

std::vector<Matrix> fuse(const std::vector<Matrix>& embeddings,
                         const std::vector<Matrix>& collab,
                         const std::vector<Matrix>& fusion,
                         const std::vector<std::pair<int, int>>& pairs,
                         const std::vector<int>& scales, double lambda_c) {
    if (pairs.size() != collab.size() || pairs.size() != fusion.size())
        throw std::runtime_error("fuse: missing collaborative matrix or fusion map");
    std::vector<Matrix> out = embeddings;
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
        const int ia = scale_index(scales, pairs[pi].first);
        const int ib = scale_index(scales, pairs[pi].second);
        Matrix m(embeddings[ib].rows(), embeddings[ib].cols());
        matmul_nt(embeddings[ib], fusion[pi], m);
        Matrix term(embeddings[ia].rows(), embeddings[ia].cols());
        matmul_nn(collab[pi], m, term);
        axpy(lambda_c, term, out[ia]);
    }
    return out;
}

void mgrn_forward(const MultiScaleFrame& frame, const MgrnParams& params,
                  const ModelConfig& cfg, MgrnCache& cache) {
    const auto scales = cfg.active_scales();
    const std::size_t ns = scales.size();
    cache.mapped.assign(ns, {});
    cache.logit_pre.assign(ns, {});
    cache.attn.assign(ns, {});
    cache.agg_pre.assign(ns, {});
    cache.prefuse.assign(ns, Matrix());
    cache.collab.clear();
    cache.fused.clear();

    for (std::size_t s = 0; s < ns; ++s) {
        const ScaleGraph& g = frame.per_scale[static_cast<std::size_t>(scales[s])];
        forward_scale(g, params.scales[s], cfg, cache.mapped[s], cache.logit_pre[s],
                      cache.attn[s], cache.agg_pre[s], cache.prefuse[s]);
    }

    if (cfg.collaborative_relations) {
        const auto pairs = cfg.scale_pairs();
        cache.collab.reserve(pairs.size());
        for (const auto& [a, b] : pairs) {
            const int ia = scale_index(scales, a);
            const int ib = scale_index(scales, b);
            cache.collab.push_back(collab_matrix(cache.prefuse[ia], cache.prefuse[ib], cfg.t2));
        }
        cache.fused = fuse(cache.prefuse, cache.collab, params.fusion, pairs, scales,
                           cfg.lambda_c);
    } else {
        cache.fused = cache.prefuse;
    }
}

void mgrn_backward(const MultiScaleFrame& frame, const MgrnParams& params,
                   const ModelConfig& cfg, const MgrnCache& cache,
                   const std::vector<Matrix>& d_fused, MgrnParams& grads) {
    const auto scales = cfg.active_scales();
    const int dt = cfg.feature_dim;
    const int heads = cfg.num_heads;

    std::vector<Matrix> d_pre = d_fused;

    if (cfg.collaborative_relations) {
        const auto pairs = cfg.scale_pairs();
        for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
            const int ia = scale_index(scales, pairs[pi].first);
            const int ib = scale_index(scales, pairs[pi].second);
            const Matrix& va = cache.prefuse[ia];
            const Matrix& vb = cache.prefuse[ib];
            const Matrix& ahat = cache.collab[pi];
            const Matrix& wc = params.fusion[pi];

            Matrix m(vb.rows(), vb.cols());
            matmul_nt(vb, wc, m);

            Matrix da(va.rows(), vb.rows());
            matmul_nt(d_fused[ia], m, da);
            for (std::size_t i = 0; i < da.size(); ++i) da.data()[i] *= cfg.lambda_c;

            Matrix dm(vb.rows(), vb.cols());
            matmul_tn_acc(ahat, d_fused[ia], dm);
            for (std::size_t i = 0; i < dm.size(); ++i) dm.data()[i] *= cfg.lambda_c;

            matmul_nn(dm, wc, d_pre[ib], true);
            matmul_tn_acc(dm, vb, grads.fusion[pi]);

            // T-softmax backward per row of the collaborative matrix.
            Matrix ds(da.rows(), da.cols());
            for (std::size_t i = 0; i < da.rows(); ++i) {
                const double* ai = ahat.row(i);
                const double* dai = da.row(i);
                double inner = 0.0;
                for (std::size_t j = 0; j < da.cols(); ++j) inner += dai[j] * ai[j];
                double* dsi = ds.row(i);
                for (std::size_t j = 0; j < da.cols(); ++j)
                    dsi[j] = (dai[j] - inner) * ai[j] / cfg.t2;
            }
            matmul_nn(ds, vb, d_pre[ia], true);
            matmul_tn_acc(ds, va, d_pre[ib]);
        }
    }

    for (std::size_t s = 0; s < scales.size(); ++s) {
        const ScaleGraph& g = frame.per_scale[static_cast<std::size_t>(scales[s])];
        const int n = static_cast<int>(g.positions.rows());
        const double inv_heads = 1.0 / static_cast<double>(heads);

        for (int p = 0; p < heads; ++p) {
            const Matrix& u = cache.mapped[s][p];
            const Matrix& z = cache.agg_pre[s][p];
            const std::vector<double>& weights = cache.attn[s][p];

            Matrix dz(z.rows(), z.cols());
            for (std::size_t i = 0; i < z.size(); ++i)
                dz.data()[i] = z.data()[i] > 0.0 ? inv_heads * d_pre[s].data()[i] : 0.0;

            Matrix du(u.rows(), u.cols());
            std::vector<double> d_attn(weights.size());
            std::size_t at = 0;
            for (int i = 0; i < n; ++i) {
                const double* dzi = dz.row(i);
                for (int j : g.neighbors[i]) {
                    d_attn[at] = dot(dzi, u.row(j), dt);
                    const double a = weights[at];
                    double* duj = du.row(j);
                    for (int q = 0; q < dt; ++q) duj[q] += a * dzi[q];
                    ++at;
                }
            }

            if (cfg.structural_relations) {
                const std::vector<double>& pre = cache.logit_pre[s][p];
                const double* wl = params.scales[s].relation[p].data();
                const double* wr = wl + dt;
                std::vector<double> dl(n, 0.0), dr(n, 0.0);
                at = 0;
                for (int i = 0; i < n; ++i) {
                    const auto& nb = g.neighbors[i];
                    double inner = 0.0;
                    for (std::size_t k = 0; k < nb.size(); ++k)
                        inner += d_attn[at + k] * weights[at + k];
                    for (std::size_t k = 0; k < nb.size(); ++k) {
                        const double de = (d_attn[at + k] - inner) * weights[at + k] / cfg.t1;
                        const double dpre = de * leaky_grad(pre[at + k]);
                        dl[i] += dpre;
                        dr[nb[k]] += dpre;
                    }
                    at += nb.size();
                }
                double* gw = grads.scales[s].relation[p].data();
                for (int i = 0; i < n; ++i) {
                    const double* ui = u.row(i);
                    double* dui = du.row(i);
                    for (int q = 0; q < dt; ++q) {
                        gw[q] += dl[i] * ui[q];
                        gw[dt + q] += dr[i] * ui[q];
                        dui[q] += dl[i] * wl[q] + dr[i] * wr[q];
                    }
                }
            }

            matmul_tn_acc(du, g.positions, grads.scales[s].node_map[p]);
        }
    }
}

Matrix dense_attention(const ScaleGraph& graph, const MgrnScaleParams& params, int head,
                       double t1, bool use_attention) {
    const int n = static_cast<int>(graph.positions.rows());
    Matrix a(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    if (use_attention) {
        auto logits = structural_logits(graph, params, head);
        for (int i = 0; i < n; ++i) {
            auto w = t_softmax(logits[i], t1);
            for (std::size_t k = 0; k < graph.neighbors[i].size(); ++k)
                a(i, graph.neighbors[i][k]) = w[k];
        }
    } else {
        for (int i = 0; i < n; ++i)
            for (int j : graph.neighbors[i])
                a(i, j) = 1.0 / static_cast<double>(graph.neighbors[i].size());
    }
    return a;
}

}  // namespace smsge
