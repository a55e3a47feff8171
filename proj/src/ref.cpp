#include "smsge/ref.hpp"

#include <cmath>

namespace smsge::ref {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double leaky(double x) { return x > 0.0 ? x : 0.2 * x; }

}  // namespace

Matrix attention_dense(const ScaleGraph& graph, const Matrix& wv, const Matrix& wr, double t1) {
    const int n = static_cast<int>(graph.positions.rows());
    const int dt = static_cast<int>(wv.rows());
    // mapped node features, one scalar loop at a time
    Matrix u(static_cast<std::size_t>(n), static_cast<std::size_t>(dt));
    for (int i = 0; i < n; ++i)
        for (int q = 0; q < dt; ++q) {
            double acc = 0.0;
            for (int c = 0; c < 3; ++c) acc += wv(q, c) * graph.positions(i, c);
            u(i, q) = acc;
        }
    Matrix a(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<double> e;
        for (int j : graph.neighbors[i]) {
            double score = 0.0;
            for (int q = 0; q < dt; ++q) score += wr(q, 0) * u(i, q);
            for (int q = 0; q < dt; ++q) score += wr(dt + q, 0) * u(j, q);
            e.push_back(leaky(score));
        }
        double mx = e[0];
        for (double v : e) mx = std::max(mx, v);
        double denom = 0.0;
        for (double v : e) denom += std::exp((v - mx) / t1);
        for (std::size_t k = 0; k < e.size(); ++k)
            a(i, graph.neighbors[i][k]) = std::exp((e[k] - mx) / t1) / denom;
    }
    return a;
}

Matrix node_embeddings(const ScaleGraph& graph, const MgrnScaleParams& params, double t1,
                       bool learned_attention) {
    const int n = static_cast<int>(graph.positions.rows());
    const int heads = static_cast<int>(params.node_map.size());
    const int dt = static_cast<int>(params.node_map[0].rows());
    Matrix out(static_cast<std::size_t>(n), static_cast<std::size_t>(dt));
    for (int p = 0; p < heads; ++p) {
        Matrix a;
        if (learned_attention) {
            a = attention_dense(graph, params.node_map[p], params.relation[p], t1);
        } else {
            a = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                for (int j : graph.neighbors[i])
                    a(i, j) = 1.0 / static_cast<double>(graph.neighbors[i].size());
        }
        const Matrix& wv = params.node_map[p];
        for (int i = 0; i < n; ++i)
            for (int q = 0; q < dt; ++q) {
                double acc = 0.0;
                for (int j : graph.neighbors[i]) {
                    double uq = 0.0;
                    for (int c = 0; c < 3; ++c) uq += wv(q, c) * graph.positions(j, c);
                    acc += a(i, j) * uq;
                }
                out(i, q) += std::max(0.0, acc) / static_cast<double>(heads);
            }
    }
    return out;
}

Matrix collab(const Matrix& emb_a, const Matrix& emb_b, double t2) {
    Matrix gram(emb_a.rows(), emb_b.rows());
    for (std::size_t i = 0; i < emb_a.rows(); ++i)
        for (std::size_t j = 0; j < emb_b.rows(); ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < emb_a.cols(); ++q) acc += emb_a(i, q) * emb_b(j, q);
            gram(i, j) = acc;
        }
    for (std::size_t i = 0; i < gram.rows(); ++i) {
        double mx = gram(i, 0);
        for (std::size_t j = 1; j < gram.cols(); ++j) mx = std::max(mx, gram(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < gram.cols(); ++j) denom += std::exp((gram(i, j) - mx) / t2);
        for (std::size_t j = 0; j < gram.cols(); ++j)
            gram(i, j) = std::exp((gram(i, j) - mx) / t2) / denom;
    }
    return gram;
}

std::vector<Matrix> frame_embeddings(const MultiScaleFrame& frame, const MgrnParams& params,
                                     const ModelConfig& cfg) {
    const auto scales = cfg.active_scales();
    std::vector<Matrix> pre(scales.size());
    for (std::size_t s = 0; s < scales.size(); ++s)
        pre[s] = node_embeddings(frame.per_scale[static_cast<std::size_t>(scales[s])],
                                 params.scales[s], cfg.t1, cfg.structural_relations);
    if (!cfg.collaborative_relations) return pre;

    std::vector<Matrix> out = pre;
    const auto pairs = cfg.scale_pairs();
    for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
        const auto [a, b] = pairs[pi];
        std::size_t ia = 0, ib = 0;
        for (std::size_t s = 0; s < scales.size(); ++s) {
            if (scales[s] == a) ia = s;
            if (scales[s] == b) ib = s;
        }
        const Matrix ahat = collab(pre[ia], pre[ib], cfg.t2);
        const Matrix& wc = params.fusion[pi];
        for (std::size_t i = 0; i < pre[ia].rows(); ++i)
            for (std::size_t q = 0; q < pre[ia].cols(); ++q) {
                double acc = 0.0;
                for (std::size_t j = 0; j < pre[ib].rows(); ++j) {
                    double mapped = 0.0;
                    for (std::size_t r = 0; r < pre[ib].cols(); ++r)
                        mapped += wc(q, r) * pre[ib](j, r);
                    acc += ahat(i, j) * mapped;
                }
                out[ia](i, q) += cfg.lambda_c * acc;
            }
    }
    return out;
}

Matrix encode_states(const LstmParams& p, const std::vector<const Matrix*>& fused) {
    const std::size_t dh = p.l1.wh.cols();
    const std::size_t steps = fused.size();
    Matrix states(steps, dh);
    std::vector<double> h1(dh, 0.0), c1(dh, 0.0), h2(dh, 0.0), c2(dh, 0.0);
    std::vector<double> pre(4 * dh);
    auto cell = [&](const LstmLayerParams& lp, const double* x, std::size_t xn,
                    std::vector<double>& h, std::vector<double>& c, bool first) {
        for (std::size_t q = 0; q < 4 * dh; ++q) {
            double acc = lp.b(q, 0);
            for (std::size_t i = 0; i < xn; ++i) acc += lp.wx(q, i) * x[i];
            if (!first)
                for (std::size_t i = 0; i < dh; ++i) acc += lp.wh(q, i) * h[i];
            pre[q] = acc;
        }
        for (std::size_t q = 0; q < dh; ++q) {
            const double iv = sigmoid(pre[q]);
            const double fv = sigmoid(pre[dh + q]);
            const double gv = std::tanh(pre[2 * dh + q]);
            const double ov = sigmoid(pre[3 * dh + q]);
            c[q] = iv * gv + (first ? 0.0 : fv * c[q]);
            h[q] = ov * std::tanh(c[q]);
        }
    };
    for (std::size_t t = 0; t < steps; ++t) {
        cell(p.l1, fused[t]->data(), fused[t]->size(), h1, c1, t == 0);
        cell(p.l2, h1.data(), dh, h2, c2, t == 0);
        for (std::size_t q = 0; q < dh; ++q) states(t, q) = h2[q];
    }
    return states;
}

double l1(const Matrix& a, const Matrix& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::fabs(a.data()[i] - b.data()[i]);
    return acc;
}

}  // namespace smsge::ref
