#include "smsge/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "smsge/adam.hpp"
#include "smsge/checkpoint.hpp"

namespace smsge {

namespace {

const char* kFeaturesMagic = "SMSGF1";
const char* kProbeMagic = "SMSGP1";

void fill_glorot(Matrix& m, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
}

// logits for a block of feature rows.
Matrix probe_logits(const ProbeModel& p, const Matrix& x, Matrix* act1_out) {
    Matrix act1(x.rows(), p.w1.rows());
    matmul_nt(x, p.w1, act1);
    for (std::size_t r = 0; r < act1.rows(); ++r) {
        double* row = act1.row(r);
        for (std::size_t q = 0; q < act1.cols(); ++q) {
            row[q] += p.b1.data()[q];
            if (row[q] < 0.0) row[q] = 0.0;
        }
    }
    Matrix logits(x.rows(), p.w2.rows());
    matmul_nt(act1, p.w2, logits);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double* row = logits.row(r);
        for (std::size_t q = 0; q < logits.cols(); ++q) row[q] += p.b2.data()[q];
    }
    if (act1_out) *act1_out = std::move(act1);
    return logits;
}

void softmax_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double* row = m.row(r);
        double mx = row[0];
        for (std::size_t q = 1; q < m.cols(); ++q) mx = std::max(mx, row[q]);
        double sum = 0.0;
        for (std::size_t q = 0; q < m.cols(); ++q) {
            row[q] = std::exp(row[q] - mx);
            sum += row[q];
        }
        for (std::size_t q = 0; q < m.cols(); ++q) row[q] /= sum;
    }
}

}  // namespace

std::vector<SequenceFeatures> extract_features(const TrainDataset& data, const Checkpoint& ck) {
    std::vector<const std::vector<MultiScaleFrame>*> seqs;
    seqs.reserve(data.sequences.size());
    for (const auto& ls : data.sequences) seqs.push_back(&ls.frames);
    const auto states = encode_sequences(seqs, ck.params, ck.config.model);

    const int dh = ck.config.model.hidden_dim;
    const std::size_t num_scales = ck.params.scale_ids.size();
    std::vector<SequenceFeatures> out(data.sequences.size());
    for (std::size_t i = 0; i < data.sequences.size(); ++i) {
        const auto& ls = data.sequences[i];
        SequenceFeatures& sf = out[i];
        sf.id = ls.seq.identity;
        sf.view = ls.seq.view;
        sf.split = ls.seq.split;
        const std::size_t f = ls.frames.size();
        sf.states = Matrix(f, num_scales * static_cast<std::size_t>(dh));
        for (std::size_t t = 0; t < f; ++t)
            for (std::size_t s = 0; s < num_scales; ++s)
                std::memcpy(sf.states.row(t) + s * static_cast<std::size_t>(dh),
                            states[i][s].row(t), static_cast<std::size_t>(dh) * sizeof(double));
    }
    return out;
}

ProbeModel train_probe(const std::vector<SequenceFeatures>& train, const ProbeConfig& cfg,
                       std::ostream* log) {
    if (train.empty()) throw std::invalid_argument("train_probe: no training features");
    std::set<int> ids;
    for (const auto& sf : train) ids.insert(sf.id);
    ProbeModel probe;
    probe.classes.assign(ids.begin(), ids.end());
    const std::size_t num_classes = probe.classes.size();
    const std::size_t dim = train[0].states.cols();

    std::size_t rows = 0;
    for (const auto& sf : train) rows += sf.states.rows();
    Matrix x(rows, dim);
    std::vector<int> labels(rows);
    std::size_t at = 0;
    for (const auto& sf : train) {
        const int cls = static_cast<int>(
            std::lower_bound(probe.classes.begin(), probe.classes.end(), sf.id) -
            probe.classes.begin());
        for (std::size_t t = 0; t < sf.states.rows(); ++t) {
            std::memcpy(x.row(at), sf.states.row(t), dim * sizeof(double));
            labels[at] = cls;
            ++at;
        }
    }

    Rng rng(derive_seed(cfg.seed, 0xBEEF));
    probe.w1 = Matrix(static_cast<std::size_t>(cfg.hidden), dim);
    probe.b1 = Matrix(static_cast<std::size_t>(cfg.hidden), 1);
    probe.w2 = Matrix(num_classes, static_cast<std::size_t>(cfg.hidden));
    probe.b2 = Matrix(num_classes, 1);
    fill_glorot(probe.w1, rng);
    fill_glorot(probe.w2, rng);

    std::vector<Matrix*> params = {&probe.w1, &probe.b1, &probe.w2, &probe.b2};
    Matrix gw1(probe.w1.rows(), probe.w1.cols()), gb1(probe.b1.rows(), 1);
    Matrix gw2(probe.w2.rows(), probe.w2.cols()), gb2(probe.b2.rows(), 1);
    std::vector<const Matrix*> grads = {&gw1, &gb1, &gw2, &gb2};
    std::vector<Matrix> m, v;
    for (auto* p : params) {
        m.emplace_back(p->rows(), p->cols());
        v.emplace_back(p->rows(), p->cols());
    }
    long step = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Matrix act1;
        Matrix probs = probe_logits(probe, x, &act1);
        softmax_rows(probs);
        double loss = 0.0;
        for (std::size_t r = 0; r < rows; ++r)
            loss -= std::log(std::max(probs(r, static_cast<std::size_t>(labels[r])), 1e-300));
        loss /= static_cast<double>(rows);

        Matrix dlogits = probs;
        const double inv = 1.0 / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            dlogits(r, static_cast<std::size_t>(labels[r])) -= 1.0;
            double* row = dlogits.row(r);
            for (std::size_t q = 0; q < dlogits.cols(); ++q) row[q] *= inv;
        }
        gw2.zero();
        gb2.zero();
        gw1.zero();
        gb1.zero();
        matmul_tn_acc(dlogits, act1, gw2);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t q = 0; q < dlogits.cols(); ++q)
                gb2.data()[q] += dlogits(r, q);
        Matrix dact(rows, act1.cols());
        matmul_nn(dlogits, probe.w2, dact);
        for (std::size_t i = 0; i < dact.size(); ++i)
            if (act1.data()[i] <= 0.0) dact.data()[i] = 0.0;
        matmul_tn_acc(dact, x, gw1);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t q = 0; q < dact.cols(); ++q)
                gb1.data()[q] += dact(r, q);

        adam_step_tensors(params, grads, m, v, step, cfg.learning_rate, 0.9, 0.999, 1e-8);
        if (log && (epoch == 1 || epoch % 25 == 0 || epoch == cfg.epochs))
            (*log) << "probe epoch " << epoch << " ce " << loss << "\n";
    }
    return probe;
}

std::vector<double> predict_sequence(const ProbeModel& probe, const Matrix& states) {
    if (states.rows() == 0) throw std::invalid_argument("predict_sequence: empty sequence");
    Matrix probs = probe_logits(probe, states, nullptr);
    softmax_rows(probs);
    std::vector<double> avg(probs.cols(), 0.0);
    for (std::size_t r = 0; r < probs.rows(); ++r)
        for (std::size_t q = 0; q < probs.cols(); ++q) avg[q] += probs(r, q);
    for (double& v : avg) v /= static_cast<double>(probs.rows());
    return avg;
}

CmcReport cmc_from_scores(const std::vector<std::vector<double>>& scores,
                          const std::vector<int>& true_class_indices) {
    if (scores.empty()) throw std::invalid_argument("cmc: no sequences");
    if (scores.size() != true_class_indices.size())
        throw std::invalid_argument("cmc: scores/labels size mismatch");
    const std::size_t num_classes = scores[0].size();
    CmcReport report;
    report.num_classes = static_cast<int>(num_classes);
    report.num_sequences = static_cast<int>(scores.size());
    report.cmc.assign(num_classes, 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& s = scores[i];
        const int truth = true_class_indices[i];
        // Rank = classes strictly better, plus equal-scored classes with a
        // smaller index (deterministic tie rule).
        std::size_t rank = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            if (c == static_cast<std::size_t>(truth)) continue;
            if (s[c] > s[static_cast<std::size_t>(truth)] ||
                (s[c] == s[static_cast<std::size_t>(truth)] && c < static_cast<std::size_t>(truth)))
                ++rank;
        }
        for (std::size_t k = rank; k < num_classes; ++k) report.cmc[k] += 1.0;
    }
    for (double& v : report.cmc) v /= static_cast<double>(scores.size());
    report.rank1 = report.cmc[0];
    double sum = 0.0;
    for (double v : report.cmc) sum += v;
    report.nauc = 100.0 * sum / static_cast<double>(num_classes);
    return report;
}

CmcReport evaluate(const std::vector<SequenceFeatures>& test, const ProbeModel& probe) {
    std::vector<std::vector<double>> scores;
    std::vector<int> truth;
    for (const auto& sf : test) {
        auto it = std::lower_bound(probe.classes.begin(), probe.classes.end(), sf.id);
        if (it == probe.classes.end() || *it != sf.id)
            throw std::runtime_error("evaluate: identity " + std::to_string(sf.id) +
                                     " unseen during probe training");
        truth.push_back(static_cast<int>(it - probe.classes.begin()));
        scores.push_back(predict_sequence(probe, sf.states));
    }
    return cmc_from_scores(scores, truth);
}

nlohmann::json report_json(const CmcReport& report) {
    return {{"rank1", report.rank1},
            {"nauc", report.nauc},
            {"cmc", report.cmc},
            {"num_classes", report.num_classes},
            {"num_sequences", report.num_sequences}};
}

void write_cmc_csv(const CmcReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CMC csv: " + path);
    out << "rank,match_rate\n";
    for (std::size_t k = 0; k < report.cmc.size(); ++k) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.9g", report.cmc[k]);
        out << (k + 1) << "," << buf << "\n";
    }
}

void save_features(const std::vector<SequenceFeatures>& feats, const nlohmann::json& meta,
                   const std::string& path) {
    nlohmann::json header = meta;
    header["kind"] = "features";
    header["sequences"] = nlohmann::json::array();
    for (const auto& sf : feats)
        header["sequences"].push_back({{"id", sf.id}, {"view", sf.view}, {"split", sf.split}});
    std::vector<std::pair<std::string, const Matrix*>> tensors;
    for (std::size_t i = 0; i < feats.size(); ++i)
        tensors.emplace_back("seq." + std::to_string(i), &feats[i].states);
    write_archive(path, kFeaturesMagic, header, tensors);
}

std::pair<std::vector<SequenceFeatures>, nlohmann::json> load_features(const std::string& path) {
    Archive a = read_archive(path, kFeaturesMagic);
    std::vector<SequenceFeatures> feats;
    const auto& seqs = a.header.at("sequences");
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        SequenceFeatures sf;
        sf.id = seqs[i].at("id").get<int>();
        sf.view = seqs[i].value("view", "");
        sf.split = seqs[i].value("split", "");
        sf.states = a.find("seq." + std::to_string(i));
        feats.push_back(std::move(sf));
    }
    return {std::move(feats), a.header};
}

void save_probe(const ProbeModel& probe, const std::string& path) {
    nlohmann::json header;
    header["kind"] = "probe";
    header["classes"] = probe.classes;
    write_archive(path, kProbeMagic, header,
                  {{"w1", &probe.w1}, {"b1", &probe.b1}, {"w2", &probe.w2}, {"b2", &probe.b2}});
}

ProbeModel load_probe(const std::string& path) {
    Archive a = read_archive(path, kProbeMagic);
    ProbeModel probe;
    probe.classes = a.header.at("classes").get<std::vector<int>>();
    probe.w1 = a.find("w1");
    probe.b1 = a.find("b1");
    probe.w2 = a.find("w2");
    probe.b2 = a.find("b2");
    return probe;
}

}  // namespace smsge
