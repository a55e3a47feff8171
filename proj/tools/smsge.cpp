// Command-line front end: synthetic data generation, self-supervised
// pretraining, feature extraction, probe training and Re-ID evaluation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "smsge/data.hpp"
#include "smsge/parallel.hpp"
#include "smsge/probe.hpp"
#include "smsge/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t resolve_seed(std::int64_t flag_seed) {
    if (flag_seed >= 0) return static_cast<std::uint64_t>(flag_seed);
    if (const char* env = std::getenv("SMSGE_SEED")) return std::strtoull(env, nullptr, 10);
    return 1;
}

void log_config(const std::string& cmd, const json& resolved) {
    std::cout << "[" << cmd << "] config " << resolved.dump() << "\n";
}

int cmd_gen_synthetic(int ids, int seqs, int frames, const std::string& preset,
                      std::int64_t seed_flag, const std::string& out_dir, double noise,
                      const std::string& split_policy) {
    const std::uint64_t seed = resolve_seed(seed_flag);
    if (ids < 1) throw CLI::ValidationError("--ids must be >= 1");
    if (seqs < 1) throw CLI::ValidationError("--seqs must be >= 1");
    log_config("gen-synthetic", {{"ids", ids},
                                 {"seqs", seqs},
                                 {"frames", frames},
                                 {"preset", preset},
                                 {"seed", seed},
                                 {"out", out_dir},
                                 {"noise", noise},
                                 {"split", split_policy}});
    const smsge::Topology topo = smsge::build_topology(preset);
    auto [parts, bodies] = smsge::build_merge_maps(topo);
    smsge::SyntheticConfig cfg;
    cfg.identities = ids;
    cfg.sequences_per_identity = seqs;
    cfg.frames = frames;
    cfg.noise_sigma = noise;
    cfg.seed = seed;
    auto sequences = smsge::generate_synthetic(cfg, topo, bodies);

    fs::create_directories(out_dir);
    smsge::DatasetManifest manifest;
    manifest.preset = preset;
    manifest.normalize = true;
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        const auto& s = sequences[i];
        const std::string name =
            "id" + std::to_string(s.identity) + "_seq" + std::to_string(i % static_cast<std::size_t>(seqs)) + ".txt";
        smsge::write_sequence((fs::path(out_dir) / name).string(), s);
        manifest.sequences.push_back({name, s.identity, s.view, ""});
    }
    if (split_policy != "none") {
        smsge::SplitPolicy policy;
        if (split_policy == "leave-one-id")
            policy = smsge::SplitPolicy::LeaveOnePerIdentity;
        else if (split_policy == "leave-one-view")
            policy = smsge::SplitPolicy::LeaveOnePerView;
        else
            throw CLI::ValidationError("unknown --split policy: " + split_policy);
        smsge::Rng rng(smsge::derive_seed(seed, 0x5917));
        auto [train, test] = smsge::split_dataset(manifest, policy, rng);
        for (int i : train) manifest.sequences[static_cast<std::size_t>(i)].split = "train";
        for (int i : test) manifest.sequences[static_cast<std::size_t>(i)].split = "test";
    }
    const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
    smsge::write_manifest(manifest, manifest_path);
    std::cout << "wrote " << sequences.size() << " sequences + manifest to " << out_dir << "\n";
    return 0;
}

smsge::TrainConfig load_train_config(const std::string& config_path) {
    smsge::TrainConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config file: " + config_path);
        json j;
        in >> j;
        cfg = j.get<smsge::TrainConfig>();
    }
    return cfg;
}

void apply_ablation_flags(smsge::ModelConfig& m, const std::vector<std::string>& ablate) {
    for (const auto& a : ablate) {
        if (a == "mg")
            m.multi_graph = false;
        else if (a == "sr")
            m.structural_relations = false;
        else if (a == "cr")
            m.collaborative_relations = false;
        else if (a == "csi")
            m.cross_scale_inference = false;
        else if (a == "ssr")
            m.subsequence_reconstruction = false;
        else
            throw CLI::ValidationError("unknown --ablate switch: " + a +
                                       " (expected mg|sr|cr|csi|ssr)");
    }
}

int cmd_pretrain(const std::string& manifest_path, const std::string& out,
                 const std::string& config_path, std::int64_t seed_flag, int epochs, double lr,
                 int batch, int threads, const std::vector<std::string>& ablate,
                 const std::string& preset_override) {
    smsge::TrainConfig cfg = load_train_config(config_path);
    if (seed_flag >= 0 || std::getenv("SMSGE_SEED")) cfg.seed = resolve_seed(seed_flag);
    if (epochs >= 0) cfg.epochs = epochs;
    if (lr > 0) cfg.learning_rate = lr;
    if (batch > 0) cfg.batch = batch;
    if (threads > 0) cfg.threads = threads;
    apply_ablation_flags(cfg.model, ablate);

    const smsge::DatasetManifest manifest = smsge::read_manifest(manifest_path);
    cfg.preset = preset_override.empty() ? manifest.preset : preset_override;

    log_config("pretrain", json(cfg));
    std::cout << "[pretrain] ablation plan: " << smsge::apply_ablation(cfg.model).summary()
              << "\n";

    smsge::Rng split_rng(smsge::derive_seed(cfg.seed, 0x5917));
    auto [train_idx, test_idx] =
        smsge::split_dataset(manifest, smsge::SplitPolicy::ExplicitTags, split_rng);
    (void)test_idx;
    smsge::TrainDataset data =
        smsge::load_dataset(manifest_path, cfg.model.frames, train_idx);
    std::cout << "[pretrain] " << data.sequences.size() << " training sequences ("
              << cfg.model.frames << " frames each)\n";

    smsge::Checkpoint ck = smsge::pretrain(data, cfg, &std::cout);
    smsge::save_checkpoint(ck, out);
    std::cout << "checkpoint written to " << out << "\n";
    return 0;
}

int cmd_embed(const std::string& checkpoint_path, const std::string& manifest_path,
              const std::string& out, int threads) {
    log_config("embed", {{"checkpoint", checkpoint_path},
                         {"manifest", manifest_path},
                         {"out", out},
                         {"threads", threads}});
    smsge::set_threads(threads > 0 ? threads : 1);
    smsge::Checkpoint ck = smsge::load_checkpoint(checkpoint_path);
    const smsge::DatasetManifest manifest = smsge::read_manifest(manifest_path);
    if (manifest.preset != ck.config.preset)
        throw std::runtime_error("embed: manifest preset '" + manifest.preset +
                                 "' does not match checkpoint preset '" + ck.config.preset + "'");
    smsge::TrainDataset data = smsge::load_dataset(manifest_path, ck.config.model.frames);
    auto feats = smsge::extract_features(data, ck);
    json meta = {{"preset", ck.config.preset},
                 {"hidden_dim", ck.config.model.hidden_dim},
                 {"scale_ids", ck.params.scale_ids},
                 {"frames", ck.config.model.frames}};
    smsge::save_features(feats, meta, out);
    std::cout << "wrote features for " << feats.size() << " sequences to " << out << "\n";
    return 0;
}

int cmd_probe_train(const std::string& features_path, const std::string& out,
                    std::int64_t seed_flag, int epochs, double lr, int hidden) {
    smsge::ProbeConfig cfg;
    cfg.seed = resolve_seed(seed_flag);
    if (epochs > 0) cfg.epochs = epochs;
    if (lr > 0) cfg.learning_rate = lr;
    if (hidden > 0) cfg.hidden = hidden;
    log_config("probe-train", json(cfg));
    auto [feats, meta] = smsge::load_features(features_path);
    (void)meta;
    std::vector<smsge::SequenceFeatures> train;
    for (auto& f : feats)
        if (f.split != "test") train.push_back(std::move(f));
    if (train.empty()) throw std::runtime_error("probe-train: no training features");
    smsge::ProbeModel probe = smsge::train_probe(train, cfg, &std::cout);
    smsge::save_probe(probe, out);
    std::cout << "probe written to " << out << " (" << probe.classes.size() << " classes)\n";
    return 0;
}

int cmd_evaluate(const std::string& features_path, const std::string& probe_path,
                 const std::string& report_path, const std::string& cmc_csv) {
    log_config("evaluate", {{"features", features_path},
                            {"probe", probe_path},
                            {"report", report_path},
                            {"cmc_csv", cmc_csv}});
    auto [feats, meta] = smsge::load_features(features_path);
    (void)meta;
    std::vector<smsge::SequenceFeatures> test;
    for (auto& f : feats)
        if (f.split == "test") test.push_back(std::move(f));
    if (test.empty())
        throw std::runtime_error("evaluate: features file has no split=\"test\" sequences");
    smsge::ProbeModel probe = smsge::load_probe(probe_path);
    smsge::CmcReport report = smsge::evaluate(test, probe);
    const json rj = smsge::report_json(report);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) throw std::runtime_error("cannot write report: " + report_path);
        out << rj.dump(2) << "\n";
    }
    if (!cmc_csv.empty()) smsge::write_cmc_csv(report, cmc_csv);
    std::cout << "rank1 " << report.rank1 << "\n";
    std::cout << "nauc " << report.nauc << "\n";
    std::cout << rj.dump() << "\n";
    return 0;
}

int cmd_inspect_graph(const std::string& preset, const std::string& frame_path) {
    log_config("inspect-graph", {{"preset", preset}, {"frame", frame_path}});
    const smsge::Topology topo = smsge::build_topology(preset);
    auto [parts, bodies] = smsge::build_merge_maps(topo);
    smsge::Matrix joints;
    if (!frame_path.empty()) {
        const smsge::SkeletonSequence seq = smsge::parse_sequence(frame_path, topo);
        joints = seq.frames[0];
    } else {
        joints = smsge::rest_pose(topo);
    }
    const smsge::MultiScaleFrame frame = smsge::build_frame(joints, topo, parts, bodies);
    static const char* names[] = {"hyper-joint", "joint", "part", "body"};
    std::cout << "node counts:";
    for (const auto& g : frame.per_scale) std::cout << " " << g.positions.rows();
    std::cout << "\n";
    for (const auto& g : frame.per_scale) {
        std::cout << "scale " << g.scale << " (" << names[g.scale] << "): "
                  << g.positions.rows() << " nodes, " << g.edges.size() << " edges\n";
        for (std::size_t i = 0; i < g.positions.rows(); ++i) {
            std::cout << "  node " << i << " pos (" << g.positions(i, 0) << ", "
                      << g.positions(i, 1) << ", " << g.positions(i, 2) << ") neighbors";
            for (int j : g.neighbors[i]) std::cout << " " << j;
            std::cout << "\n";
        }
    }
    return 0;
}

int cmd_grad_check(std::int64_t seed_flag, double epsilon, double threshold, int frames) {
    const std::uint64_t seed = resolve_seed(seed_flag);
    log_config("grad-check",
               {{"seed", seed}, {"epsilon", epsilon}, {"threshold", threshold}, {"frames", frames}});
    smsge::TrainDataset toy = smsge::make_toy_dataset(frames, 2, seed);
    smsge::ModelConfig cfg = smsge::toy_model_config(frames);
    auto report = smsge::grad_check(toy, cfg, seed, epsilon);
    for (const auto& [name, err] : report.per_tensor)
        std::cout << name << " max_rel_error " << err << "\n";
    std::cout << "max_rel_error " << report.max_rel_error << "\n";
    if (report.max_rel_error >= threshold) {
        std::cerr << "grad-check FAILED: " << report.max_rel_error << " >= " << threshold << "\n";
        return 1;
    }
    std::cout << "grad-check passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SM-SGE: self-supervised multi-scale skeleton graph encoding"};
    app.require_subcommand(1);

    // gen-synthetic
    int ids = 5, seqs = 4, frames = 6;
    std::string preset = "kinect20", out_dir = "dataset";
    std::int64_t seed = -1;
    double noise = 0.005;
    std::string split_policy = "leave-one-id";
    auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic gait dataset");
    gen->add_option("--ids", ids, "number of identities");
    gen->add_option("--seqs", seqs, "sequences per identity");
    gen->add_option("--frames", frames, "frames per sequence");
    gen->add_option("--preset", preset, "topology preset or JSON file");
    gen->add_option("--seed", seed, "master seed (default env SMSGE_SEED or 1)");
    gen->add_option("--out", out_dir, "output directory");
    gen->add_option("--noise", noise, "coordinate noise sigma in meters");
    gen->add_option("--split", split_policy, "none | leave-one-id | leave-one-view");

    // pretrain
    std::string manifest_path, ckpt_out = "model.ckpt", config_path, preset_override;
    int epochs = -1, batch = -1, threads = -1;
    double lr = -1;
    std::vector<std::string> ablate;
    auto* pre = app.add_subcommand("pretrain", "self-supervised pretraining");
    pre->add_option("--manifest", manifest_path, "dataset manifest")->required();
    pre->add_option("--out", ckpt_out, "checkpoint output path");
    pre->add_option("--config", config_path, "JSON training config (flags override)");
    pre->add_option("--seed", seed, "seed");
    pre->add_option("--epochs", epochs, "training epochs");
    pre->add_option("--lr", lr, "Adam learning rate");
    pre->add_option("--batch", batch, "sequences per optimizer step");
    pre->add_option("--threads", threads, "worker threads (1 = reference serial mode)");
    pre->add_option("--ablate", ablate, "disable components: mg sr cr csi ssr")
        ->delimiter(',');
    pre->add_option("--preset", preset_override, "override manifest topology preset");

    // embed
    std::string ckpt_in, features_out = "features.bin";
    auto* emb = app.add_subcommand("embed", "extract frozen sequence features");
    emb->add_option("--checkpoint", ckpt_in, "pretrained checkpoint")->required();
    emb->add_option("--manifest", manifest_path, "dataset manifest")->required();
    emb->add_option("--out", features_out, "features output path");
    emb->add_option("--threads", threads, "worker threads");

    // probe-train
    std::string features_in, probe_out = "probe.bin";
    int probe_epochs = -1, probe_hidden = -1;
    double probe_lr = -1;
    auto* pt = app.add_subcommand("probe-train", "train the identity probe on frozen features");
    pt->add_option("--features", features_in, "features file")->required();
    pt->add_option("--out", probe_out, "probe output path");
    pt->add_option("--seed", seed, "seed");
    pt->add_option("--epochs", probe_epochs, "probe epochs");
    pt->add_option("--lr", probe_lr, "probe learning rate");
    pt->add_option("--hidden", probe_hidden, "probe hidden width");

    // evaluate
    std::string probe_in, report_out = "report.json", cmc_csv;
    auto* ev = app.add_subcommand("evaluate", "CMC / Rank-1 / nAUC evaluation");
    ev->add_option("--features", features_in, "features file")->required();
    ev->add_option("--probe", probe_in, "probe file")->required();
    ev->add_option("--report", report_out, "JSON report output");
    ev->add_option("--cmc-csv", cmc_csv, "optional CMC curve CSV");

    // inspect-graph
    std::string frame_path;
    auto* ig = app.add_subcommand("inspect-graph", "print multi-scale graph structure");
    ig->add_option("--preset", preset, "topology preset or JSON file");
    ig->add_option("--frame", frame_path, "sequence file; uses its first frame");

    // grad-check
    double epsilon = 1e-5, threshold = 1e-4;
    int gc_frames = 2;
    auto* gc = app.add_subcommand("grad-check", "finite-difference gradient verification");
    gc->add_option("--seed", seed, "seed");
    gc->add_option("--epsilon", epsilon, "finite-difference step");
    gc->add_option("--threshold", threshold, "max allowed relative error");
    gc->add_option("--frames", gc_frames, "toy instance frame count");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_synthetic(ids, seqs, frames, preset, seed, out_dir, noise,
                                     split_policy);
        if (pre->parsed())
            return cmd_pretrain(manifest_path, ckpt_out, config_path, seed, epochs, lr, batch,
                                threads, ablate, preset_override);
        if (emb->parsed()) return cmd_embed(ckpt_in, manifest_path, features_out, threads);
        if (pt->parsed())
            return cmd_probe_train(features_in, probe_out, seed, probe_epochs, probe_lr,
                                   probe_hidden);
        if (ev->parsed()) return cmd_evaluate(features_in, probe_in, report_out, cmc_csv);
        if (ig->parsed()) return cmd_inspect_graph(preset, frame_path);
        if (gc->parsed()) return cmd_grad_check(seed, epsilon, threshold, gc_frames);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
