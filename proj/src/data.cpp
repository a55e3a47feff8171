#include "smsge/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace smsge {

namespace {

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << path << ":" << line << ": " << what;
    throw std::runtime_error(os.str());
}

}  // namespace

double quantize9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::strtod(buf, nullptr);
}

SkeletonSequence parse_sequence(const std::string& path, const Topology& topology) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sequence file: " + path);
    const std::size_t want = static_cast<std::size_t>(topology.joint_count) * 3;
    SkeletonSequence seq;
    seq.source = path;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        std::istringstream ls(line);
        std::vector<double> vals;
        vals.reserve(want);
        std::string tok;
        while (ls >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size())
                parse_fail(path, lineno, "non-numeric token '" + tok + "'");
            if (!std::isfinite(v))
                parse_fail(path, lineno, "non-finite coordinate '" + tok + "'");
            vals.push_back(v);
        }
        if (vals.size() != want) {
            std::ostringstream os;
            os << "expected " << want << " values (3 x " << topology.joint_count
               << " joints), got " << vals.size();
            parse_fail(path, lineno, os.str());
        }
        Matrix frame(static_cast<std::size_t>(topology.joint_count), 3);
        for (int j = 0; j < topology.joint_count; ++j)
            for (int c = 0; c < 3; ++c) frame(j, c) = vals[static_cast<std::size_t>(j) * 3 + c];
        seq.frames.push_back(std::move(frame));
    }
    if (seq.frames.empty()) throw std::runtime_error(path + ": empty sequence file");
    return seq;
}

void write_sequence(const std::string& path, const SkeletonSequence& seq) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sequence file: " + path);
    char buf[48];
    for (const auto& frame : seq.frames) {
        for (std::size_t i = 0; i < frame.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.9g", frame.data()[i]);
            if (i) out << ' ';
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("manifest " + path + ": " + e.what());
    }
    DatasetManifest m;
    m.preset = j.at("preset").get<std::string>();
    m.normalize = j.value("normalize", true);
    for (const auto& e : j.at("sequences")) {
        ManifestEntry entry;
        entry.path = e.at("path").get<std::string>();
        entry.id = e.at("id").get<int>();
        entry.view = e.value("view", "");
        entry.split = e.value("split", "");
        m.sequences.push_back(std::move(entry));
    }
    return m;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    nlohmann::json j;
    j["preset"] = m.preset;
    j["normalize"] = m.normalize;
    j["sequences"] = nlohmann::json::array();
    for (const auto& e : m.sequences)
        j["sequences"].push_back(
            {{"path", e.path}, {"id", e.id}, {"view", e.view}, {"split", e.split}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
}

std::string resolve_manifest_path(const std::string& manifest_path, const std::string& entry_path) {
    std::filesystem::path p(entry_path);
    if (p.is_absolute()) return entry_path;
    return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

namespace {

void check_probe_protocol(const DatasetManifest& m, const std::vector<int>& train,
                          const std::vector<int>& test) {
    std::set<int> train_ids;
    for (int i : train) train_ids.insert(m.sequences[i].id);
    for (int i : test)
        if (!train_ids.count(m.sequences[i].id)) {
            std::ostringstream os;
            os << "split: identity " << m.sequences[i].id
               << " has no training sequence (classifier protocol requires one)";
            throw std::runtime_error(os.str());
        }
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> split_dataset(const DatasetManifest& m,
                                                            SplitPolicy policy, Rng& rng) {
    std::vector<int> train, test;
    if (policy == SplitPolicy::ExplicitTags) {
        for (int i = 0; i < static_cast<int>(m.sequences.size()); ++i) {
            const auto& tag = m.sequences[i].split;
            if (tag == "test")
                test.push_back(i);
            else if (tag == "train" || tag.empty())
                train.push_back(i);
            else
                throw std::runtime_error("split: unknown tag '" + tag + "'");
        }
    } else {
        // Group key: identity, or (identity, view) for the per-view policy.
        std::map<std::pair<int, std::string>, std::vector<int>> groups;
        for (int i = 0; i < static_cast<int>(m.sequences.size()); ++i) {
            const auto& e = m.sequences[i];
            std::string view = policy == SplitPolicy::LeaveOnePerView ? e.view : std::string();
            groups[{e.id, view}].push_back(i);
        }
        std::set<int> test_set;
        for (auto& [key, members] : groups) {
            if (policy == SplitPolicy::LeaveOnePerIdentity && members.size() < 2) {
                std::ostringstream os;
                os << "split: identity " << key.first
                   << " has a single sequence; leave-one-out needs at least 2";
                throw std::runtime_error(os.str());
            }
            test_set.insert(members[rng.uniform_int(members.size())]);
        }
        for (int i = 0; i < static_cast<int>(m.sequences.size()); ++i)
            (test_set.count(i) ? test : train).push_back(i);
    }
    check_probe_protocol(m, train, test);
    return {train, test};
}

SkeletonSequence normalize(const SkeletonSequence& seq, const Topology& topology) {
    SkeletonSequence out = seq;
    for (auto& frame : out.frames) {
        if (static_cast<int>(frame.rows()) != topology.joint_count)
            throw std::runtime_error("normalize: frame/topology joint-count mismatch");
        const double rx = frame(topology.root, 0);
        const double ry = frame(topology.root, 1);
        const double rz = frame(topology.root, 2);
        for (std::size_t i = 0; i < frame.rows(); ++i) {
            frame(i, 0) -= rx;
            frame(i, 1) -= ry;
            frame(i, 2) -= rz;
        }
    }
    return out;
}

std::vector<SkeletonSequence> chunk_sequences(const std::vector<SkeletonSequence>& seqs, int f) {
    if (f < 1) throw std::invalid_argument("chunk_sequences: f must be positive");
    std::vector<SkeletonSequence> out;
    for (const auto& seq : seqs) {
        const int chunks = static_cast<int>(seq.frames.size()) / f;
        for (int c = 0; c < chunks; ++c) {
            SkeletonSequence chunk;
            chunk.identity = seq.identity;
            chunk.view = seq.view;
            chunk.source = seq.source;
            chunk.split = seq.split;
            chunk.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(c) * f,
                                seq.frames.begin() + static_cast<std::ptrdiff_t>(c + 1) * f);
            out.push_back(std::move(chunk));
        }
    }
    return out;
}

namespace {

Matrix preset_rest_pose(const std::string& name, int joints) {
    // y up, x lateral, z forward; meters; pelvis-rooted.
    std::vector<std::array<double, 3>> p;
    if (name == "kinect20") {
        p = {{0, 0, 0},          {0, 0.25, 0},        {0, 0.50, 0},       {0, 0.70, 0},
             {-0.20, 0.45, 0},   {-0.24, 0.18, 0},    {-0.26, -0.05, 0},  {-0.27, -0.14, 0},
             {0.20, 0.45, 0},    {0.24, 0.18, 0},     {0.26, -0.05, 0},   {0.27, -0.14, 0},
             {-0.10, -0.05, 0},  {-0.11, -0.50, 0},   {-0.12, -0.90, 0},  {-0.12, -0.95, 0.12},
             {0.10, -0.05, 0},   {0.11, -0.50, 0},    {0.12, -0.90, 0},   {0.12, -0.95, 0.12}};
    } else if (name == "kinect25") {
        p = {{0, 0, 0},          {0, 0.20, 0},        {0, 0.48, 0},        {0, 0.62, 0},
             {-0.20, 0.38, 0},   {-0.24, 0.12, 0},    {-0.26, -0.10, 0},   {-0.265, -0.17, 0},
             {0.20, 0.38, 0},    {0.24, 0.12, 0},     {0.26, -0.10, 0},    {0.265, -0.17, 0},
             {-0.09, -0.04, 0},  {-0.10, -0.48, 0},   {-0.11, -0.88, 0},   {-0.11, -0.93, 0.12},
             {0.09, -0.04, 0},   {0.10, -0.48, 0},    {0.11, -0.88, 0},    {0.11, -0.93, 0.12},
             {0, 0.40, 0},       {-0.27, -0.23, 0},   {-0.22, -0.15, 0.03},
             {0.27, -0.23, 0},   {0.22, -0.15, 0.03}};
    } else if (name == "casia14") {
        p = {{0, 0.65, 0},       {0, 0.50, 0},        {0.18, 0.45, 0},   {0.22, 0.20, 0},
             {0.24, -0.02, 0},   {-0.18, 0.45, 0},    {-0.22, 0.20, 0},  {-0.24, -0.02, 0},
             {0.09, 0, 0},       {0.10, -0.45, 0},    {0.11, -0.85, 0},
             {-0.09, 0, 0},      {-0.10, -0.45, 0},   {-0.11, -0.85, 0}};
    }
    Matrix m(static_cast<std::size_t>(joints), 3);
    if (!p.empty()) {
        for (int i = 0; i < joints; ++i)
            for (int c = 0; c < 3; ++c) m(i, c) = p[static_cast<std::size_t>(i)][c];
    }
    return m;
}

}  // namespace

Matrix rest_pose(const Topology& topology) {
    if (topology.preset_name == "kinect20" || topology.preset_name == "kinect25" ||
        topology.preset_name == "casia14")
        return preset_rest_pose(topology.preset_name, topology.joint_count);
    // Deterministic fallback for custom topologies: hash-directed chains.
    Matrix m(static_cast<std::size_t>(topology.joint_count), 3);
    std::vector<std::vector<std::pair<int, int>>> children(topology.joint_count);
    for (int e = 0; e < static_cast<int>(topology.edges.size()); ++e) {
        auto [a, b] = topology.edges[e];
        children[a].push_back({b, e});
        children[b].push_back({a, e});
    }
    std::vector<char> vis(topology.joint_count, 0);
    std::vector<int> stack = {topology.root};
    vis[topology.root] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (auto [v, e] : children[u]) {
            if (vis[v]) continue;
            vis[v] = 1;
            std::uint64_t h = static_cast<std::uint64_t>(v) * 2654435761u + 12345u;
            std::uint64_t hh = h;
            const double theta = 2.0 * std::numbers::pi * (splitmix64(hh) >> 11) * 0x1.0p-53;
            const double phi = std::numbers::pi * ((splitmix64(hh) >> 11) * 0x1.0p-53 - 0.5);
            const double len = 0.3;
            m(v, 0) = m(u, 0) + len * std::cos(phi) * std::cos(theta);
            m(v, 1) = m(u, 1) + len * std::sin(phi);
            m(v, 2) = m(u, 2) + len * std::cos(phi) * std::sin(theta);
            stack.push_back(v);
        }
    }
    return m;
}

GaitParams make_gait_params(const Topology& topology, const MergeMap& bodies,
                            int identity_index, std::uint64_t master_seed, double noise_sigma) {
    GaitParams gp;
    gp.identity_seed = derive_seed(master_seed, 1000 + static_cast<std::uint64_t>(identity_index));
    gp.noise_sigma = noise_sigma;
    Rng rng(gp.identity_seed);

    const Matrix rest = rest_pose(topology);
    const int num_edges = static_cast<int>(topology.edges.size());

    // Identities are spaced multiplicatively in overall size so that any two
    // differ by at least ~5% in limb lengths; frequency is spaced likewise.
    const double height_factor = 0.80 * std::pow(1.05, identity_index);
    gp.frequency_hz = 0.7 + 0.11 * identity_index + rng.uniform(0.0, 0.02);
    gp.stride_amplitude = rng.uniform(0.35, 0.55);

    gp.limb_lengths.resize(num_edges);
    for (int e = 0; e < num_edges; ++e) {
        auto [a, b] = topology.edges[e];
        double dx = rest(b, 0) - rest(a, 0), dy = rest(b, 1) - rest(a, 1),
               dz = rest(b, 2) - rest(a, 2);
        const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
        gp.limb_lengths[e] = std::max(1e-3, len) * height_factor * rng.uniform(0.99, 1.01);
    }

    // Limb membership from the body-scale partition: the group containing the
    // root is the trunk; the rest are limbs. Left/right limbs of the same kind
    // swing in antiphase, arms in antiphase with the same-side leg.
    std::vector<int> owner(topology.joint_count, -1);
    int trunk_group = -1;
    for (int g = 0; g < static_cast<int>(bodies.groups.size()); ++g) {
        for (int v : bodies.groups[g]) owner[v] = g;
        if (std::find(bodies.groups[g].begin(), bodies.groups[g].end(), topology.root) !=
            bodies.groups[g].end())
            trunk_group = g;
    }
    std::vector<double> group_phase(bodies.groups.size(), 0.0);
    for (int g = 0; g < static_cast<int>(bodies.groups.size()); ++g) {
        if (g == trunk_group) continue;
        double cx = 0.0, cy = 0.0;
        for (int v : bodies.groups[g]) {
            cx += rest(v, 0);
            cy += rest(v, 1);
        }
        cx /= static_cast<double>(bodies.groups[g].size());
        cy /= static_cast<double>(bodies.groups[g].size());
        double phase = cx < 0.0 ? 0.0 : std::numbers::pi;
        if (cy > rest(topology.root, 1)) phase += std::numbers::pi;  // arms counter-swing
        group_phase[g] = phase;
    }

    // Edge depth within its limb adds a small lag (knee trails hip).
    gp.phase_offsets.assign(num_edges, 0.0);
    gp.swing_weights.assign(num_edges, 0.0);
    std::vector<int> depth(topology.joint_count, 0);
    {
        std::vector<std::vector<int>> adj(topology.joint_count);
        for (auto [a, b] : topology.edges) {
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
        std::vector<int> stack = {topology.root};
        std::vector<char> vis(topology.joint_count, 0);
        vis[topology.root] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u])
                if (!vis[v]) {
                    vis[v] = 1;
                    depth[v] = depth[u] + 1;
                    stack.push_back(v);
                }
        }
    }
    for (int e = 0; e < num_edges; ++e) {
        auto [a, b] = topology.edges[e];
        const int child = depth[a] > depth[b] ? a : b;
        const int g = owner[child];
        if (g == trunk_group) continue;  // trunk and head stay rigid
        const bool attach = owner[a] != owner[b];
        gp.swing_weights[e] = attach ? 1.0 : 0.5;
        gp.phase_offsets[e] = group_phase[g] + 0.4 * depth[child];
    }
    return gp;
}

SkeletonSequence synth_sequence(const Topology& topology, const GaitParams& params, int frames,
                                double initial_phase, double yaw, Rng& noise_rng) {
    const Matrix rest = rest_pose(topology);
    const int num_edges = static_cast<int>(topology.edges.size());
    const double fps = 10.0;

    // Unit rest directions per edge, parent -> child.
    std::vector<std::vector<std::pair<int, int>>> adj(topology.joint_count);
    for (int e = 0; e < num_edges; ++e) {
        auto [a, b] = topology.edges[e];
        adj[a].push_back({b, e});
        adj[b].push_back({a, e});
    }

    SkeletonSequence seq;
    seq.source = "synthetic";
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    for (int t = 0; t < frames; ++t) {
        Matrix frame(static_cast<std::size_t>(topology.joint_count), 3);
        const double phase =
            2.0 * std::numbers::pi * params.frequency_hz * (t / fps) + initial_phase;
        std::vector<char> placed(topology.joint_count, 0);
        std::vector<int> stack = {topology.root};
        placed[topology.root] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (auto [v, e] : adj[u]) {
                if (placed[v]) continue;
                placed[v] = 1;
                double dx = rest(v, 0) - rest(u, 0), dy = rest(v, 1) - rest(u, 1),
                       dz = rest(v, 2) - rest(u, 2);
                const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
                if (len > 0.0) {
                    dx /= len;
                    dy /= len;
                    dz /= len;
                }
                // Sagittal swing: rotate the rest direction about the x axis.
                const double theta = params.stride_amplitude * params.swing_weights[e] *
                                     std::sin(phase + params.phase_offsets[e]);
                const double ct = std::cos(theta), st = std::sin(theta);
                const double ry = dy * ct - dz * st;
                const double rz = dy * st + dz * ct;
                frame(v, 0) = frame(u, 0) + params.limb_lengths[e] * dx;
                frame(v, 1) = frame(u, 1) + params.limb_lengths[e] * ry;
                frame(v, 2) = frame(u, 2) + params.limb_lengths[e] * rz;
                stack.push_back(v);
            }
        }
        // View rotation about the vertical axis, then sensor noise.
        for (int i = 0; i < topology.joint_count; ++i) {
            const double x = frame(i, 0), z = frame(i, 2);
            frame(i, 0) = cy * x + sy * z;
            frame(i, 2) = -sy * x + cy * z;
            for (int c = 0; c < 3; ++c) {
                double v = frame(i, c);
                if (params.noise_sigma > 0.0) v += params.noise_sigma * noise_rng.normal();
                frame(i, c) = quantize9(v);
            }
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

std::vector<SkeletonSequence> generate_synthetic(const SyntheticConfig& cfg,
                                                 const Topology& topology,
                                                 const MergeMap& bodies) {
    if (cfg.identities < 1) throw std::invalid_argument("generate_synthetic: identities must be >= 1");
    if (cfg.sequences_per_identity < 1)
        throw std::invalid_argument("generate_synthetic: sequences per identity must be >= 1");
    if (cfg.frames < 1) throw std::invalid_argument("generate_synthetic: frames must be >= 1");

    static const double yaw_table[4] = {0.0, -0.21, 0.21, 0.42};
    std::vector<SkeletonSequence> out;
    for (int id = 0; id < cfg.identities; ++id) {
        const GaitParams gp =
            make_gait_params(topology, bodies, id, cfg.seed, cfg.noise_sigma);
        for (int s = 0; s < cfg.sequences_per_identity; ++s) {
            Rng seq_rng(derive_seed(gp.identity_seed, static_cast<std::uint64_t>(s)));
            const double phase0 = seq_rng.uniform(0.0, 2.0 * std::numbers::pi);
            SkeletonSequence seq =
                synth_sequence(topology, gp, cfg.frames, phase0, yaw_table[s % 4], seq_rng);
            seq.identity = id;
            seq.view = "v" + std::to_string(s % 4);
            out.push_back(std::move(seq));
        }
    }
    return out;
}

}  // namespace smsge
