#include "smsge/scale_graph.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>
#include <stdexcept>

namespace smsge {

namespace {

void check_finite(const Matrix& joints) {
    for (std::size_t i = 0; i < joints.size(); ++i)
        if (!std::isfinite(joints.data()[i]))
            throw std::runtime_error("frame rejected: non-finite joint coordinate");
}

void finish_neighbors(ScaleGraph& g) {
    const std::size_t n = g.positions.rows();
    g.neighbors.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) g.neighbors[i].push_back(static_cast<int>(i));
    for (auto [a, b] : g.edges) {
        g.neighbors[a].push_back(b);
        g.neighbors[b].push_back(a);
    }
    for (auto& list : g.neighbors) std::sort(list.begin(), list.end());
}

}  // namespace

ScaleGraph joint_scale_graph(const Matrix& joints, const Topology& topology) {
    if (static_cast<int>(joints.rows()) != topology.joint_count || joints.cols() != 3)
        throw std::runtime_error("frame/topology joint-count mismatch");
    check_finite(joints);
    ScaleGraph g;
    g.scale = 1;
    g.positions = joints;
    for (auto [a, b] : topology.edges) g.edges.emplace_back(std::min(a, b), std::max(a, b));
    finish_neighbors(g);
    return g;
}

ScaleGraph interpolate_hyper_joints(const Matrix& joints, const Topology& topology) {
    if (static_cast<int>(joints.rows()) != topology.joint_count || joints.cols() != 3)
        throw std::runtime_error("frame/topology joint-count mismatch");
    check_finite(joints);
    const int j = topology.joint_count;
    const int e = static_cast<int>(topology.edges.size());
    ScaleGraph g;
    g.scale = 0;
    g.positions = Matrix(static_cast<std::size_t>(j + e), 3);
    for (int i = 0; i < j; ++i)
        for (int c = 0; c < 3; ++c) g.positions(i, c) = joints(i, c);
    for (int k = 0; k < e; ++k) {
        auto [a, b] = topology.edges[k];
        const int mid = j + k;
        for (int c = 0; c < 3; ++c) g.positions(mid, c) = 0.5 * (joints(a, c) + joints(b, c));
        g.edges.emplace_back(std::min(a, mid), std::max(a, mid));
        g.edges.emplace_back(std::min(b, mid), std::max(b, mid));
    }
    finish_neighbors(g);
    return g;
}

ScaleGraph coarsen(const Matrix& joints, const Topology& topology, const MergeMap& map) {
    if (static_cast<int>(joints.rows()) != topology.joint_count || joints.cols() != 3)
        throw std::runtime_error("frame/topology joint-count mismatch");
    check_finite(joints);
    validate_merge_map(topology, map);
    const int n = static_cast<int>(map.groups.size());
    std::vector<int> owner(topology.joint_count, -1);
    for (int gi = 0; gi < n; ++gi)
        for (int v : map.groups[gi]) owner[v] = gi;

    ScaleGraph g;
    g.scale = map.scale;
    g.positions = Matrix(static_cast<std::size_t>(n), 3);
    for (int gi = 0; gi < n; ++gi) {
        const auto& group = map.groups[gi];
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int v : group) acc += joints(v, c);
            g.positions(gi, c) = acc / static_cast<double>(group.size());
        }
    }
    std::set<std::pair<int, int>> coarse_edges;
    for (auto [a, b] : topology.edges) {
        int ga = owner[a], gb = owner[b];
        if (ga != gb) coarse_edges.insert({std::min(ga, gb), std::max(ga, gb)});
    }
    g.edges.assign(coarse_edges.begin(), coarse_edges.end());
    finish_neighbors(g);
    return g;
}

MultiScaleFrame build_frame(const Matrix& joints, const Topology& topology,
                            const MergeMap& parts, const MergeMap& bodies) {
    MultiScaleFrame f;
    f.per_scale.push_back(interpolate_hyper_joints(joints, topology));
    f.per_scale.push_back(joint_scale_graph(joints, topology));
    f.per_scale.push_back(coarsen(joints, topology, parts));
    f.per_scale.push_back(coarsen(joints, topology, bodies));
    return f;
}

std::vector<MultiScaleFrame> build_multiscale(const std::vector<Matrix>& frames,
                                              const Topology& topology, const MergeMap& parts,
                                              const MergeMap& bodies) {
    std::vector<MultiScaleFrame> out(frames.size());
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(frames.size()); ++i) {
        try {
            out[static_cast<std::size_t>(i)] =
                build_frame(frames[static_cast<std::size_t>(i)], topology, parts, bodies);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

std::vector<int> scale_node_counts(const Topology& topology, const MergeMap& parts,
                                   const MergeMap& bodies) {
    return {2 * topology.joint_count - 1, topology.joint_count,
            static_cast<int>(parts.groups.size()), static_cast<int>(bodies.groups.size())};
}

}  // namespace smsge
