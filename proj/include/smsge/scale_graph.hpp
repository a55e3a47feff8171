#pragma once

#include <utility>
#include <vector>

#include "smsge/matrix.hpp"
#include "smsge/topology.hpp"

namespace smsge {

// One granularity of the skeleton for one frame. Neighbor lists are
// symmetric, sorted, and include the node itself.
struct ScaleGraph {
    int scale = 0;
    Matrix positions;  // n x 3
    std::vector<std::vector<int>> neighbors;
    std::vector<std::pair<int, int>> edges;  // i < j, no self loops
};

// The four scales (hyper-joint, joint, part, body) of one skeleton frame.
struct MultiScaleFrame {
    std::vector<ScaleGraph> per_scale;  // indexed by scale id 0..3
};

// Scale 0: the J joints plus one midpoint per tree edge (2J-1 nodes).
// Midpoint of edge e=(a,b) gets index J+e and connects to a and b.
ScaleGraph interpolate_hyper_joints(const Matrix& joints, const Topology& topology);

// Scale 1: the topology itself.
ScaleGraph joint_scale_graph(const Matrix& joints, const Topology& topology);

// Scales 2/3: each group collapses to the mean of its joint positions;
// coarse nodes are adjacent iff any of their joints are topology-adjacent.
ScaleGraph coarsen(const Matrix& joints, const Topology& topology, const MergeMap& map);

MultiScaleFrame build_frame(const Matrix& joints, const Topology& topology,
                            const MergeMap& parts, const MergeMap& bodies);

// One MultiScaleFrame per frame of the sequence (see data.hpp for the
// sequence type). Declared here as a template-free forward to avoid a
// circular include; defined in scale_graph.cpp.
std::vector<MultiScaleFrame> build_multiscale(const std::vector<Matrix>& frames,
                                              const Topology& topology, const MergeMap& parts,
                                              const MergeMap& bodies);

// Per-scale node counts {n0, n1, n2, n3} for a topology + merge maps.
std::vector<int> scale_node_counts(const Topology& topology, const MergeMap& parts,
                                   const MergeMap& bodies);

}  // namespace smsge
