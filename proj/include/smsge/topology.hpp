#pragma once

#include <string>
#include <utility>
#include <vector>

namespace smsge {

// Skeleton tree at the joint scale: J nodes, J-1 undirected edges, a root
// joint at the body center.
struct Topology {
    int joint_count = 0;
    std::vector<std::pair<int, int>> edges;
    int root = 0;
    std::string preset_name;
};

// Partition of the joints into body-component groups for one coarse scale
// (scale 2: 10 parts, scale 3: 5 parts for the shipped presets).
struct MergeMap {
    int scale = 0;
    std::vector<std::vector<int>> groups;
};

// preset is one of "kinect20", "kinect25", "casia14", or a path to a JSON
// topology file {"joint_count":J,"edges":[[a,b],...],"root":r,
// "parts10":[[...],...],"parts5":[[...],...]}. Throws on unknown presets and
// on structurally invalid topologies (non-tree, bad indices, duplicates).
Topology build_topology(const std::string& preset);

// Part-scale (first) and body-scale (second) partitions. Preset tables ship
// with the repo; custom topologies must carry parts10/parts5 in their file,
// otherwise this throws "merge maps required".
std::pair<MergeMap, MergeMap> build_merge_maps(const Topology& topology);

// Structural checks; throw std::runtime_error with a diagnostic on failure.
void validate_topology(const Topology& t);
void validate_merge_map(const Topology& t, const MergeMap& m);

bool group_connected(const Topology& t, const std::vector<int>& group);

// True when every group of `fine` is contained in one group of `coarse`.
bool refines(const MergeMap& fine, const MergeMap& coarse);

}  // namespace smsge
