#include "smsge/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace smsge {

namespace {

using Groups = std::vector<std::vector<int>>;

struct PresetDef {
    Topology topo;
    Groups parts10;
    Groups parts5;
};

// Kinect v1, 20 joints:
// 0 hip-center 1 spine 2 shoulder-center 3 head, 4-7 left arm, 8-11 right arm,
// 12-15 left leg, 16-19 right leg.
PresetDef preset_kinect20() {
    PresetDef d;
    d.topo.joint_count = 20;
    d.topo.root = 0;
    d.topo.preset_name = "kinect20";
    d.topo.edges = {{0, 1},   {1, 2},   {2, 3},   {2, 4},   {4, 5},
                    {5, 6},   {6, 7},   {2, 8},   {8, 9},   {9, 10},
                    {10, 11}, {0, 12},  {12, 13}, {13, 14}, {14, 15},
                    {0, 16},  {16, 17}, {17, 18}, {18, 19}};
    d.parts5 = {{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}, {12, 13, 14, 15}, {16, 17, 18, 19}};
    d.parts10 = {{0, 1, 2}, {3},      {4, 5},   {6, 7},   {8, 9},
                 {10, 11},  {12, 13}, {14, 15}, {16, 17}, {18, 19}};
    return d;
}

// Kinect v2, 25 joints:
// 0 spine-base 1 spine-mid 20 spine-shoulder 2 neck 3 head, 4-7 left arm
// (+21 hand-tip, 22 thumb), 8-11 right arm (+23, 24), 12-15 / 16-19 legs.
PresetDef preset_kinect25() {
    PresetDef d;
    d.topo.joint_count = 25;
    d.topo.root = 0;
    d.topo.preset_name = "kinect25";
    d.topo.edges = {{0, 1},   {1, 20},  {20, 2},  {2, 3},   {20, 4},  {4, 5},
                    {5, 6},   {6, 7},   {7, 21},  {6, 22},  {20, 8},  {8, 9},
                    {9, 10},  {10, 11}, {11, 23}, {10, 24}, {0, 12},  {12, 13},
                    {13, 14}, {14, 15}, {0, 16},  {16, 17}, {17, 18}, {18, 19}};
    d.parts5 = {{0, 1, 2, 3, 20},
                {4, 5, 6, 7, 21, 22},
                {8, 9, 10, 11, 23, 24},
                {12, 13, 14, 15},
                {16, 17, 18, 19}};
    d.parts10 = {{0, 1, 20}, {2, 3},          {4, 5},   {6, 7, 21, 22}, {8, 9},
                 {10, 11, 23, 24}, {12, 13},  {14, 15}, {16, 17},       {18, 19}};
    return d;
}

// 14-keypoint pose-estimation layout:
// 0 head 1 neck, 2-4 right arm, 5-7 left arm, 8-10 right leg, 11-13 left leg.
PresetDef preset_casia14() {
    PresetDef d;
    d.topo.joint_count = 14;
    d.topo.root = 1;
    d.topo.preset_name = "casia14";
    d.topo.edges = {{1, 0}, {1, 2},  {2, 3},   {3, 4},   {1, 5},   {5, 6},  {6, 7},
                    {1, 8}, {8, 9},  {9, 10},  {1, 11},  {11, 12}, {12, 13}};
    d.parts5 = {{0, 1}, {2, 3, 4}, {5, 6, 7}, {8, 9, 10}, {11, 12, 13}};
    d.parts10 = {{0}, {1}, {2, 3}, {4}, {5, 6}, {7}, {8, 9}, {10}, {11, 12}, {13}};
    return d;
}

bool is_json_path(const std::string& s) {
    return s.size() > 5 && s.substr(s.size() - 5) == ".json";
}

PresetDef load_json_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open topology file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("topology file " + path + ": " + e.what());
    }
    PresetDef d;
    d.topo.joint_count = j.at("joint_count").get<int>();
    d.topo.root = j.at("root").get<int>();
    d.topo.preset_name = path;
    for (const auto& e : j.at("edges"))
        d.topo.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    if (j.contains("parts10")) d.parts10 = j["parts10"].get<Groups>();
    if (j.contains("parts5")) d.parts5 = j["parts5"].get<Groups>();
    return d;
}

PresetDef resolve(const std::string& preset) {
    if (preset == "kinect20") return preset_kinect20();
    if (preset == "kinect25") return preset_kinect25();
    if (preset == "casia14") return preset_casia14();
    if (is_json_path(preset)) return load_json_topology(preset);
    throw std::runtime_error("unknown topology preset: " + preset);
}

std::vector<std::vector<int>> adjacency(const Topology& t) {
    std::vector<std::vector<int>> adj(t.joint_count);
    for (auto [a, b] : t.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    return adj;
}

}  // namespace

void validate_topology(const Topology& t) {
    const int j = t.joint_count;
    if (j <= 0) throw std::runtime_error("topology: joint_count must be positive");
    if (t.root < 0 || t.root >= j) throw std::runtime_error("topology: root index out of range");
    if (static_cast<int>(t.edges.size()) != j - 1) {
        std::ostringstream os;
        os << "topology: expected " << j - 1 << " edges for a tree over " << j
           << " joints, got " << t.edges.size();
        throw std::runtime_error(os.str());
    }
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : t.edges) {
        if (a < 0 || a >= j || b < 0 || b >= j)
            throw std::runtime_error("topology: edge index out of range");
        if (a == b) throw std::runtime_error("topology: self-loop edge");
        auto key = std::minmax(a, b);
        if (!seen.insert(key).second) throw std::runtime_error("topology: duplicate edge");
    }
    // J-1 edges without duplicates form a tree iff the graph is connected.
    auto adj = adjacency(t);
    std::vector<char> vis(j, 0);
    std::vector<int> stack = {t.root};
    vis[t.root] = 1;
    int count = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++count;
        for (int v : adj[u])
            if (!vis[v]) {
                vis[v] = 1;
                stack.push_back(v);
            }
    }
    if (count != j) throw std::runtime_error("topology: graph is not connected (not a tree)");
}

bool group_connected(const Topology& t, const std::vector<int>& group) {
    if (group.empty()) return false;
    std::set<int> members(group.begin(), group.end());
    auto adj = adjacency(t);
    std::set<int> vis;
    std::vector<int> stack = {group[0]};
    vis.insert(group[0]);
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[u])
            if (members.count(v) && !vis.count(v)) {
                vis.insert(v);
                stack.push_back(v);
            }
    }
    return vis.size() == members.size();
}

void validate_merge_map(const Topology& t, const MergeMap& m) {
    std::vector<int> seen(t.joint_count, 0);
    for (const auto& g : m.groups) {
        if (g.empty()) throw std::runtime_error("merge map: empty group");
        if (!group_connected(t, g))
            throw std::runtime_error("merge map: group does not induce a connected subgraph");
        for (int v : g) {
            if (v < 0 || v >= t.joint_count)
                throw std::runtime_error("merge map: joint index out of range");
            if (seen[v]++) throw std::runtime_error("merge map: joint appears in two groups");
        }
    }
    for (int v = 0; v < t.joint_count; ++v)
        if (!seen[v]) throw std::runtime_error("merge map: joint missing from partition");
}

bool refines(const MergeMap& fine, const MergeMap& coarse) {
    for (const auto& g : fine.groups) {
        bool inside_one = false;
        for (const auto& c : coarse.groups) {
            bool subset = std::all_of(g.begin(), g.end(), [&](int v) {
                return std::find(c.begin(), c.end(), v) != c.end();
            });
            if (subset) {
                inside_one = true;
                break;
            }
        }
        if (!inside_one) return false;
    }
    return true;
}

Topology build_topology(const std::string& preset) {
    PresetDef d = resolve(preset);
    validate_topology(d.topo);
    return d.topo;
}

std::pair<MergeMap, MergeMap> build_merge_maps(const Topology& topology) {
    PresetDef d = resolve(topology.preset_name);
    if (d.parts10.empty() || d.parts5.empty())
        throw std::runtime_error("merge maps required: topology " + topology.preset_name +
                                 " does not define parts10/parts5");
    MergeMap parts{2, d.parts10};
    MergeMap bodies{3, d.parts5};
    validate_merge_map(topology, parts);
    validate_merge_map(topology, bodies);
    return {parts, bodies};
}

}  // namespace smsge
