#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "smsge/data.hpp"
#include "smsge/rng.hpp"
#include "smsge/scale_graph.hpp"
#include "smsge/topology.hpp"

using namespace smsge;

namespace {

Matrix random_frame(int joints, Rng& rng) {
    Matrix m(static_cast<std::size_t>(joints), 3);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

// brute-force connectivity over an explicit edge list
bool nodes_connected(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [a, b] : edges) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<char> vis(static_cast<std::size_t>(n), 0);
    std::vector<int> stack = {0};
    vis[0] = 1;
    int seen = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++seen;
        for (int v : adj[static_cast<std::size_t>(u)])
            if (!vis[static_cast<std::size_t>(v)]) {
                vis[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
    }
    return seen == n;
}

}  // namespace

TEST_CASE("topology presets match the published node counts") {
    struct Row {
        const char* name;
        int joints, hyper;
    };
    for (Row row : {Row{"kinect25", 25, 49}, Row{"kinect20", 20, 39}, Row{"casia14", 14, 27}}) {
        Topology t = build_topology(row.name);
        CHECK(t.joint_count == row.joints);
        CHECK(static_cast<int>(t.edges.size()) == row.joints - 1);
        CHECK(t.joint_count + static_cast<int>(t.edges.size()) == row.hyper);
        auto [parts, bodies] = build_merge_maps(t);
        CHECK(parts.groups.size() == 10);
        CHECK(bodies.groups.size() == 5);
        auto counts = scale_node_counts(t, parts, bodies);
        CHECK(counts == std::vector<int>{row.hyper, row.joints, 10, 5});
    }
}

TEST_CASE("unknown preset is rejected") {
    CHECK_THROWS_WITH_AS(build_topology("kinect99"), doctest::Contains("unknown topology preset"),
                         std::runtime_error);
}

TEST_CASE("custom topology file round-trips; malformed files are rejected") {
    const char* good = "/tmp/smsge_topo_good.json";
    {
        std::ofstream out(good);
        out << R"({"joint_count":4,"edges":[[0,1],[1,2],[1,3]],"root":0,
                   "parts10":[[0],[1],[2],[3]],"parts5":[[0,1,2],[3]]})";
    }
    Topology t = build_topology(good);
    CHECK(t.joint_count == 4);
    auto [parts, bodies] = build_merge_maps(t);
    CHECK(parts.groups.size() == 4);
    CHECK(bodies.groups.size() == 2);

    const char* cyclic = "/tmp/smsge_topo_cyclic.json";
    {
        std::ofstream out(cyclic);
        // 4 joints, 4 edges: not a tree
        out << R"({"joint_count":4,"edges":[[0,1],[1,2],[2,3],[3,0]],"root":0})";
    }
    CHECK_THROWS_WITH_AS(build_topology(cyclic), doctest::Contains("edges"), std::runtime_error);

    const char* split = "/tmp/smsge_topo_split.json";
    {
        std::ofstream out(split);
        // right edge count but disconnected (duplicate edge)
        out << R"({"joint_count":4,"edges":[[0,1],[0,1],[2,3]],"root":0})";
    }
    CHECK_THROWS_AS(build_topology(split), std::runtime_error);

    const char* no_maps = "/tmp/smsge_topo_nomaps.json";
    {
        std::ofstream out(no_maps);
        out << R"({"joint_count":3,"edges":[[0,1],[1,2]],"root":0})";
    }
    Topology t2 = build_topology(no_maps);
    CHECK_THROWS_WITH_AS(build_merge_maps(t2), doctest::Contains("merge maps required"),
                         std::runtime_error);
}

TEST_CASE("kinect20 partitions: five limbs, ten parts refining them") {
    Topology t = build_topology("kinect20");
    auto [parts, bodies] = build_merge_maps(t);

    // body scale: trunk+head, two arms, two legs
    std::set<int> trunk(bodies.groups[0].begin(), bodies.groups[0].end());
    CHECK(trunk == std::set<int>{0, 1, 2, 3});
    std::set<int> left_arm(bodies.groups[1].begin(), bodies.groups[1].end());
    CHECK(left_arm == std::set<int>{4, 5, 6, 7});

    for (const auto& g : bodies.groups) CHECK(group_connected(t, g));
    for (const auto& g : parts.groups) CHECK(group_connected(t, g));
    CHECK(refines(parts, bodies));

    // exact partition
    std::set<int> all;
    std::size_t total = 0;
    for (const auto& g : parts.groups) {
        all.insert(g.begin(), g.end());
        total += g.size();
    }
    CHECK(all.size() == 20);
    CHECK(total == 20);
}

TEST_CASE("partition refinement holds for every preset") {
    for (const char* name : {"kinect20", "kinect25", "casia14"}) {
        Topology t = build_topology(name);
        auto [parts, bodies] = build_merge_maps(t);
        CHECK(refines(parts, bodies));
    }
}

TEST_CASE("hyper-joint interpolation inserts midpoints") {
    Topology pair;
    pair.joint_count = 2;
    pair.edges = {{0, 1}};
    pair.root = 0;
    pair.preset_name = "pair";
    Matrix joints(2, 3);
    joints(1, 2) = 2.0;

    ScaleGraph g = interpolate_hyper_joints(joints, pair);
    CHECK(g.positions.rows() == 3);
    CHECK(g.edges.size() == 2);
    CHECK(g.positions(2, 0) == 0.0);
    CHECK(g.positions(2, 1) == 0.0);
    CHECK(g.positions(2, 2) == 1.0);

    // degenerate edge: coincident endpoints
    Matrix same(2, 3);
    same(0, 0) = same(1, 0) = 0.7;
    ScaleGraph g2 = interpolate_hyper_joints(same, pair);
    CHECK(g2.positions(2, 0) == doctest::Approx(0.7));

    Topology k20 = build_topology("kinect20");
    Rng rng(3);
    ScaleGraph big = interpolate_hyper_joints(random_frame(20, rng), k20);
    CHECK(big.positions.rows() == 39);
    CHECK(big.edges.size() == 38);
}

TEST_CASE("interpolated nodes are exact midpoints of their edge endpoints") {
    Topology t = build_topology("kinect20");
    Rng rng(5);
    Matrix joints = random_frame(20, rng);
    ScaleGraph g = interpolate_hyper_joints(joints, t);
    for (std::size_t e = 0; e < t.edges.size(); ++e) {
        auto [a, b] = t.edges[e];
        for (int c = 0; c < 3; ++c)
            CHECK(g.positions(20 + e, static_cast<std::size_t>(c)) ==
                  doctest::Approx(0.5 * (joints(a, c) + joints(b, c))).epsilon(1e-12));
    }
}

TEST_CASE("coarsening averages group positions") {
    Topology t;
    t.joint_count = 2;
    t.edges = {{0, 1}};
    t.root = 0;
    t.preset_name = "pair";
    Matrix joints(2, 3);
    joints(0, 0) = 1.0;
    joints(1, 0) = 3.0;
    MergeMap whole{3, {{0, 1}}};
    ScaleGraph g = coarsen(joints, t, whole);
    CHECK(g.positions.rows() == 1);
    CHECK(g.positions(0, 0) == doctest::Approx(2.0));

    MergeMap singletons{2, {{0}, {1}}};
    ScaleGraph g2 = coarsen(joints, t, singletons);
    CHECK(g2.positions(0, 0) == doctest::Approx(1.0));
    CHECK(g2.positions(1, 0) == doctest::Approx(3.0));
    CHECK(g2.edges.size() == 1);  // adjacent because 0-1 is a topology edge
}

TEST_CASE("kinect20 part-scale graph is connected") {
    Topology t = build_topology("kinect20");
    auto [parts, bodies] = build_merge_maps(t);
    Rng rng(7);
    ScaleGraph g = coarsen(random_frame(20, rng), t, parts);
    CHECK(g.positions.rows() == 10);
    CHECK(nodes_connected(10, g.edges));
    ScaleGraph gb = coarsen(random_frame(20, rng), t, bodies);
    CHECK(nodes_connected(5, gb.edges));
}

TEST_CASE("coarsening commutes with rigid translation") {
    Topology t = build_topology("casia14");
    auto [parts, bodies] = build_merge_maps(t);
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix joints = random_frame(14, rng);
        const double tx = rng.uniform(-5, 5), ty = rng.uniform(-5, 5), tz = rng.uniform(-5, 5);
        Matrix shifted = joints;
        for (std::size_t i = 0; i < shifted.rows(); ++i) {
            shifted(i, 0) += tx;
            shifted(i, 1) += ty;
            shifted(i, 2) += tz;
        }
        ScaleGraph a = coarsen(joints, t, parts);
        ScaleGraph b = coarsen(shifted, t, parts);
        for (std::size_t i = 0; i < a.positions.rows(); ++i) {
            CHECK(b.positions(i, 0) == doctest::Approx(a.positions(i, 0) + tx).epsilon(1e-12));
            CHECK(b.positions(i, 1) == doctest::Approx(a.positions(i, 1) + ty).epsilon(1e-12));
            CHECK(b.positions(i, 2) == doctest::Approx(a.positions(i, 2) + tz).epsilon(1e-12));
        }
    }
}

TEST_CASE("neighbor lists are symmetric and include the node itself at every scale") {
    Topology t = build_topology("kinect25");
    auto [parts, bodies] = build_merge_maps(t);
    Rng rng(13);
    MultiScaleFrame f = build_frame(random_frame(25, rng), t, parts, bodies);
    for (const auto& g : f.per_scale) {
        const int n = static_cast<int>(g.positions.rows());
        for (int i = 0; i < n; ++i) {
            const auto& nb = g.neighbors[static_cast<std::size_t>(i)];
            CHECK(std::find(nb.begin(), nb.end(), i) != nb.end());
            for (int j : nb) {
                const auto& back = g.neighbors[static_cast<std::size_t>(j)];
                CHECK(std::find(back.begin(), back.end(), i) != back.end());
            }
        }
    }
}

TEST_CASE("build_multiscale produces per-frame scale graphs") {
    Topology t = build_topology("kinect20");
    auto [parts, bodies] = build_merge_maps(t);
    Rng rng(17);
    std::vector<Matrix> frames;
    for (int i = 0; i < 6; ++i) frames.push_back(random_frame(20, rng));
    auto ms = build_multiscale(frames, t, parts, bodies);
    REQUIRE(ms.size() == 6);
    for (const auto& f : ms) {
        CHECK(f.per_scale[0].positions.rows() == 39);
        CHECK(f.per_scale[1].positions.rows() == 20);
        CHECK(f.per_scale[2].positions.rows() == 10);
        CHECK(f.per_scale[3].positions.rows() == 5);
    }
    CHECK(build_multiscale({}, t, parts, bodies).empty());
    CHECK(build_multiscale({frames[0]}, t, parts, bodies).size() == 1);
}

TEST_CASE("frame/topology mismatch and non-finite coordinates are rejected") {
    Topology t = build_topology("kinect20");
    auto [parts, bodies] = build_merge_maps(t);
    Matrix wrong(19, 3);
    CHECK_THROWS_WITH_AS(build_frame(wrong, t, parts, bodies),
                         doctest::Contains("joint-count mismatch"), std::runtime_error);
    Matrix bad(20, 3);
    bad(4, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(build_frame(bad, t, parts, bodies), doctest::Contains("non-finite"),
                         std::runtime_error);
}
