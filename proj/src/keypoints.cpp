#include "personlab/keypoints.hpp"

#include <fstream>

#include "personlab/container.hpp"
#include <functional>
#include <sstream>
#include <stdexcept>

namespace personlab {

const std::array<std::string, kCocoKeypoints>& coco_keypoint_names() {
    static const std::array<std::string, kCocoKeypoints> names = {
        "nose",          "left_eye",      "right_eye",     "left_ear",
        "right_ear",     "left_shoulder", "right_shoulder", "left_elbow",
        "right_elbow",   "left_wrist",    "right_wrist",   "left_hip",
        "right_hip",     "left_knee",     "right_knee",    "left_ankle",
        "right_ankle"};
    return names;
}

int keypoint_index(const std::string& name) {
    const auto& names = coco_keypoint_names();
    for (int i = 0; i < kCocoKeypoints; ++i)
        if (names[i] == name) return i;
    return -1;
}

int KinematicGraph::edge_index(int from, int to) const {
    for (int e = 0; e < static_cast<int>(edges.size()); ++e)
        if (edges[e].from == from && edges[e].to == to) return e;
    return -1;
}

void KinematicGraph::validate() const {
    const int k = num_keypoints;
    if (k <= 0) throw std::invalid_argument("graph has no keypoints");
    if (static_cast<int>(edges.size()) != 2 * (k - 1))
        throw std::invalid_argument("graph must have 2(K-1) directed edges");
    for (const Edge& e : edges) {
        if (e.from < 0 || e.from >= k || e.to < 0 || e.to >= k || e.from == e.to)
            throw std::invalid_argument("graph edge endpoint out of range");
        if (edge_index(e.to, e.from) < 0)
            throw std::invalid_argument("graph edge missing its reverse");
    }
    // connectivity of the undirected support
    std::vector<char> seen(k, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int visited = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const Edge& e : edges) {
            if (e.from == u && !seen[e.to]) {
                seen[e.to] = 1;
                ++visited;
                stack.push_back(e.to);
            }
        }
    }
    if (visited != k) throw std::invalid_argument("graph is not connected");
    // K-1 undirected edges on K connected nodes is automatically acyclic
}

namespace {

KinematicGraph from_undirected(int k, const std::vector<std::pair<int, int>>& pairs) {
    KinematicGraph g;
    g.num_keypoints = k;
    for (auto [a, b] : pairs) {
        g.edges.push_back({a, b});
        g.edges.push_back({b, a});
    }
    g.validate();
    return g;
}

}  // namespace

KinematicGraph default_coco_graph() {
    auto id = [](const char* n) { return keypoint_index(n); };
    const std::vector<std::pair<int, int>> pairs = {
        {id("nose"), id("left_eye")},
        {id("nose"), id("right_eye")},
        {id("left_eye"), id("left_ear")},
        {id("right_eye"), id("right_ear")},
        {id("nose"), id("left_shoulder")},
        {id("nose"), id("right_shoulder")},
        {id("left_shoulder"), id("left_elbow")},
        {id("left_elbow"), id("left_wrist")},
        {id("right_shoulder"), id("right_elbow")},
        {id("right_elbow"), id("right_wrist")},
        {id("left_shoulder"), id("left_hip")},
        {id("right_shoulder"), id("right_hip")},
        {id("left_hip"), id("left_knee")},
        {id("left_knee"), id("left_ankle")},
        {id("right_hip"), id("right_knee")},
        {id("right_knee"), id("right_ankle")},
    };
    return from_undirected(kCocoKeypoints, pairs);
}

KinematicGraph load_graph(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open graph file: " + path);
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string a, b;
        if (!(ss >> a)) continue;
        if (!(ss >> b))
            throw std::runtime_error("graph file line " + std::to_string(lineno) +
                                     ": expected two keypoint names");
        const int ia = keypoint_index(a), ib = keypoint_index(b);
        if (ia < 0 || ib < 0)
            throw std::runtime_error("graph file line " + std::to_string(lineno) +
                                     ": unknown keypoint name");
        pairs.emplace_back(ia, ib);
    }
    return from_undirected(kCocoKeypoints, pairs);
}

}  // namespace personlab
