#include "personlab/synth.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace personlab {

bool point_in_polygon(const std::vector<Point2D>& polygon, Point2D p) {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2D& a = polygon[i];
        const Point2D& b = polygon[j];
        if ((a.y > p.y) != (b.y > p.y) &&
            p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
            inside = !inside;
    }
    return inside;
}

namespace {

// splitmix64
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based Gaussian keyed on (seed, field, element); independent of
// evaluation order, so parallel rendering stays deterministic.
double hashed_gaussian(std::uint64_t seed, std::uint64_t field, std::uint64_t element) {
    const std::uint64_t key = mix64(mix64(seed ^ (field * 0x9e3779b97f4a7c15ULL)) + element);
    const std::uint64_t h1 = mix64(key * 2 + 1);
    const std::uint64_t h2 = mix64(key * 2 + 2);
    double u1 = static_cast<double>(h1 >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    u1 = std::max(u1, 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

void add_noise(FieldGrid& g, double sigma, std::uint64_t seed, std::uint64_t field_id,
               bool clamp01) {
    if (sigma <= 0.0) return;
    for (std::size_t idx = 0; idx < g.data.size(); ++idx) {
        double v = g.data[idx] + sigma * hashed_gaussian(seed, field_id, idx);
        if (clamp01) v = std::min(1.0, std::max(0.0, v));
        g.data[idx] = static_cast<float>(v);
    }
}

void validate_scene(const SceneSpec& scene) {
    if (scene.width <= 0 || scene.height <= 0)
        throw std::invalid_argument("render_outputs: scene has empty image");
    std::size_t k = 0;
    for (std::size_t p = 0; p < scene.persons.size(); ++p) {
        const ScenePerson& person = scene.persons[p];
        if (p == 0) k = person.keypoints.size();
        if (person.keypoints.size() != k || person.visibility.size() != k || k == 0)
            throw std::invalid_argument("render_outputs: inconsistent keypoint counts");
        for (std::size_t i = 0; i < k; ++i) {
            const Point2D& kp = person.keypoints[i];
            if (!std::isfinite(kp.x) || !std::isfinite(kp.y))
                throw std::invalid_argument("render_outputs: non-finite keypoint");
            if (person.visibility[i] &&
                (kp.x < 0 || kp.y < 0 || kp.x > scene.width || kp.y > scene.height))
                throw std::invalid_argument("render_outputs: visible keypoint outside image");
        }
        if (!person.mask_polygon.empty() && person.mask_polygon.size() < 3)
            throw std::invalid_argument("render_outputs: polygon needs >= 3 vertices");
    }
}

template <bool Parallel>
ModelOutputs render_impl(const SceneSpec& scene, int stride, double disk_radius,
                         const KinematicGraph* graph) {
    validate_scene(scene);
    const int k = scene.persons.empty() ? kCocoKeypoints
                                        : static_cast<int>(scene.persons[0].keypoints.size());
    KinematicGraph default_graph;
    if (graph == nullptr) {
        if (k != kCocoKeypoints)
            throw std::invalid_argument("render_outputs: non-COCO K requires a graph");
        default_graph = default_coco_graph();
        graph = &default_graph;
    }
    if (graph->num_keypoints != k)
        throw std::invalid_argument("render_outputs: graph does not match keypoint count");

    const int h = (scene.height + stride - 1) / stride;
    const int w = (scene.width + stride - 1) / stride;
    const int m = static_cast<int>(scene.persons.size());
    const double r2 = disk_radius * disk_radius;

    ModelOutputs out;
    out.image_height = scene.height;
    out.image_width = scene.width;
    out.heatmaps = FieldGrid(h, w, k, stride);
    out.short_offsets = FieldGrid(h, w, 2 * k, stride);
    out.mid_offsets = FieldGrid(h, w, graph->num_mid_channels(), stride);
    out.long_offsets = FieldGrid(h, w, 2 * k, stride);
    out.seg_prob = FieldGrid(h, w, 1, stride);

    #pragma omp parallel for schedule(static) if (Parallel)
    for (int i = 0; i < h; ++i) {
        std::vector<int> owner(k);       // closest instance per keypoint type
        std::vector<double> owner_d2(k);
        for (int j = 0; j < w; ++j) {
            const Point2D x = out.heatmaps.cell_center(i, j);

            // closest visible instance within the disk, per keypoint type
            for (int c = 0; c < k; ++c) {
                owner[c] = -1;
                owner_d2[c] = std::numeric_limits<double>::infinity();
                for (int p = 0; p < m; ++p) {
                    if (!scene.persons[p].visibility[c]) continue;
                    const Point2D d = scene.persons[p].keypoints[c] - x;
                    const double d2 = d.x * d.x + d.y * d.y;
                    if (d2 <= r2 && d2 < owner_d2[c]) {
                        owner_d2[c] = d2;
                        owner[c] = p;
                    }
                }
                if (owner[c] >= 0) {
                    const Point2D y = scene.persons[owner[c]].keypoints[c];
                    out.heatmaps.at(i, j, c) = 1.0f;
                    out.short_offsets.at(i, j, 2 * c) = static_cast<float>(y.x - x.x);
                    out.short_offsets.at(i, j, 2 * c + 1) = static_cast<float>(y.y - x.y);
                }
            }

            // mid offsets on source-keypoint disks, to the same instance
            for (int e = 0; e < static_cast<int>(graph->edges.size()); ++e) {
                const int from = graph->edges[e].from, to = graph->edges[e].to;
                const int p = owner[from];
                if (p < 0 || !scene.persons[p].visibility[to]) continue;
                const Point2D y = scene.persons[p].keypoints[to];
                out.mid_offsets.at(i, j, 2 * e) = static_cast<float>(y.x - x.x);
                out.mid_offsets.at(i, j, 2 * e + 1) = static_cast<float>(y.y - x.y);
            }

            // segmentation union and long offsets on single-ownership cells
            int covering = -1, cover_count = 0;
            for (int p = 0; p < m; ++p) {
                if (!scene.persons[p].mask_polygon.empty() &&
                    point_in_polygon(scene.persons[p].mask_polygon, x)) {
                    covering = p;
                    ++cover_count;
                }
            }
            if (cover_count > 0) out.seg_prob.at(i, j, 0) = 1.0f;
            if (cover_count == 1) {
                for (int c = 0; c < k; ++c) {
                    if (!scene.persons[covering].visibility[c]) continue;
                    const Point2D y = scene.persons[covering].keypoints[c];
                    out.long_offsets.at(i, j, 2 * c) = static_cast<float>(y.x - x.x);
                    out.long_offsets.at(i, j, 2 * c + 1) = static_cast<float>(y.y - x.y);
                }
            }
        }
    }

    auto sigma = [&](const char* name) {
        const auto it = scene.noise_sigma.find(name);
        return it == scene.noise_sigma.end() ? 0.0 : it->second;
    };
    add_noise(out.heatmaps, sigma("heatmaps"), scene.noise_seed, 1, true);
    add_noise(out.short_offsets, sigma("short_offsets"), scene.noise_seed, 2, false);
    add_noise(out.mid_offsets, sigma("mid_offsets"), scene.noise_seed, 3, false);
    add_noise(out.long_offsets, sigma("long_offsets"), scene.noise_seed, 4, false);
    add_noise(out.seg_prob, sigma("seg_prob"), scene.noise_seed, 5, true);
    return out;
}

using nlohmann::json;

double number_at(const json& node, const std::string& path) {
    if (!node.is_number()) throw SceneParseError(path, "expected a number");
    return node.get<double>();
}

int int_at(const json& node, const std::string& path) {
    if (!node.is_number_integer()) throw SceneParseError(path, "expected an integer");
    return node.get<int>();
}

const json& member(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw SceneParseError(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw SceneParseError(path, std::string("missing key \"") + key + "\"");
    return *it;
}

}  // namespace

ModelOutputs render_outputs(const SceneSpec& scene, int stride, double disk_radius,
                            const KinematicGraph* graph) {
    return render_impl<true>(scene, stride, disk_radius, graph);
}

namespace ref {
ModelOutputs render_outputs(const SceneSpec& scene, int stride, double disk_radius,
                            const KinematicGraph* graph) {
    return render_impl<false>(scene, stride, disk_radius, graph);
}
}  // namespace ref

SceneSpec scene_from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneParseError("<document>", e.what());
    }
    SceneSpec scene;
    scene.width = int_at(member(root, "width", "<root>"), "width");
    scene.height = int_at(member(root, "height", "<root>"), "height");
    const json& persons = member(root, "persons", "<root>");
    if (!persons.is_array()) throw SceneParseError("persons", "expected an array");
    for (std::size_t p = 0; p < persons.size(); ++p) {
        const std::string base = "persons[" + std::to_string(p) + "]";
        ScenePerson person;
        const json& kps = member(persons[p], "keypoints", base);
        if (!kps.is_array()) throw SceneParseError(base + ".keypoints", "expected an array");
        for (std::size_t i = 0; i < kps.size(); ++i) {
            const std::string kp_path = base + ".keypoints[" + std::to_string(i) + "]";
            const json& kp = kps[i];
            if (!kp.is_array() || kp.size() != 3)
                throw SceneParseError(kp_path, "expected [x, y, visible]");
            person.keypoints.push_back(
                {number_at(kp[0], kp_path + "[0]"), number_at(kp[1], kp_path + "[1]")});
            person.visibility.push_back(number_at(kp[2], kp_path + "[2]") != 0.0);
        }
        const json& poly = member(persons[p], "mask_polygon", base);
        if (!poly.is_array()) throw SceneParseError(base + ".mask_polygon", "expected an array");
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const std::string v_path = base + ".mask_polygon[" + std::to_string(i) + "]";
            const json& v = poly[i];
            if (!v.is_array() || v.size() != 2)
                throw SceneParseError(v_path, "expected [x, y]");
            person.mask_polygon.push_back(
                {number_at(v[0], v_path + "[0]"), number_at(v[1], v_path + "[1]")});
        }
        scene.persons.push_back(std::move(person));
    }
    if (root.contains("noise_sigma")) {
        const json& noise = root["noise_sigma"];
        if (!noise.is_object()) throw SceneParseError("noise_sigma", "expected an object");
        for (const auto& [key, value] : noise.items()) {
            static const char* known[] = {"heatmaps", "short_offsets", "mid_offsets",
                                          "long_offsets", "seg_prob"};
            bool ok = false;
            for (const char* name : known) ok = ok || key == name;
            if (!ok) throw SceneParseError("noise_sigma." + key, "unknown field name");
            scene.noise_sigma[key] = number_at(value, "noise_sigma." + key);
        }
    }
    if (root.contains("noise_seed"))
        scene.noise_seed = static_cast<std::uint64_t>(int_at(root["noise_seed"], "noise_seed"));
    return scene;
}

std::string scene_to_json_text(const SceneSpec& scene) {
    json root;
    root["width"] = scene.width;
    root["height"] = scene.height;
    root["persons"] = json::array();
    for (const ScenePerson& person : scene.persons) {
        json kps = json::array();
        for (std::size_t i = 0; i < person.keypoints.size(); ++i)
            kps.push_back({person.keypoints[i].x, person.keypoints[i].y,
                           person.visibility[i] ? 1 : 0});
        json poly = json::array();
        for (const Point2D& v : person.mask_polygon) poly.push_back({v.x, v.y});
        root["persons"].push_back({{"keypoints", kps}, {"mask_polygon", poly}});
    }
    if (!scene.noise_sigma.empty()) {
        json noise;
        for (const auto& [key, value] : scene.noise_sigma) noise[key] = value;
        root["noise_sigma"] = noise;
        root["noise_seed"] = scene.noise_seed;
    }
    return root.dump(2) + "\n";
}

SceneSpec load_scene(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open scene file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return scene_from_json_text(text);
}

void save_scene(const SceneSpec& scene, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open scene file for writing: " + path);
    f << scene_to_json_text(scene);
}

}  // namespace personlab
