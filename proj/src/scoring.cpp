#include "personlab/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "personlab/container.hpp"
#include "personlab/keypoints.hpp"

namespace personlab {

OksParams OksParams::coco() {
    // 2x the COCO keypoint sigmas, in coco_keypoint_names() order.
    return OksParams{{0.052, 0.050, 0.050, 0.070, 0.070, 0.158, 0.158, 0.144, 0.144,
                      0.124, 0.124, 0.214, 0.214, 0.174, 0.174, 0.178, 0.178}};
}

OksParams load_kappas(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open kappa file: " + path);
    std::vector<double> kappas(kCocoKeypoints, 0.0);
    std::vector<char> seen(kCocoKeypoints, 0);
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string name;
        double value;
        if (!(ss >> name)) continue;
        if (!(ss >> value) || value <= 0.0)
            throw std::runtime_error("kappa file line " + std::to_string(lineno) +
                                     ": expected \"name positive_value\"");
        const int idx = keypoint_index(name);
        if (idx < 0)
            throw std::runtime_error("kappa file line " + std::to_string(lineno) +
                                     ": unknown keypoint " + name);
        if (seen[idx])
            throw std::runtime_error("kappa file: duplicate keypoint " + name);
        seen[idx] = 1;
        kappas[idx] = value;
    }
    for (int i = 0; i < kCocoKeypoints; ++i)
        if (!seen[i])
            throw std::runtime_error("kappa file: missing keypoint " +
                                     coco_keypoint_names()[i]);
    return OksParams{std::move(kappas)};
}

double instance_scale(const PoseInstance& instance, double floor) {
    if (instance.keypoints.empty())
        throw std::invalid_argument("instance_scale: no keypoints");
    double min_x = instance.keypoints[0].x, max_x = min_x;
    double min_y = instance.keypoints[0].y, max_y = min_y;
    for (const Point2D& p : instance.keypoints) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    return std::max(std::sqrt((max_x - min_x) * (max_y - min_y)), floor);
}

std::vector<double> score_keypoints_hough(const PoseInstance& instance,
                                          const HoughMaps& hough) {
    std::vector<double> scores(instance.keypoints.size());
    for (std::size_t k = 0; k < instance.keypoints.size(); ++k) {
        const double h =
            bilinear_sample(hough.grids, static_cast<int>(k), instance.keypoints[k]);
        scores[k] = std::min(h, 1.0);  // crowded accumulators can overshoot slightly
    }
    return scores;
}

std::vector<double> score_keypoints_expected_oks(const PoseInstance& instance,
                                                 const HoughMaps& hough,
                                                 const FieldGrid& heatmaps,
                                                 const OksParams& oks, double disk_radius) {
    const int k_count = static_cast<int>(instance.keypoints.size());
    if (static_cast<int>(oks.kappas.size()) != k_count)
        throw std::invalid_argument("expected_oks: kappa count mismatch");
    const ScoreGrid& g = hough.grids;
    const double lambda = instance_scale(instance);
    std::vector<double> scores(k_count, 0.0);

    for (int k = 0; k < k_count; ++k) {
        const Point2D y = instance.keypoints[k];
        const double denom = 2.0 * lambda * lambda * oks.kappas[k] * oks.kappas[k];
        // cells whose centers fall inside the disk
        const int i_lo = std::max(0, static_cast<int>((y.y - disk_radius) / g.stride - 0.5));
        const int i_hi = std::min(g.height - 1,
                                  static_cast<int>((y.y + disk_radius) / g.stride));
        const int j_lo = std::max(0, static_cast<int>((y.x - disk_radius) / g.stride - 0.5));
        const int j_hi = std::min(g.width - 1,
                                  static_cast<int>((y.x + disk_radius) / g.stride));
        double mass = 0.0, weighted = 0.0;
        for (int i = i_lo; i <= i_hi; ++i) {
            for (int j = j_lo; j <= j_hi; ++j) {
                const Point2D c = g.cell_center(i, j);
                const double dx = c.x - y.x, dy = c.y - y.y;
                if (dx * dx + dy * dy > disk_radius * disk_radius) continue;
                const double h = g.at(i, j, k);
                mass += h;
                weighted += h * std::exp(-(dx * dx + dy * dy) / denom);
            }
        }
        if (mass <= 0.0) continue;
        const double presence = bilinear_sample(heatmaps, k, y);
        scores[k] = presence * (weighted / mass);
    }
    return scores;
}

double pose_oks(const std::vector<Point2D>& candidate, const std::vector<Point2D>& kept,
                double kept_scale, const OksParams& oks) {
    const std::size_t k_count = candidate.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < k_count; ++k) {
        const double dx = candidate[k].x - kept[k].x;
        const double dy = candidate[k].y - kept[k].y;
        sum += std::exp(-(dx * dx + dy * dy) /
                        (2.0 * kept_scale * kept_scale * oks.kappas[k] * oks.kappas[k]));
    }
    return sum / static_cast<double>(k_count);
}

namespace {

double mean_keypoint_score(const PoseInstance& inst) {
    double sum = 0.0;
    for (double s : inst.keypoint_scores) sum += s;
    return sum / static_cast<double>(inst.keypoint_scores.size());
}

void sort_by_score(std::vector<PoseInstance>& instances) {
    std::stable_sort(instances.begin(), instances.end(),
                     [](const PoseInstance& a, const PoseInstance& b) {
                         return a.instance_score > b.instance_score;
                     });
}

}  // namespace

std::vector<PoseInstance> hard_nms(std::vector<PoseInstance> instances, const OksParams& oks,
                                   double threshold) {
    for (PoseInstance& inst : instances) inst.instance_score = mean_keypoint_score(inst);
    sort_by_score(instances);

    std::vector<PoseInstance> kept;
    std::vector<double> kept_scale;
    for (PoseInstance& inst : instances) {
        bool suppressed = false;
        for (std::size_t j = 0; j < kept.size(); ++j) {
            if (pose_oks(inst.keypoints, kept[j].keypoints, kept_scale[j], oks) >= threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) {
            kept_scale.push_back(instance_scale(inst));
            kept.push_back(std::move(inst));
        }
    }
    return kept;
}

std::vector<PoseInstance> score_and_rank(std::vector<PoseInstance> instances,
                                         const HoughMaps& hough, const FieldGrid& heatmaps,
                                         const OksParams& oks, const ScoringConfig& config,
                                         double disk_radius) {
    for (PoseInstance& inst : instances) {
        inst.keypoint_scores =
            config.method == ScoringMethod::Hough
                ? score_keypoints_hough(inst, hough)
                : score_keypoints_expected_oks(inst, hough, heatmaps, oks, disk_radius);
    }
    return config.nms == NmsMethod::Hard
               ? hard_nms(std::move(instances), oks, config.hard_nms_oks_threshold)
               : soft_nms_rescore(std::move(instances), config.soft_nms_radius);
}

std::vector<PoseInstance> soft_nms_rescore(std::vector<PoseInstance> instances,
                                           double radius) {
    for (PoseInstance& inst : instances) inst.instance_score = mean_keypoint_score(inst);
    sort_by_score(instances);

    const std::size_t n = instances.size();
    for (std::size_t j = 0; j < n; ++j) {
        PoseInstance& inst = instances[j];
        const std::size_t k_count = inst.keypoints.size();
        double sum = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            bool claimed = false;
            for (std::size_t prev = 0; prev < j && !claimed; ++prev)
                claimed = norm(inst.keypoints[k] - instances[prev].keypoints[k]) <= radius;
            if (!claimed) sum += inst.keypoint_scores[k];
        }
        inst.instance_score = sum / static_cast<double>(k_count);
    }
    sort_by_score(instances);
    return instances;
}

}  // namespace personlab
