#include "personlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "personlab/container.hpp"

namespace personlab {

std::uint64_t Rle::area() const {
    std::uint64_t a = 0;
    for (std::size_t i = 1; i < counts.size(); i += 2) a += counts[i];
    return a;
}

Rle rle_encode(const MaskGrid& mask) {
    Rle rle;
    rle.height = mask.height;
    rle.width = mask.width;
    std::uint32_t run = 0;
    std::uint8_t value = 0;  // runs alternate starting with zeros
    for (int j = 0; j < mask.width; ++j) {
        for (int i = 0; i < mask.height; ++i) {
            const std::uint8_t v = mask.at(i, j, 0) ? 1 : 0;
            if (v != value) {
                rle.counts.push_back(run);
                run = 0;
                value = v;
            }
            ++run;
        }
    }
    rle.counts.push_back(run);
    return rle;
}

Rle rle_encode_upsampled(const MaskGrid& cells, int image_height, int image_width) {
    Rle rle;
    rle.height = image_height;
    rle.width = image_width;
    const int s = cells.stride;
    std::uint32_t run = 0;
    std::uint8_t value = 0;
    auto append = [&](std::uint8_t v, std::uint32_t len) {
        if (v == value) {
            run += len;
        } else {
            rle.counts.push_back(run);
            value = v;
            run = len;
        }
    };
    for (int x = 0; x < image_width; ++x) {
        const int cj = std::min(x / s, cells.width - 1);
        for (int y = 0; y < image_height;) {
            const int ci = std::min(y / s, cells.height - 1);
            const int span = std::min((ci + 1) * s, image_height) - y;
            append(cells.at(ci, cj, 0) ? 1 : 0, static_cast<std::uint32_t>(span));
            y += span;
        }
    }
    rle.counts.push_back(run);
    return rle;
}

MaskGrid rle_decode(const Rle& rle) {
    if (rle.height <= 0 || rle.width <= 0)
        throw std::runtime_error("rle: non-positive dimensions");
    std::uint64_t total = 0;
    for (std::uint32_t c : rle.counts) total += c;
    if (total != static_cast<std::uint64_t>(rle.height) * rle.width)
        throw std::runtime_error("rle: run lengths do not cover height*width");
    MaskGrid mask(rle.height, rle.width, 1, 1);
    std::size_t flat = 0;
    std::uint8_t value = 0;
    for (std::uint32_t c : rle.counts) {
        for (std::uint32_t n = 0; n < c; ++n, ++flat) {
            const int j = static_cast<int>(flat) / rle.height;
            const int i = static_cast<int>(flat) % rle.height;
            mask.at(i, j, 0) = value;
        }
        value = !value;
    }
    return mask;
}

double rle_iou(const Rle& det, const Rle& gt, bool iscrowd) {
    if (det.height != gt.height || det.width != gt.width) return 0.0;
    // walk both run lists in lockstep, cocoapi style
    std::uint64_t inter = 0, uni = 0;
    std::size_t a = 1, b = 1;
    std::uint64_t ca = det.counts.empty() ? 0 : det.counts[0];
    std::uint64_t cb = gt.counts.empty() ? 0 : gt.counts[0];
    bool va = false, vb = false;
    std::uint64_t remaining = static_cast<std::uint64_t>(det.height) * det.width;
    while (remaining > 0) {
        const std::uint64_t c = std::min(std::min(ca, cb), remaining);
        if (va || vb) {
            uni += c;
            if (va && vb) inter += c;
        }
        remaining -= c;
        ca -= c;
        cb -= c;
        if (ca == 0 && a < det.counts.size()) {
            ca = det.counts[a++];
            va = !va;
        }
        if (cb == 0 && b < gt.counts.size()) {
            cb = gt.counts[b++];
            vb = !vb;
        }
    }
    if (inter == 0) return 0.0;
    const double denom = iscrowd ? static_cast<double>(det.area()) : static_cast<double>(uni);
    return denom > 0.0 ? static_cast<double>(inter) / denom : 0.0;
}

int GroundTruthAnnotation::labeled_count() const {
    int n = 0;
    for (int v : visibility) n += v > 0 ? 1 : 0;
    return n;
}

double oks(const Detection& det, const GroundTruthAnnotation& gt, const OksParams& kappas) {
    if (det.keypoints.size() != gt.keypoints.size() ||
        gt.keypoints.size() != kappas.kappas.size())
        throw std::invalid_argument("oks: keypoint count mismatch");
    double sum = 0.0;
    int labeled = 0;
    for (std::size_t k = 0; k < gt.keypoints.size(); ++k) {
        if (gt.visibility[k] <= 0) continue;
        ++labeled;
        const double dx = det.keypoints[k].x - gt.keypoints[k].x;
        const double dy = det.keypoints[k].y - gt.keypoints[k].y;
        sum += std::exp(-(dx * dx + dy * dy) /
                        (2.0 * gt.area * kappas.kappas[k] * kappas.kappas[k]));
    }
    if (labeled == 0) throw std::invalid_argument("oks: annotation has no labeled keypoints");
    return sum / labeled;
}

EvalConfig::EvalConfig() {
    for (int i = 0; i < 10; ++i) thresholds.push_back(0.50 + 0.05 * i);
}

namespace {

constexpr double kAreaMedium = 32.0 * 32.0;
constexpr double kAreaLarge = 96.0 * 96.0;

double keypoint_bbox_area(const std::vector<Point2D>& kps) {
    if (kps.empty()) return 0.0;
    double min_x = kps[0].x, max_x = kps[0].x, min_y = kps[0].y, max_y = kps[0].y;
    for (const Point2D& p : kps) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    return (max_x - min_x) * (max_y - min_y);
}

struct SweepEntry {
    double score;
    bool tp;
};

struct PrResult {
    double ap = -1.0;   // -1 when no ground truth in range
    double recall = -1.0;
};

// One matching pass at a fixed similarity threshold and area range.
// similarity(det_idx, gt_idx) must be symmetric in image grouping (callers
// bucket by image beforehand).
template <typename SimilarityFn, typename GtIgnoreFn, typename DetAreaFn>
PrResult pr_at_threshold(const std::vector<GroundTruthAnnotation>& gts,
                         const std::vector<Detection>& dets, double threshold,
                         double area_lo, double area_hi, int max_detections,
                         SimilarityFn&& similarity, GtIgnoreFn&& gt_ignore,
                         DetAreaFn&& det_area) {
    // group indices by image, preserving input order
    std::map<std::int64_t, std::vector<int>> gt_by_image, det_by_image;
    for (int g = 0; g < static_cast<int>(gts.size()); ++g)
        gt_by_image[gts[g].image_id].push_back(g);
    for (int d = 0; d < static_cast<int>(dets.size()); ++d)
        det_by_image[dets[d].image_id].push_back(d);

    std::vector<SweepEntry> entries;
    int positives = 0;

    for (const auto& [image_id, gt_ids] : gt_by_image)
        for (int g : gt_ids)
            if (!gt_ignore(g) && gts[g].area >= area_lo && gts[g].area < area_hi)
                ++positives;

    for (auto& [image_id, det_ids] : det_by_image) {
        std::stable_sort(det_ids.begin(), det_ids.end(),
                         [&](int a, int b) { return dets[a].score > dets[b].score; });
        if (static_cast<int>(det_ids.size()) > max_detections)
            det_ids.resize(max_detections);

        const auto gt_it = gt_by_image.find(image_id);
        const std::vector<int> no_gts;
        const std::vector<int>& gt_ids = gt_it == gt_by_image.end() ? no_gts : gt_it->second;
        std::vector<char> matched(gt_ids.size(), 0);

        for (int d : det_ids) {
            double best_sim = 0.0;
            int best_slot = -1;
            double best_ignore_sim = 0.0;
            for (std::size_t slot = 0; slot < gt_ids.size(); ++slot) {
                const int g = gt_ids[slot];
                const bool ignore = gt_ignore(g) || gts[g].area < area_lo ||
                                    gts[g].area >= area_hi;
                if (ignore) {
                    best_ignore_sim = std::max(best_ignore_sim, similarity(d, g));
                    continue;
                }
                if (matched[slot]) continue;
                const double sim = similarity(d, g);
                if (sim > best_sim) {
                    best_sim = sim;
                    best_slot = static_cast<int>(slot);
                }
            }
            if (best_slot >= 0 && best_sim >= threshold) {
                matched[best_slot] = 1;
                entries.push_back({dets[d].score, true});
            } else if (best_ignore_sim >= threshold) {
                // claimed by an ignore region: neither TP nor FP
            } else {
                const double a = det_area(d);
                if (a >= area_lo && a < area_hi) entries.push_back({dets[d].score, false});
            }
        }
    }

    if (positives == 0) return {};

    std::stable_sort(entries.begin(), entries.end(),
                     [](const SweepEntry& a, const SweepEntry& b) { return a.score > b.score; });
    std::vector<double> precision(entries.size()), recall(entries.size());
    int tp = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        tp += entries[i].tp ? 1 : 0;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / positives;
    }
    // precision envelope from the right
    for (std::size_t i = precision.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);

    // 101-point interpolation
    double ap_sum = 0.0;
    std::size_t idx = 0;
    for (int r = 0; r <= 100; ++r) {
        const double target = r / 100.0;
        while (idx < recall.size() && recall[idx] < target - 1e-12) ++idx;
        if (idx < recall.size()) ap_sum += precision[idx];
    }
    PrResult out;
    out.ap = ap_sum / 101.0;
    out.recall = entries.empty() ? 0.0 : recall.back();
    return out;
}

template <typename SimilarityFn, typename GtIgnoreFn, typename DetAreaFn>
ApSummary summarize(const std::vector<GroundTruthAnnotation>& gts,
                    const std::vector<Detection>& dets, const EvalConfig& config,
                    bool with_small, SimilarityFn&& similarity, GtIgnoreFn&& gt_ignore,
                    DetAreaFn&& det_area) {
    constexpr double kInf = 1e18;
    auto run = [&](double threshold, double lo, double hi) {
        return pr_at_threshold(gts, dets, threshold, lo, hi, config.max_detections,
                               similarity, gt_ignore, det_area);
    };
    auto mean_over_thresholds = [&](double lo, double hi, bool want_recall) {
        double sum = 0.0;
        int n = 0;
        for (double t : config.thresholds) {
            const PrResult r = run(t, lo, hi);
            if (r.ap < 0.0) continue;
            sum += want_recall ? r.recall : r.ap;
            ++n;
        }
        return n == 0 ? -1.0 : sum / n;
    };

    ApSummary s;
    s.ap = mean_over_thresholds(0.0, kInf, false);
    s.ap50 = run(0.50, 0.0, kInf).ap;
    s.ap75 = run(0.75, 0.0, kInf).ap;
    s.ar = mean_over_thresholds(0.0, kInf, true);
    s.ar50 = run(0.50, 0.0, kInf).recall;
    s.ar75 = run(0.75, 0.0, kInf).recall;
    if (with_small) {
        s.ap_small = mean_over_thresholds(0.0, kAreaMedium, false);
        s.ar_small = mean_over_thresholds(0.0, kAreaMedium, true);
    }
    s.ap_medium = mean_over_thresholds(kAreaMedium, kAreaLarge, false);
    s.ap_large = mean_over_thresholds(kAreaLarge, kInf, false);
    s.ar_medium = mean_over_thresholds(kAreaMedium, kAreaLarge, true);
    s.ar_large = mean_over_thresholds(kAreaLarge, kInf, true);
    return s;
}

}  // namespace

ApSummary keypoint_ap(const std::vector<GroundTruthAnnotation>& gts,
                      const std::vector<Detection>& dets, const EvalConfig& config) {
    auto similarity = [&](int d, int g) {
        if (gts[g].labeled_count() == 0) return 0.0;  // undefined pair, never matches
        return oks(dets[d], gts[g], config.kappas);
    };
    auto gt_ignore = [&](int g) { return gts[g].iscrowd || gts[g].labeled_count() == 0; };
    auto det_area = [&](int d) { return keypoint_bbox_area(dets[d].keypoints); };
    return summarize(gts, dets, config, false, similarity, gt_ignore, det_area);
}

ApSummary mask_ap(const std::vector<GroundTruthAnnotation>& gts,
                  const std::vector<Detection>& dets, const EvalConfig& config) {
    auto similarity = [&](int d, int g) {
        if (dets[d].mask.counts.empty() || gts[g].mask.counts.empty()) return 0.0;
        return rle_iou(dets[d].mask, gts[g].mask, gts[g].iscrowd);
    };
    auto gt_ignore = [&](int g) { return gts[g].iscrowd || gts[g].mask.counts.empty(); };
    auto det_area = [&](int d) { return static_cast<double>(dets[d].mask.area()); };
    return summarize(gts, dets, config, true, similarity, gt_ignore, det_area);
}

namespace {

using nlohmann::json;

json rle_to_json(const Rle& rle) {
    return json{{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

Rle rle_from_json(const json& node) {
    Rle rle;
    if (!node.is_object() || !node.contains("size") || !node.contains("counts"))
        throw std::runtime_error("segmentation: expected {size, counts}");
    const json& size = node["size"];
    if (!size.is_array() || size.size() != 2)
        throw std::runtime_error("segmentation.size: expected [height, width]");
    rle.height = size[0].get<int>();
    rle.width = size[1].get<int>();
    for (const json& c : node["counts"]) rle.counts.push_back(c.get<std::uint32_t>());
    return rle;
}

json keypoints_to_flat(const std::vector<Point2D>& kps, const std::vector<double>& third) {
    json flat = json::array();
    for (std::size_t k = 0; k < kps.size(); ++k) {
        flat.push_back(kps[k].x);
        flat.push_back(kps[k].y);
        flat.push_back(third[k]);
    }
    return flat;
}

void flat_to_keypoints(const json& flat, std::vector<Point2D>& kps,
                       std::vector<double>& third) {
    if (!flat.is_array() || flat.size() % 3 != 0)
        throw std::runtime_error("keypoints: expected a flat K*3 array");
    for (std::size_t i = 0; i < flat.size(); i += 3) {
        kps.push_back({flat[i].get<double>(), flat[i + 1].get<double>()});
        third.push_back(flat[i + 2].get<double>());
    }
}

}  // namespace

std::string detections_to_json_text(const std::vector<Detection>& dets) {
    json root = json::array();
    for (const Detection& d : dets) {
        json entry{{"image_id", d.image_id},
                   {"category_id", 1},
                   {"keypoints", keypoints_to_flat(d.keypoints, d.keypoint_scores)},
                   {"score", d.score}};
        if (!d.mask.counts.empty()) entry["segmentation"] = rle_to_json(d.mask);
        root.push_back(std::move(entry));
    }
    return root.dump(2) + "\n";
}

std::vector<Detection> detections_from_json_text(const std::string& text) {
    const json root = json::parse(text);
    if (!root.is_array()) throw std::runtime_error("detections: expected a JSON array");
    std::vector<Detection> dets;
    for (const json& entry : root) {
        Detection d;
        d.image_id = entry.value("image_id", std::int64_t{0});
        d.score = entry.at("score").get<double>();
        flat_to_keypoints(entry.at("keypoints"), d.keypoints, d.keypoint_scores);
        if (entry.contains("segmentation")) d.mask = rle_from_json(entry["segmentation"]);
        dets.push_back(std::move(d));
    }
    return dets;
}

std::string ground_truth_to_json_text(const std::vector<GroundTruthAnnotation>& gts) {
    json root = json::array();
    for (const GroundTruthAnnotation& g : gts) {
        std::vector<double> vis(g.visibility.begin(), g.visibility.end());
        json entry{{"image_id", g.image_id},
                   {"category_id", 1},
                   {"keypoints", keypoints_to_flat(g.keypoints, vis)},
                   {"area", g.area},
                   {"iscrowd", g.iscrowd ? 1 : 0}};
        if (!g.mask.counts.empty()) entry["segmentation"] = rle_to_json(g.mask);
        root.push_back(std::move(entry));
    }
    return root.dump(2) + "\n";
}

std::vector<GroundTruthAnnotation> ground_truth_from_json_text(const std::string& text) {
    const json root = json::parse(text);
    if (!root.is_array()) throw std::runtime_error("ground truth: expected a JSON array");
    std::vector<GroundTruthAnnotation> gts;
    for (const json& entry : root) {
        GroundTruthAnnotation g;
        g.image_id = entry.value("image_id", std::int64_t{0});
        g.area = entry.at("area").get<double>();
        g.iscrowd = entry.value("iscrowd", 0) != 0;
        std::vector<double> vis;
        flat_to_keypoints(entry.at("keypoints"), g.keypoints, vis);
        for (double v : vis) g.visibility.push_back(static_cast<int>(v));
        if (entry.contains("segmentation")) g.mask = rle_from_json(entry["segmentation"]);
        gts.push_back(std::move(g));
    }
    return gts;
}

namespace {
std::string slurp(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open: " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}
void spit(const std::string& text, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ParseError(ParseError::Kind::Io, "cannot open for writing: " + path);
    f << text;
}
}  // namespace

std::vector<Detection> load_detections(const std::string& path) {
    return detections_from_json_text(slurp(path));
}
void save_detections(const std::vector<Detection>& dets, const std::string& path) {
    spit(detections_to_json_text(dets), path);
}
std::vector<GroundTruthAnnotation> load_ground_truth(const std::string& path) {
    return ground_truth_from_json_text(slurp(path));
}
void save_ground_truth(const std::vector<GroundTruthAnnotation>& gts, const std::string& path) {
    spit(ground_truth_to_json_text(gts), path);
}

}  // namespace personlab
