#include "personlab/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "personlab/viz.hpp"

namespace personlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string PipelineConfig::to_json_text() const {
    json j{{"disk_radius", disk_radius},
           {"seed_threshold", seed_threshold},
           {"nms_radius", nms_radius},
           {"scoring", scoring == ScoringMethod::ExpectedOks ? "expected-oks" : "hough"},
           {"nms", nms == NmsMethod::Soft ? "soft" : "hard"},
           {"hard_nms_oks_threshold", hard_nms_oks_threshold},
           {"seg_threshold", seg_threshold},
           {"dist_threshold", dist_threshold},
           {"refinement",
            {{"mid_steps_short", refinement.mid_steps_short},
             {"long_steps_self", refinement.long_steps_self},
             {"long_steps_short", refinement.long_steps_short}}},
           {"proposal_budget", proposal_budget},
           {"seed_window_radius", seed_window_radius},
           {"snap_radius", snap_radius},
           {"graph_file", graph_file},
           {"kappa_file", kappa_file}};
    return j.dump(2) + "\n";
}

PipelineResult run_pipeline(const ModelOutputs& outputs, const PipelineConfig& config,
                            const KinematicGraph& graph, const OksParams& kappas) {
    validate_outputs(outputs);

    const FieldGrid mid = refine_mid_offsets(outputs.mid_offsets, outputs.short_offsets,
                                             graph, config.refinement);
    const FieldGrid long_off = refine_long_offsets(outputs.long_offsets,
                                                   outputs.short_offsets, config.refinement);

    PipelineResult result;
    result.hough = accumulate_hough(outputs.heatmaps, outputs.short_offsets,
                                    config.disk_radius);

    std::vector<SeedCandidate> seeds =
        extract_seeds(result.hough, config.seed_threshold, config.seed_window_radius);
    refine_seed_positions(seeds, outputs.short_offsets);

    std::vector<PoseInstance> instances = greedy_decode(
        seeds, result.hough, mid, graph, config.nms_radius, config.snap_radius);

    ScoringConfig scoring;
    scoring.method = config.scoring;
    scoring.nms = config.nms;
    scoring.hard_nms_oks_threshold = config.hard_nms_oks_threshold;
    scoring.soft_nms_radius = config.nms_radius;
    instances = score_and_rank(std::move(instances), result.hough, outputs.heatmaps, kappas,
                               scoring, config.disk_radius);
    if (static_cast<int>(instances.size()) > config.proposal_budget)
        instances.resize(config.proposal_budget);

    const MaskGrid person = person_mask(outputs.seg_prob, config.seg_threshold);
    const EmbeddingField embedding = build_embedding(long_off);
    result.masks = assign_pixels(person, embedding, instances, outputs.heatmaps,
                                 config.dist_threshold);
    result.instances = std::move(instances);
    return result;
}

std::vector<Detection> detections_from_result(const ModelOutputs& outputs,
                                              const PipelineResult& result,
                                              std::int64_t image_id) {
    std::vector<Detection> dets;
    dets.reserve(result.instances.size());
    for (std::size_t j = 0; j < result.instances.size(); ++j) {
        const PoseInstance& inst = result.instances[j];
        Detection d;
        d.image_id = image_id;
        d.keypoints = inst.keypoints;
        d.keypoint_scores = inst.keypoint_scores;
        d.score = inst.instance_score;
        d.mask = rle_encode_upsampled(result.masks.instance_cells[j], outputs.image_height,
                                      outputs.image_width);
        dets.push_back(std::move(d));
    }
    return dets;
}

namespace {

int map_exception(const char* what) {
    std::cerr << "error: " << what << "\n";
    try {
        throw;
    } catch (const ParseError& e) {
        return e.kind == ParseError::Kind::Io ? 2 : 3;
    } catch (const SceneParseError&) {
        return 3;
    } catch (const std::invalid_argument&) {
        return 1;
    } catch (const std::exception&) {
        return 3;
    }
}

struct LoadedConfig {
    KinematicGraph graph;
    OksParams kappas;
};

LoadedConfig resolve(const PipelineConfig& config) {
    LoadedConfig lc;
    lc.graph = config.graph_file.empty() ? default_coco_graph() : load_graph(config.graph_file);
    lc.kappas = config.kappa_file.empty() ? OksParams::coco() : load_kappas(config.kappa_file);
    return lc;
}

void decode_one(const std::string& input_path, const std::string& out_json,
                const std::string& masks_dir, const std::string& render_path,
                const PipelineConfig& config, const LoadedConfig& lc,
                std::int64_t image_id) {
    const ModelOutputs outputs = load_container(input_path);
    const PipelineResult result = run_pipeline(outputs, config, lc.graph, lc.kappas);
    if (!out_json.empty())
        save_detections(detections_from_result(outputs, result, image_id), out_json);

    if (!masks_dir.empty() || !render_path.empty()) {
        const std::vector<MaskGrid> image_masks =
            masks_to_image(result.masks, outputs.image_height, outputs.image_width);
        if (!masks_dir.empty()) {
            fs::create_directories(masks_dir);
            char name[32];
            for (std::size_t j = 0; j < image_masks.size(); ++j) {
                std::snprintf(name, sizeof(name), "instance_%03zu.png", j);
                write_mask_png(image_masks[j], (fs::path(masks_dir) / name).string());
            }
        }
        if (!render_path.empty())
            write_png(render_overlay(outputs, result.instances, image_masks, lc.graph),
                      render_path);
    }
}

std::int64_t image_id_for(const fs::path& stem, std::int64_t fallback) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(stem.string(), &used);
        if (used == stem.string().size()) return v;
    } catch (...) {
    }
    return fallback;
}

}  // namespace

int cmd_decode(const std::string& input_path, const std::string& out_json,
               const std::string& masks_dir, const std::string& render_path,
               const PipelineConfig& config, std::int64_t image_id) {
    try {
        const LoadedConfig lc = resolve(config);
        if (fs::is_directory(input_path)) {
            // batch mode: one detections file per container
            std::vector<fs::path> inputs;
            for (const auto& entry : fs::directory_iterator(input_path))
                if (entry.path().extension() == ".plfd") inputs.push_back(entry.path());
            std::sort(inputs.begin(), inputs.end());
            fs::create_directories(out_json);
            if (!masks_dir.empty()) fs::create_directories(masks_dir);
            std::exception_ptr failure;
            #pragma omp parallel for schedule(dynamic)
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                try {
                    const std::string stem = inputs[i].stem().string();
                    decode_one(inputs[i].string(),
                               (fs::path(out_json) / (stem + ".json")).string(),
                               masks_dir.empty() ? "" : (fs::path(masks_dir) / stem).string(),
                               render_path.empty()
                                   ? ""
                                   : (fs::path(render_path) / (stem + ".png")).string(),
                               config, lc, image_id_for(inputs[i].stem(), i));
                } catch (...) {
                    #pragma omp critical
                    if (!failure) failure = std::current_exception();
                }
            }
            if (failure) std::rethrow_exception(failure);
        } else {
            decode_one(input_path, out_json, masks_dir, render_path, config, lc, image_id);
        }
        return 0;
    } catch (const std::exception& e) {
        return map_exception(e.what());
    }
}

std::vector<GroundTruthAnnotation> ground_truth_from_scene(const SceneSpec& scene,
                                                           std::int64_t image_id) {
    std::vector<GroundTruthAnnotation> gts;
    for (const ScenePerson& person : scene.persons) {
        GroundTruthAnnotation gt;
        gt.image_id = image_id;
        gt.keypoints = person.keypoints;
        for (bool v : person.visibility) gt.visibility.push_back(v ? 2 : 0);
        if (!person.mask_polygon.empty()) {
            MaskGrid mask(scene.height, scene.width, 1, 1);
            for (int y = 0; y < scene.height; ++y)
                for (int x = 0; x < scene.width; ++x)
                    mask.at(y, x, 0) =
                        point_in_polygon(person.mask_polygon, {x + 0.5, y + 0.5}) ? 1 : 0;
            gt.mask = rle_encode(mask);
            gt.area = static_cast<double>(gt.mask.area());
        } else {
            double lo_x = 1e18, hi_x = -1e18, lo_y = 1e18, hi_y = -1e18;
            for (const Point2D& p : person.keypoints) {
                lo_x = std::min(lo_x, p.x);
                hi_x = std::max(hi_x, p.x);
                lo_y = std::min(lo_y, p.y);
                hi_y = std::max(hi_y, p.y);
            }
            gt.area = (hi_x - lo_x) * (hi_y - lo_y);
        }
        gts.push_back(std::move(gt));
    }
    return gts;
}

int cmd_synth(const std::string& scene_path, int stride, const std::string& out_container,
              double disk_radius, const std::string& gt_out) {
    try {
        if (stride <= 0) throw std::invalid_argument("stride must be positive");
        const SceneSpec scene = load_scene(scene_path);
        save_container(render_outputs(scene, stride, disk_radius), out_container);
        if (!gt_out.empty()) save_ground_truth(ground_truth_from_scene(scene), gt_out);
        return 0;
    } catch (const std::exception& e) {
        return map_exception(e.what());
    }
}

int cmd_render(const std::string& input_path, const std::string& out_png,
               const PipelineConfig& config) {
    try {
        const LoadedConfig lc = resolve(config);
        decode_one(input_path, "", "", out_png, config, lc, 0);
        return 0;
    } catch (const std::exception& e) {
        return map_exception(e.what());
    }
}

namespace {

void print_row(const char* label, double v) {
    std::printf(" %-8s = %6.3f\n", label, v);
}

}  // namespace

int cmd_eval(const std::string& gt_path, const std::string& pred_path,
             const std::string& task, bool json_output, int max_detections,
             const std::string& kappa_file) {
    try {
        if (task != "keypoints" && task != "masks")
            throw std::invalid_argument("task must be \"keypoints\" or \"masks\"");
        const auto gts = load_ground_truth(gt_path);
        const auto dets = load_detections(pred_path);
        EvalConfig config;
        config.max_detections = max_detections;
        if (!kappa_file.empty()) config.kappas = load_kappas(kappa_file);

        json out;
        out["task"] = task;
        if (task == "keypoints") {
            const ApSummary s = keypoint_ap(gts, dets, config);
            out["AP"] = s.ap;
            out["AP50"] = s.ap50;
            out["AP75"] = s.ap75;
            out["APM"] = s.ap_medium;
            out["APL"] = s.ap_large;
            out["AR"] = s.ar;
            out["AR50"] = s.ar50;
            out["AR75"] = s.ar75;
            out["ARM"] = s.ar_medium;
            out["ARL"] = s.ar_large;
        } else {
            const ApSummary s = mask_ap(gts, dets, config);
            EvalConfig c1 = config, c10 = config;
            c1.max_detections = 1;
            c10.max_detections = 10;
            out["AP"] = s.ap;
            out["AP50"] = s.ap50;
            out["AP75"] = s.ap75;
            out["APS"] = s.ap_small;
            out["APM"] = s.ap_medium;
            out["APL"] = s.ap_large;
            out["AR1"] = mask_ap(gts, dets, c1).ar;
            out["AR10"] = mask_ap(gts, dets, c10).ar;
            out["AR"] = s.ar;
            out["ARS"] = s.ar_small;
            out["ARM"] = s.ar_medium;
            out["ARL"] = s.ar_large;
        }
        if (json_output) {
            std::printf("%s\n", out.dump(2).c_str());
        } else {
            std::printf("%s task (max %d detections/image):\n", task.c_str(), max_detections);
            static const char* kpt_cols[] = {"AP", "AP50", "AP75", "APM", "APL",
                                             "AR", "AR50", "AR75", "ARM", "ARL"};
            static const char* mask_cols[] = {"AP",  "AP50", "AP75", "APS", "APM", "APL",
                                              "AR1", "AR10", "AR",   "ARS", "ARM", "ARL"};
            if (task == "keypoints")
                for (const char* c : kpt_cols) print_row(c, out[c].get<double>());
            else
                for (const char* c : mask_cols) print_row(c, out[c].get<double>());
        }
        return 0;
    } catch (const std::exception& e) {
        return map_exception(e.what());
    }
}

}  // namespace personlab
