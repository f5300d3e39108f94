#include <string>

#include <CLI11.hpp>

#include "personlab/pipeline.hpp"

namespace {

void add_config_flags(CLI::App* cmd, personlab::PipelineConfig& config) {
    cmd->add_option("--radius", config.disk_radius, "Keypoint disk radius R, pixels")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed-threshold", config.seed_threshold, "Minimum Hough seed score");
    cmd->add_option("--nms-radius", config.nms_radius, "Seed/keypoint NMS radius r, pixels")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--scoring", [&config](const std::vector<std::string>& v) {
            if (v[0] == "hough")
                config.scoring = personlab::ScoringMethod::Hough;
            else if (v[0] == "expected-oks")
                config.scoring = personlab::ScoringMethod::ExpectedOks;
            else
                return false;
            return true;
        }, "Keypoint scoring method: hough | expected-oks");
    cmd->add_option("--nms", [&config](const std::vector<std::string>& v) {
            if (v[0] == "hard")
                config.nms = personlab::NmsMethod::Hard;
            else if (v[0] == "soft")
                config.nms = personlab::NmsMethod::Soft;
            else
                return false;
            return true;
        }, "Instance NMS method: hard | soft");
    cmd->add_option("--hard-nms-threshold", config.hard_nms_oks_threshold,
                    "OKS threshold for hard NMS");
    cmd->add_option("--seg-threshold", config.seg_threshold,
                    "Semantic segmentation probability threshold");
    cmd->add_option("--dist-threshold", config.dist_threshold,
                    "Embedding distance threshold t");
    cmd->add_option("--budget", config.proposal_budget, "Maximum proposals per image")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mid-steps", config.refinement.mid_steps_short,
                    "Mid-offset refinement steps (short-range)");
    cmd->add_option("--long-self-steps", config.refinement.long_steps_self,
                    "Long-offset self-refinement steps");
    cmd->add_option("--long-short-steps", config.refinement.long_steps_short,
                    "Long-offset refinement steps (short-range)");
    cmd->add_option("--seed-window", config.seed_window_radius,
                    "Local-maximum window radius, cells");
    cmd->add_option("--snap-radius", config.snap_radius,
                    "Snap propagated keypoints to Hough maxima within this radius (0 = off)");
    cmd->add_option("--graph", config.graph_file, "Kinematic graph file");
    cmd->add_option("--kappas", config.kappa_file, "Per-keypoint OKS kappa file");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PersonLab bottom-up pose estimation and instance segmentation"};
    app.require_subcommand(1);

    personlab::PipelineConfig config;

    // decode
    auto* decode = app.add_subcommand("decode", "Decode a PLFD container (or a directory "
                                                "of containers) to detections and masks");
    std::string input, out_json, masks_dir, render_path;
    std::int64_t image_id = 0;
    bool dump_config = false;
    decode->add_option("input", input, "Input .plfd container or directory")->required();
    decode->add_option("-o,--output", out_json, "Detections JSON output path")->required();
    decode->add_option("--masks", masks_dir, "Directory for per-instance PGM bitmaps");
    decode->add_option("--render", render_path, "Overlay PNG output path");
    decode->add_option("--image-id", image_id, "image_id for the detections JSON");
    decode->add_flag("--dump-config", dump_config, "Print the effective config JSON and exit");
    add_config_flags(decode, config);

    // synth
    auto* synth = app.add_subcommand("synth", "Render a scene JSON into a PLFD container");
    std::string scene_path, out_container, gt_out;
    int stride = 8;
    double synth_radius = 32.0;
    synth->add_option("scene", scene_path, "Scene JSON file")->required();
    synth->add_option("output", out_container, "Output .plfd path")->required();
    synth->add_option("--gt", gt_out, "Also write ground-truth annotations JSON");
    synth->add_option("--stride", stride, "Output stride, pixels per cell")
        ->check(CLI::PositiveNumber);
    synth->add_option("--radius", synth_radius, "Keypoint disk radius R, pixels")
        ->check(CLI::PositiveNumber);

    // eval
    auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
    std::string gt_path, pred_path, task = "keypoints", kappa_file;
    bool json_output = false;
    int max_detections = 20;
    eval->add_option("ground_truth", gt_path, "Ground-truth JSON")->required();
    eval->add_option("predictions", pred_path, "Detections JSON")->required();
    eval->add_option("--task", task, "keypoints | masks");
    eval->add_flag("--json", json_output, "Machine-readable JSON output");
    eval->add_option("--budget", max_detections, "Maximum detections per image")
        ->check(CLI::PositiveNumber);
    eval->add_option("--kappas", kappa_file, "Per-keypoint OKS kappa file");

    // render
    auto* render = app.add_subcommand("render", "Decode a container and write the overlay PNG");
    std::string render_input, render_out;
    render->add_option("input", render_input, "Input .plfd container")->required();
    render->add_option("output", render_out, "Output PNG path")->required();
    add_config_flags(render, config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage errors
    }

    if (decode->parsed()) {
        if (dump_config) {
            std::printf("%s", config.to_json_text().c_str());
            return 0;
        }
        return personlab::cmd_decode(input, out_json, masks_dir, render_path, config, image_id);
    }
    if (synth->parsed()) return personlab::cmd_synth(scene_path, stride, out_container, synth_radius, gt_out);
    if (eval->parsed())
        return personlab::cmd_eval(gt_path, pred_path, task, json_output, max_detections,
                                   kappa_file);
    if (render->parsed()) return personlab::cmd_render(render_input, render_out, config);
    return 1;
}
