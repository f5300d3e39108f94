// Compares the OpenMP kernels against their serial reference twins on a
// synthetic crowd and reports wall times plus max deviation.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "personlab/hough.hpp"
#include "personlab/pipeline.hpp"
#include "personlab/refine.hpp"
#include "personlab/segmentation.hpp"
#include "personlab/synth.hpp"

using namespace personlab;

namespace {

SceneSpec crowd_scene(int persons_per_row, int rows) {
    // upright template, roughly 44x140 px at unit scale
    const double tx[kCocoKeypoints] = {0,  -3, 3,  -7, 7,  -12, 12, -18, 18,
                                       -21, 21, -8, 8,  -9, 9,  -10, 10};
    const double ty[kCocoKeypoints] = {0,  -3, -3, -1, -1, 14, 14, 36, 36,
                                       58, 58, 62, 62, 96, 96, 130, 130};
    SceneSpec scene;
    scene.width = 140 * persons_per_row + 80;
    scene.height = 220 * rows + 80;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < persons_per_row; ++c) {
            ScenePerson p;
            const double ax = 90.0 + 140.0 * c;
            const double ay = 60.0 + 220.0 * r;
            double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
            for (int k = 0; k < kCocoKeypoints; ++k) {
                const Point2D kp{ax + tx[k], ay + ty[k]};
                p.keypoints.push_back(kp);
                p.visibility.push_back(true);
                min_x = std::min(min_x, kp.x);
                max_x = std::max(max_x, kp.x);
                min_y = std::min(min_y, kp.y);
                max_y = std::max(max_y, kp.y);
            }
            p.mask_polygon = {{min_x - 14, min_y - 14},
                              {max_x + 14, min_y - 14},
                              {max_x + 14, max_y + 14},
                              {min_x - 14, max_y + 14}};
            scene.persons.push_back(std::move(p));
        }
    }
    return scene;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double parallel_ms, double serial_ms, double max_dev) {
    std::printf("%-18s  omp %8.2f ms   serial %8.2f ms   speedup %5.2fx   max|dev| %.3g\n",
                name, parallel_ms, serial_ms, serial_ms / parallel_ms, max_dev);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (compiled without OpenMP)\n");
#endif

    const SceneSpec scene = crowd_scene(8, 6);
    std::printf("scene: %zu persons, %dx%d px, stride 8\n\n", scene.persons.size(),
                scene.width, scene.height);
    const int reps = 5;

    const ModelOutputs outputs = render_outputs(scene, 8);
    const ModelOutputs outputs_ser = ref::render_outputs(scene, 8);
    double dev = 0.0;
    for (std::size_t i = 0; i < outputs.heatmaps.data.size(); ++i)
        dev = std::max(dev, std::abs(double(outputs.heatmaps.data[i]) -
                                     outputs_ser.heatmaps.data[i]));
    report("render_outputs",
           time_ms([&] { (void)render_outputs(scene, 8); }, reps),
           time_ms([&] { (void)ref::render_outputs(scene, 8); }, reps), dev);

    // the gather-form oracle is quadratic in cell count; compare on a crop
    const ModelOutputs small = render_outputs(crowd_scene(2, 1), 8);
    const HoughMaps hough = accumulate_hough(small.heatmaps, small.short_offsets, 32.0);
    const HoughMaps hough_ser =
        ref::accumulate_hough(small.heatmaps, small.short_offsets, 32.0);
    dev = 0.0;
    for (std::size_t i = 0; i < hough.grids.data.size(); ++i)
        dev = std::max(dev, std::abs(hough.grids.data[i] - hough_ser.grids.data[i]));
    report("hough (crop)",
           time_ms([&] { (void)accumulate_hough(small.heatmaps, small.short_offsets, 32.0); },
                   reps),
           time_ms([&] { (void)ref::accumulate_hough(small.heatmaps, small.short_offsets,
                                                     32.0); },
                   1),
           dev);

    const KinematicGraph graph = default_coco_graph();
    const RefinementConfig refinement;
    const FieldGrid mid =
        refine_mid_offsets(outputs.mid_offsets, outputs.short_offsets, graph, refinement);
    const FieldGrid mid_ser =
        ref::refine_mid_offsets(outputs.mid_offsets, outputs.short_offsets, graph, refinement);
    dev = 0.0;
    for (std::size_t i = 0; i < mid.data.size(); ++i)
        dev = std::max(dev, std::abs(double(mid.data[i]) - mid_ser.data[i]));
    report("refine_mid",
           time_ms([&] { (void)refine_mid_offsets(outputs.mid_offsets, outputs.short_offsets,
                                                  graph, refinement); },
                   reps),
           time_ms([&] { (void)ref::refine_mid_offsets(outputs.mid_offsets,
                                                       outputs.short_offsets, graph,
                                                       refinement); },
                   reps),
           dev);

    const FieldGrid long_off =
        refine_long_offsets(outputs.long_offsets, outputs.short_offsets, refinement);
    const PipelineConfig config;
    PipelineResult result = run_pipeline(outputs, config, graph, OksParams::coco());
    const MaskGrid person = person_mask(outputs.seg_prob);
    const EmbeddingField embedding = build_embedding(long_off);
    const InstanceMasks assigned =
        assign_pixels(person, embedding, result.instances, outputs.heatmaps);
    const InstanceMasks assigned_ser =
        ref::assign_pixels(person, embedding, result.instances, outputs.heatmaps);
    dev = 0.0;
    for (std::size_t j = 0; j < assigned.instance_cells.size(); ++j)
        for (std::size_t i = 0; i < assigned.instance_cells[j].data.size(); ++i)
            dev = std::max(dev, std::abs(double(assigned.instance_cells[j].data[i]) -
                                         assigned_ser.instance_cells[j].data[i]));
    report("assign_pixels",
           time_ms([&] { (void)assign_pixels(person, embedding, result.instances,
                                             outputs.heatmaps); },
                   reps),
           time_ms([&] { (void)ref::assign_pixels(person, embedding, result.instances,
                                                  outputs.heatmaps); },
                   reps),
           dev);

    const auto t0 = std::chrono::steady_clock::now();
    (void)run_pipeline(outputs, config, graph, OksParams::coco());
    const auto t1 = std::chrono::steady_clock::now();
    std::printf("\nfull pipeline: %.2f ms, %zu instances decoded\n",
                std::chrono::duration<double, std::milli>(t1 - t0).count(),
                result.instances.size());
    return 0;
}
