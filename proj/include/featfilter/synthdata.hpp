#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "featfilter/tensor.hpp"

namespace ff {

// Synthetic cardiac-like scenes: a bright disk (LV) inside a ring (MYO) with
// a crescent (RV) hugging the ring from outside, on a noisy background that
// also contains distractor blobs sharing the ring's intensity.
struct SceneConfig {
    int image_size = 64;  // square, power of two
    int num_classes = 4;  // 0 background, 1 RV, 2 MYO, 3 LV
    double lv_radius_min = 5.0;
    double lv_radius_max = 8.0;
    double myo_thickness_min = 2.0;
    double myo_thickness_max = 4.0;
    double center_jitter = 4.0;  // max |offset| of the heart center, per axis
    double rv_radius_min = 4.0;
    double rv_radius_max = 6.0;
    // RV disk center sits at myo_outer + u * rv_radius from the heart center,
    // u drawn from [rv_offset_min, rv_offset_max]; u < 1 guarantees the disk
    // overlaps the ring's circle so the visible part is a crescent.
    double rv_offset_min = 0.2;
    double rv_offset_max = 0.6;
    double intensity_bg = 0.15;
    double intensity_rv = 0.45;
    double intensity_myo = 0.70;
    double intensity_lv = 0.90;
    double noise_sigma = 0.05;
    int confuser_blobs = 3;  // background blobs at the MYO intensity
};

struct Sample {
    Tensor image;   // (h, w, 1), values in [0,1] at generation time
    LabelMap label; // class ids
    int id = 0;
};

// Deterministic for fixed (config, count, seed); throws if the configured
// geometry cannot fit inside the image.
std::vector<Sample> generate(const SceneConfig& config, int count, std::uint64_t seed);

enum class AugmentMode { rotate, translate };

// Joint image/label transforms with parameters drawn from the seed.
Sample augment(const Sample& sample, AugmentMode mode, std::uint64_t seed);

Sample rotate_sample(const Sample& sample, double degrees);          // bilinear / nearest
Sample translate_sample(const Sample& sample, int dx, int dy);       // exact shift
Sample normalize_sample(const Sample& sample);                       // zero mean, unit variance

std::pair<std::vector<Sample>, std::vector<Sample>> split(const std::vector<Sample>& samples,
                                                          double train_fraction,
                                                          std::uint64_t seed);

// On-disk layout: manifest.txt with `id,image_path,label_path,split` lines
// (paths relative to the manifest), FSM1 images, P5 PGM labels.
void save_dataset(const std::string& dir, const std::vector<Sample>& train,
                  const std::vector<Sample>& val, int num_classes);

struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> val;
};

Dataset load_dataset(const std::string& manifest_path);

}  // namespace ff
