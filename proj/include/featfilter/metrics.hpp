#pragma once

#include <span>
#include <utility>
#include <vector>

#include "featfilter/tensor.hpp"

namespace ff {

// Overlap and boundary-distance metrics between predicted and reference
// label maps, evaluated one class at a time.

// Dice coefficient 2|A∩B| / (|A|+|B|); both masks empty -> 1.0.
double dice(const LabelMap& pred, const LabelMap& truth, int class_id);

// Pixels of the class mask that touch a 4-neighbour outside the mask or the
// image border.
std::vector<std::pair<int, int>> boundary_pixels(const LabelMap& labels, int class_id);

// Symmetric Hausdorff distance between class boundaries, in pixels
// (Euclidean). Both masks empty -> 0.0; exactly one empty -> the image
// diagonal, an upper bound on any attainable distance.
double hausdorff(const LabelMap& pred, const LabelMap& truth, int class_id);

struct MetricsRow {
    int class_id = 0;
    double dice = 0.0;
    double hausdorff = 0.0;
};

struct MeanSeg {
    double dice = 0.0;
    double hausdorff = 0.0;
};

// Mean over the given per-class rows; pass foreground classes only so the
// ever-present background does not dilute the summary.
MeanSeg mean_seg(std::span<const MetricsRow> rows);

// Per-class rows for classes 1..num_classes-1 plus their mean.
std::vector<MetricsRow> evaluate_classes(const LabelMap& pred, const LabelMap& truth,
                                         int num_classes);

}  // namespace ff
