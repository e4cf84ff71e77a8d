#include "featfilter/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ff {

namespace {

void require_same_extents(const LabelMap& a, const LabelMap& b, const char* who) {
    if (a.height() != b.height() || a.width() != b.width())
        throw std::invalid_argument(std::string(who) + ": label map extents differ");
}

}  // namespace

double dice(const LabelMap& pred, const LabelMap& truth, int class_id) {
    require_same_extents(pred, truth, "dice");
    std::size_t inter = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool pa = pred.values()[i] == class_id;
        const bool pb = truth.values()[i] == class_id;
        a += pa;
        b += pb;
        inter += pa && pb;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

std::vector<std::pair<int, int>> boundary_pixels(const LabelMap& labels, int class_id) {
    const int h = static_cast<int>(labels.height());
    const int w = static_cast<int>(labels.width());
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (labels.at(y, x) != class_id) continue;
            const bool edge = y == 0 || y == h - 1 || x == 0 || x == w - 1 ||
                              labels.at(y - 1, x) != class_id || labels.at(y + 1, x) != class_id ||
                              labels.at(y, x - 1) != class_id || labels.at(y, x + 1) != class_id;
            if (edge) out.emplace_back(y, x);
        }
    }
    return out;
}

namespace {

double directed_hausdorff(const std::vector<std::pair<int, int>>& from,
                          const std::vector<std::pair<int, int>>& to) {
    double worst = 0.0;
    for (const auto& [ay, ax] : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [by, bx] : to) {
            const double dy = ay - by, dx = ax - bx;
            best = std::min(best, dy * dy + dx * dx);
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

}  // namespace

double hausdorff(const LabelMap& pred, const LabelMap& truth, int class_id) {
    require_same_extents(pred, truth, "hausdorff");
    const auto ba = boundary_pixels(pred, class_id);
    const auto bb = boundary_pixels(truth, class_id);
    if (ba.empty() && bb.empty()) return 0.0;
    if (ba.empty() || bb.empty()) {
        // image diagonal, an upper bound on any attainable boundary distance;
        // sqrt (unlike hypot) is correctly rounded, keeping outputs portable
        const double h = static_cast<double>(pred.height());
        const double w = static_cast<double>(pred.width());
        return std::sqrt(h * h + w * w);
    }
    return std::max(directed_hausdorff(ba, bb), directed_hausdorff(bb, ba));
}

MeanSeg mean_seg(std::span<const MetricsRow> rows) {
    if (rows.empty()) throw std::invalid_argument("mean_seg: no rows");
    MeanSeg m;
    for (const auto& r : rows) {
        m.dice += r.dice;
        m.hausdorff += r.hausdorff;
    }
    m.dice /= static_cast<double>(rows.size());
    m.hausdorff /= static_cast<double>(rows.size());
    return m;
}

std::vector<MetricsRow> evaluate_classes(const LabelMap& pred, const LabelMap& truth,
                                         int num_classes) {
    if (num_classes < 2) throw std::invalid_argument("evaluate_classes: need at least 2 classes");
    std::vector<MetricsRow> rows;
    rows.reserve(static_cast<std::size_t>(num_classes) - 1);
    for (int c = 1; c < num_classes; ++c)
        rows.push_back(MetricsRow{c, dice(pred, truth, c), hausdorff(pred, truth, c)});
    return rows;
}

}  // namespace ff
