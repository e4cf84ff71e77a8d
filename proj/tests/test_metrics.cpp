#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "featfilter/metrics.hpp"
#include "featfilter/rng.hpp"

using namespace ff;

namespace {

// Brute-force reference: boundary = mask pixels with a 4-neighbour outside
// the mask or on the image border; distance = symmetric max over directed
// nearest-boundary distances.
std::vector<std::pair<int, int>> oracle_boundary(const LabelMap& m, int cid) {
    std::vector<std::pair<int, int>> pts;
    const int h = static_cast<int>(m.height()), w = static_cast<int>(m.width());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (m.at(y, x) != cid) continue;
            const bool edge = y == 0 || x == 0 || y == h - 1 || x == w - 1 ||
                              m.at(y - 1, x) != cid || m.at(y + 1, x) != cid ||
                              m.at(y, x - 1) != cid || m.at(y, x + 1) != cid;
            if (edge) pts.emplace_back(y, x);
        }
    return pts;
}

double oracle_hausdorff(const LabelMap& a, const LabelMap& b, int cid) {
    const auto pa = oracle_boundary(a, cid), pb = oracle_boundary(b, cid);
    const double h = static_cast<double>(a.height()), w = static_cast<double>(a.width());
    if (pa.empty() && pb.empty()) return 0.0;
    if (pa.empty() || pb.empty()) return std::sqrt(h * h + w * w);
    double worst = 0;
    for (const auto& [dir_a, dir_b] : {std::pair(&pa, &pb), std::pair(&pb, &pa)}) {
        for (const auto& p : *dir_a) {
            double best = 1e300;
            for (const auto& q : *dir_b) {
                const double dy = p.first - q.first, dx = p.second - q.second;
                best = std::min(best, std::sqrt(dy * dy + dx * dx));
            }
            worst = std::max(worst, best);
        }
    }
    return worst;
}

double oracle_dice(const LabelMap& a, const LabelMap& b, int cid) {
    double na = 0, nb = 0, ni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a.values()[i] == cid;
        nb += b.values()[i] == cid;
        ni += a.values()[i] == cid && b.values()[i] == cid;
    }
    return na + nb == 0 ? 1.0 : 2.0 * ni / (na + nb);
}

}  // namespace

TEST_CASE("dice point cases") {
    LabelMap a(3, 3, 0);
    a.at(0, 0) = 1;
    a.at(0, 1) = 1;
    a.at(1, 0) = 1;
    a.at(1, 1) = 1;
    CHECK(dice(a, a, 1) == 1.0);

    LabelMap b(3, 3, 0);  // same size, shifted by one: overlap 2 of 4
    b.at(1, 0) = 1;
    b.at(1, 1) = 1;
    b.at(2, 0) = 1;
    b.at(2, 1) = 1;
    CHECK(dice(a, b, 1) == 0.5);

    LabelMap c(3, 3, 0);
    c.at(2, 2) = 1;
    LabelMap d(3, 3, 0);
    d.at(0, 2) = 1;
    CHECK(dice(c, d, 1) == 0.0);

    LabelMap e1(3, 3, 0), e2(3, 3, 0);
    CHECK(dice(e1, e2, 1) == 1.0);  // class absent from both

    LabelMap wrong(2, 3, 0);
    CHECK_THROWS(dice(a, wrong, 1));
}

TEST_CASE("boundary pixels use 4-connectivity and the image border") {
    LabelMap m(5, 5, 0);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 3; ++x) m.at(y, x) = 1;
    const auto pts = boundary_pixels(m, 1);
    CHECK(pts.size() == 8);  // the 3x3 blob ring; the centre is interior
    CHECK(std::find(pts.begin(), pts.end(), std::pair(2, 2)) == pts.end());

    LabelMap full(2, 2, 1);
    CHECK(boundary_pixels(full, 1).size() == 4);  // border pixels always qualify
}

TEST_CASE("hausdorff point cases") {
    LabelMap a(8, 8, 0), b(8, 8, 0);
    a.at(2, 2) = 1;
    CHECK(hausdorff(a, a, 1) == 0.0);

    LabelMap p(8, 8, 0), q(8, 8, 0);
    p.at(0, 0) = 1;
    q.at(3, 4) = 1;
    CHECK(hausdorff(p, q, 1) == 5.0);

    LabelMap e1(6, 8, 0), e2(6, 8, 0);
    CHECK(hausdorff(e1, e2, 1) == 0.0);
    e2.at(1, 1) = 1;
    CHECK(hausdorff(e1, e2, 1) == std::sqrt(36.0 + 64.0));

    LabelMap wrong(8, 7, 0);
    CHECK_THROWS(hausdorff(a, wrong, 1));
}

TEST_CASE("metrics match the brute-force oracle on random masks") {
    Rng rng(31, "metrics");
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t h = 2 + rng.next_below(7), w = 2 + rng.next_below(7);
        LabelMap a(h, w, 0), b(h, w, 0);
        for (int& v : a.values()) v = rng.next_below(10) < 3 ? 1 : 0;
        for (int& v : b.values()) v = rng.next_below(10) < 3 ? 1 : 0;
        CHECK(dice(a, b, 1) == oracle_dice(a, b, 1));
        CHECK(hausdorff(a, b, 1) == oracle_hausdorff(a, b, 1));
        CHECK(hausdorff(a, b, 1) == hausdorff(b, a, 1));
        CHECK(dice(a, b, 1) == dice(b, a, 1));
    }
}

TEST_CASE("hausdorff dominates the nearest-boundary gap of disjoint masks") {
    Rng rng(32, "gap");
    for (int trial = 0; trial < 50; ++trial) {
        LabelMap a(8, 8, 0), b(8, 8, 0);
        a.at(rng.next_below(3), rng.next_below(3)) = 1;
        b.at(5 + rng.next_below(3), 5 + rng.next_below(3)) = 1;
        const auto pa = oracle_boundary(a, 1), pb = oracle_boundary(b, 1);
        double nearest = 1e300;
        for (const auto& p : pa)
            for (const auto& q : pb) {
                const double dy = p.first - q.first, dx = p.second - q.second;
                nearest = std::min(nearest, std::sqrt(dy * dy + dx * dx));
            }
        CHECK(hausdorff(a, b, 1) >= nearest);
    }
}

TEST_CASE("mean_seg averages foreground rows") {
    const std::vector<MetricsRow> rows = {{1, 0.8, 3.0}, {2, 0.9, 2.0}, {3, 1.0, 1.0}};
    const MeanSeg m = mean_seg(rows);
    CHECK(m.dice == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(m.hausdorff == doctest::Approx(2.0).epsilon(1e-15));

    const std::vector<MetricsRow> one = {{1, 0.7, 4.0}};
    CHECK(mean_seg(one).dice == 0.7);
    CHECK_THROWS(mean_seg(std::vector<MetricsRow>{}));
}

TEST_CASE("evaluate_classes covers every foreground class") {
    LabelMap pred(4, 4, 0), truth(4, 4, 0);
    pred.at(0, 0) = 1;
    truth.at(0, 0) = 1;
    truth.at(3, 3) = 2;
    const auto rows = evaluate_classes(pred, truth, 4);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].class_id == 1);
    CHECK(rows[0].dice == 1.0);
    CHECK(rows[1].class_id == 2);
    CHECK(rows[1].dice == 0.0);  // predicted empty, truth nonempty
    CHECK(rows[2].class_id == 3);
    CHECK(rows[2].dice == 1.0);  // absent from both counts as perfect
}
