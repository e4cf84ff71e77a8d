#include "featfilter/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "featfilter/io.hpp"
#include "featfilter/rng.hpp"

namespace fs = std::filesystem;

namespace ff {

namespace {

constexpr int kBg = 0, kRv = 1, kMyo = 2, kLv = 3;

void check_feasible(const SceneConfig& c) {
    if (c.image_size < 8 || (c.image_size & (c.image_size - 1)) != 0)
        throw std::invalid_argument("SceneConfig: image_size must be a power of two >= 8");
    if (c.num_classes != 4)
        throw std::invalid_argument("SceneConfig: generator produces exactly 4 classes");
    if (c.lv_radius_min > c.lv_radius_max || c.myo_thickness_min > c.myo_thickness_max ||
        c.rv_radius_min > c.rv_radius_max || c.rv_offset_min > c.rv_offset_max)
        throw std::invalid_argument("SceneConfig: empty range (min > max)");
    if (c.lv_radius_min <= 0 || c.myo_thickness_min <= 0 || c.rv_radius_min <= 0)
        throw std::invalid_argument("SceneConfig: radii and thickness must be positive");
    if (c.rv_offset_min < 0.0 || c.rv_offset_max >= 1.0)
        throw std::invalid_argument("SceneConfig: rv offset must lie in [0,1)");
    if (c.noise_sigma < 0.0) throw std::invalid_argument("SceneConfig: noise_sigma must be >= 0");
    const double myo_outer_max = c.lv_radius_max + c.myo_thickness_max;
    const double reach = c.center_jitter + myo_outer_max + (1.0 + c.rv_offset_max) * c.rv_radius_max;
    if (reach > c.image_size / 2.0 - 1.0)
        throw std::invalid_argument("SceneConfig: structures cannot fit: worst-case reach " +
                                    std::to_string(reach) + " exceeds half image size");
}

// Unit direction without trig: rejection-sample the unit disk, normalise.
void unit_direction(Rng& rng, double& ux, double& uy) {
    double x, y, n2;
    do {
        x = rng.uniform(-1.0, 1.0);
        y = rng.uniform(-1.0, 1.0);
        n2 = x * x + y * y;
    } while (n2 > 1.0 || n2 < 1e-6);
    const double inv = 1.0 / std::sqrt(n2);
    ux = x * inv;
    uy = y * inv;
}

Sample make_sample(const SceneConfig& c, int id, std::uint64_t seed) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(id)));
    const int n = c.image_size;
    const double half = n / 2.0;

    const double cx = half + rng.uniform(-c.center_jitter, c.center_jitter);
    const double cy = half + rng.uniform(-c.center_jitter, c.center_jitter);
    const double lv_r = rng.uniform(c.lv_radius_min, c.lv_radius_max);
    const double myo_r = lv_r + rng.uniform(c.myo_thickness_min, c.myo_thickness_max);
    const double rv_r = rng.uniform(c.rv_radius_min, c.rv_radius_max);
    const double u = rng.uniform(c.rv_offset_min, c.rv_offset_max);
    double ux, uy;
    unit_direction(rng, ux, uy);
    const double rv_dist = myo_r + u * rv_r;
    const double rvx = cx + ux * rv_dist;
    const double rvy = cy + uy * rv_dist;

    Sample s;
    s.id = id;
    s.label = LabelMap(static_cast<std::size_t>(n), static_cast<std::size_t>(n), kBg);
    s.image = Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(n), 1});

    const double lv2 = lv_r * lv_r, myo2 = myo_r * myo_r, rv2 = rv_r * rv_r;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const double dh = (px - cx) * (px - cx) + (py - cy) * (py - cy);
            const double dr = (px - rvx) * (px - rvx) + (py - rvy) * (py - rvy);
            int lab = kBg;
            if (dh <= lv2) lab = kLv;
            else if (dh <= myo2) lab = kMyo;
            else if (dr <= rv2) lab = kRv;  // dh > myo2 here: crescent, outside the ring
            s.label.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = lab;
        }
    }

    const double means[4] = {c.intensity_bg, c.intensity_rv, c.intensity_myo, c.intensity_lv};
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            s.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0) =
                means[s.label.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x))];

    // distractors: background blobs carrying the ring's intensity
    const double clear = myo_r + (1.0 + u) * rv_r;  // heart+crescent reach
    for (int bi = 0; bi < c.confuser_blobs; ++bi) {
        const double br = rng.uniform(2.0, 4.0);
        bool placed = false;
        double bx = 0, by = 0;
        for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
            bx = rng.uniform(br + 1.0, n - br - 1.0);
            by = rng.uniform(br + 1.0, n - br - 1.0);
            const double d = (bx - cx) * (bx - cx) + (by - cy) * (by - cy);
            const double min_d = clear + br + 1.0;
            placed = d > min_d * min_d;
        }
        if (!placed) continue;  // crowded config: deterministic skip
        const double br2 = br * br;
        const int x0 = std::max(0, static_cast<int>(bx - br) - 1);
        const int x1 = std::min(n - 1, static_cast<int>(bx + br) + 1);
        const int y0 = std::max(0, static_cast<int>(by - br) - 1);
        const int y1 = std::min(n - 1, static_cast<int>(by + br) + 1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                if ((px - bx) * (px - bx) + (py - by) * (py - by) <= br2)
                    s.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0) =
                        c.intensity_myo;
            }
        }
    }

    if (c.noise_sigma > 0.0) {
        for (double& v : s.image.values())
            v = std::clamp(v + rng.normal(0.0, c.noise_sigma), 0.0, 1.0);
    }
    return s;
}

}  // namespace

std::vector<Sample> generate(const SceneConfig& config, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("generate: count must be >= 1");
    check_feasible(config);
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int id = 0; id < count; ++id) out.push_back(make_sample(config, id, seed));
    return out;
}

Sample rotate_sample(const Sample& sample, double degrees) {
    const std::size_t h = sample.label.height(), w = sample.label.width();
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    const double rad = degrees * std::numbers::pi / 180.0;
    const double ca = std::cos(rad), sa = std::sin(rad);

    Sample out;
    out.id = sample.id;
    out.image = Tensor({h, w, 1});
    out.label = LabelMap(h, w, 0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            // inverse map: rotate output coords back into the source
            const double dx = static_cast<double>(x) - cx;
            const double dy = static_cast<double>(y) - cy;
            const double sx = cx + ca * dx + sa * dy;
            const double sy = cy - sa * dx + ca * dy;
            const double fx = std::floor(sx), fy = std::floor(sy);
            const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
            const double ax = sx - fx, ay = sy - fy;
            auto pix = [&](long yy, long xx) -> double {
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w))
                    return 0.0;
                return sample.image.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), 0);
            };
            out.image.at(y, x, 0) = (1 - ay) * ((1 - ax) * pix(iy, ix) + ax * pix(iy, ix + 1)) +
                                    ay * ((1 - ax) * pix(iy + 1, ix) + ax * pix(iy + 1, ix + 1));
            const long ny = std::lround(sy), nx = std::lround(sx);
            if (ny >= 0 && nx >= 0 && ny < static_cast<long>(h) && nx < static_cast<long>(w))
                out.label.at(y, x) = sample.label.at(static_cast<std::size_t>(ny),
                                                     static_cast<std::size_t>(nx));
        }
    }
    return out;
}

Sample translate_sample(const Sample& sample, int dx, int dy) {
    const std::size_t h = sample.label.height(), w = sample.label.width();
    Sample out;
    out.id = sample.id;
    out.image = Tensor({h, w, 1});
    out.label = LabelMap(h, w, 0);
    for (long y = 0; y < static_cast<long>(h); ++y) {
        for (long x = 0; x < static_cast<long>(w); ++x) {
            const long sy = y - dy, sx = x - dx;
            if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w))
                continue;
            out.image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), 0) =
                sample.image.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), 0);
            out.label.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) =
                sample.label.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
        }
    }
    return out;
}

Sample normalize_sample(const Sample& sample) {
    Sample out = sample;
    double mean = 0.0;
    for (double v : sample.image.values()) mean += v;
    mean /= static_cast<double>(sample.image.size());
    double var = 0.0;
    for (double v : sample.image.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(sample.image.size());
    const double istd = 1.0 / std::sqrt(std::max(var, 1e-24));
    for (double& v : out.image.values()) v = (v - mean) * istd;
    return out;
}

Sample augment(const Sample& sample, AugmentMode mode, std::uint64_t seed) {
    Rng rng(seed, "augment");
    if (mode == AugmentMode::rotate) {
        return rotate_sample(sample, rng.uniform(-30.0, 30.0));
    }
    const int dx = static_cast<int>(rng.next_below(11)) - 5;
    const int dy = static_cast<int>(rng.next_below(11)) - 5;
    return translate_sample(sample, dx, dy);
}

std::pair<std::vector<Sample>, std::vector<Sample>> split(const std::vector<Sample>& samples,
                                                          double train_fraction,
                                                          std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw std::invalid_argument("split: train_fraction must lie strictly between 0 and 1");
    const std::size_t n = samples.size();
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw std::invalid_argument("split: degenerate split (" + std::to_string(n_train) + "/" +
                                    std::to_string(n - n_train) + ")");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed, "split");
    rng.shuffle(order);
    std::pair<std::vector<Sample>, std::vector<Sample>> out;
    for (std::size_t i = 0; i < n; ++i)
        (i < n_train ? out.first : out.second).push_back(samples[order[i]]);
    return out;
}

void save_dataset(const std::string& dir, const std::vector<Sample>& train,
                  const std::vector<Sample>& val, int num_classes) {
    fs::create_directories(path_join(dir, "images"));
    fs::create_directories(path_join(dir, "labels"));
    std::string manifest;
    auto emit = [&](const std::vector<Sample>& xs, const char* which) {
        for (const Sample& s : xs) {
            char name[32];
            std::snprintf(name, sizeof name, "%05d", s.id);
            const std::string img = std::string("images/") + name + ".fsm";
            const std::string lab = std::string("labels/") + name + ".pgm";
            save_fsm1(path_join(dir, img), s.image);
            save_pgm(path_join(dir, lab), s.label, num_classes);
            manifest += std::to_string(s.id) + "," + img + "," + lab + "," + which + "\n";
        }
    };
    emit(train, "train");
    emit(val, "val");
    write_file_atomic(path_join(dir, "manifest.txt"), manifest);
}

Dataset load_dataset(const std::string& manifest_path) {
    const std::string text = read_file(manifest_path);
    const std::string dir = fs::path(manifest_path).parent_path().string();
    Dataset ds;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 4)
            throw std::runtime_error("dataset manifest: malformed line '" + line + "'");
        Sample s;
        s.id = static_cast<int>(std::stol(cols[0]));
        s.image = load_fsm1(path_join(dir, cols[1]));
        s.label = load_pgm(path_join(dir, cols[2]));
        if (s.image.rank() != 3 || s.image.dim(2) != 1 || s.image.dim(0) != s.label.height() ||
            s.image.dim(1) != s.label.width())
            throw std::runtime_error("dataset: sample " + cols[0] + " image/label extents disagree");
        if (cols[3] == "train") ds.train.push_back(std::move(s));
        else if (cols[3] == "val") ds.val.push_back(std::move(s));
        else throw std::runtime_error("dataset manifest: unknown split '" + cols[3] + "'");
    }
    if (ds.train.empty() && ds.val.empty())
        throw std::runtime_error("dataset manifest: no samples listed");
    return ds;
}

}  // namespace ff
