#include "featfilter/config.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "featfilter/io.hpp"

namespace ff {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double parse_real(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": expected an unsigned integer, got '" + v + "'");
    }
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw std::invalid_argument(key + ": expected a boolean, got '" + v + "'");
}

}  // namespace

void apply_config_key(RunConfig& c, const std::string& key, const std::string& value) {
    if (key.rfind("net.", 0) == 0) {
        apply_net_key(c.net, key, value);
        return;
    }
    if (key == "data.image_size") c.data.image_size = static_cast<int>(parse_int(value, key));
    else if (key == "data.num_classes") c.data.num_classes = static_cast<int>(parse_int(value, key));
    else if (key == "data.lv_radius_min") c.data.lv_radius_min = parse_real(value, key);
    else if (key == "data.lv_radius_max") c.data.lv_radius_max = parse_real(value, key);
    else if (key == "data.myo_thickness_min") c.data.myo_thickness_min = parse_real(value, key);
    else if (key == "data.myo_thickness_max") c.data.myo_thickness_max = parse_real(value, key);
    else if (key == "data.center_jitter") c.data.center_jitter = parse_real(value, key);
    else if (key == "data.rv_radius_min") c.data.rv_radius_min = parse_real(value, key);
    else if (key == "data.rv_radius_max") c.data.rv_radius_max = parse_real(value, key);
    else if (key == "data.rv_offset_min") c.data.rv_offset_min = parse_real(value, key);
    else if (key == "data.rv_offset_max") c.data.rv_offset_max = parse_real(value, key);
    else if (key == "data.intensity_bg") c.data.intensity_bg = parse_real(value, key);
    else if (key == "data.intensity_rv") c.data.intensity_rv = parse_real(value, key);
    else if (key == "data.intensity_myo") c.data.intensity_myo = parse_real(value, key);
    else if (key == "data.intensity_lv") c.data.intensity_lv = parse_real(value, key);
    else if (key == "data.noise_sigma") c.data.noise_sigma = parse_real(value, key);
    else if (key == "data.confuser_blobs") c.data.confuser_blobs = static_cast<int>(parse_int(value, key));
    else if (key == "data.count") {
        const long long n = parse_int(value, key);
        if (n < 1) throw std::invalid_argument("data.count: must be >= 1");
        c.data_count = static_cast<int>(n);
    } else if (key == "data.train_fraction") c.train_fraction = parse_real(value, key);
    else if (key == "data.seed") c.data_seed = parse_u64(value, key);
    else if (key == "data.augment") {
        if (value != "none" && value != "rotate" && value != "translate")
            throw std::invalid_argument("data.augment: expected none|rotate|translate");
        c.data_augment = value;
    } else if (key == "data.normalize") c.data_normalize = parse_bool(value, key);
    else if (key == "train.epochs") {
        const long long e = parse_int(value, key);
        if (e < 1 || e > 1000) throw std::invalid_argument("train.epochs: out of range [1,1000]");
        c.train.epochs = static_cast<int>(e);
    } else if (key == "train.learning_rate") {
        c.train.learning_rate = parse_real(value, key);
        if (c.train.learning_rate < 0.0)
            throw std::invalid_argument("train.learning_rate: must be >= 0");
    } else if (key == "train.batch_size") {
        const long long b = parse_int(value, key);
        if (b < 1) throw std::invalid_argument("train.batch_size: must be >= 1");
        c.train.batch_size = static_cast<int>(b);
    } else if (key == "train.beta1") c.train.beta1 = parse_real(value, key);
    else if (key == "train.beta2") c.train.beta2 = parse_real(value, key);
    else if (key == "train.epsilon") c.train.epsilon = parse_real(value, key);
    else if (key == "train.seed") c.train.seed = parse_u64(value, key);
    else if (key == "train.seeds") {
        const long long n = parse_int(value, key);
        if (n < 1 || n > 64) throw std::invalid_argument("train.seeds: out of range [1,64]");
        c.train_seeds = static_cast<int>(n);
    } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key or value");
        out.emplace_back(key, value);
    }
    return out;
}

RunConfig config_from_text(const std::string& text) {
    RunConfig c;
    for (const auto& [k, v] : parse_key_values(text)) apply_config_key(c, k, v);
    return c;
}

std::string config_to_text(const RunConfig& c) {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"data.image_size", std::to_string(c.data.image_size)},
        {"data.num_classes", std::to_string(c.data.num_classes)},
        {"data.lv_radius_min", fmt_double(c.data.lv_radius_min)},
        {"data.lv_radius_max", fmt_double(c.data.lv_radius_max)},
        {"data.myo_thickness_min", fmt_double(c.data.myo_thickness_min)},
        {"data.myo_thickness_max", fmt_double(c.data.myo_thickness_max)},
        {"data.center_jitter", fmt_double(c.data.center_jitter)},
        {"data.rv_radius_min", fmt_double(c.data.rv_radius_min)},
        {"data.rv_radius_max", fmt_double(c.data.rv_radius_max)},
        {"data.rv_offset_min", fmt_double(c.data.rv_offset_min)},
        {"data.rv_offset_max", fmt_double(c.data.rv_offset_max)},
        {"data.intensity_bg", fmt_double(c.data.intensity_bg)},
        {"data.intensity_rv", fmt_double(c.data.intensity_rv)},
        {"data.intensity_myo", fmt_double(c.data.intensity_myo)},
        {"data.intensity_lv", fmt_double(c.data.intensity_lv)},
        {"data.noise_sigma", fmt_double(c.data.noise_sigma)},
        {"data.confuser_blobs", std::to_string(c.data.confuser_blobs)},
        {"data.count", std::to_string(c.data_count)},
        {"data.train_fraction", fmt_double(c.train_fraction)},
        {"data.seed", std::to_string(c.data_seed)},
        {"data.augment", c.data_augment},
        {"data.normalize", c.data_normalize ? "true" : "false"},
        {"train.epochs", std::to_string(c.train.epochs)},
        {"train.learning_rate", fmt_double(c.train.learning_rate)},
        {"train.batch_size", std::to_string(c.train.batch_size)},
        {"train.beta1", fmt_double(c.train.beta1)},
        {"train.beta2", fmt_double(c.train.beta2)},
        {"train.epsilon", fmt_double(c.train.epsilon)},
        {"train.seed", std::to_string(c.train.seed)},
        {"train.seeds", std::to_string(c.train_seeds)},
    };
    for (const auto& nk : net_key_values(c.net)) kv.push_back(nk);
    std::sort(kv.begin(), kv.end());
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

}  // namespace ff
