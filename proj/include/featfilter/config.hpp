#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "featfilter/nets.hpp"
#include "featfilter/synthdata.hpp"
#include "featfilter/train.hpp"

namespace ff {

// Fully resolved run settings. Every field is addressable from a config file
// or a --set override by dotted key; unknown keys are rejected.
struct RunConfig {
    SceneConfig data;
    int data_count = 250;
    double train_fraction = 0.8;
    std::uint64_t data_seed = 1234;
    std::string data_augment = "none";  // none | rotate | translate
    bool data_normalize = false;
    NetworkSpec net;
    TrainConfig train;
    int train_seeds = 1;  // runs use seeds train.seed, train.seed+1, ...
};

void apply_config_key(RunConfig& config, const std::string& key, const std::string& value);

// `key = value` lines; '#' starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

RunConfig config_from_text(const std::string& text);

// Canonical echo: every key, sorted, one per line. Parsing the echo yields
// the same config back.
std::string config_to_text(const RunConfig& config);

}  // namespace ff
