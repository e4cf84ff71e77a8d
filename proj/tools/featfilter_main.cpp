// Command-line front end: dataset generation, training, evaluation, entropy
// probing, verification checks, and run comparison. Every command echoes its
// resolved configuration into the output directory and writes atomically, so
// re-runs with identical settings are byte-identical.

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "featfilter/checks.hpp"
#include "featfilter/config.hpp"
#include "featfilter/entropy.hpp"
#include "featfilter/io.hpp"
#include "featfilter/metrics.hpp"
#include "featfilter/nets.hpp"
#include "featfilter/rng.hpp"
#include "featfilter/synthdata.hpp"
#include "featfilter/train.hpp"

namespace fs = std::filesystem;
using namespace ff;

namespace {

std::string out_root() {
    const char* env = std::getenv("FEATFILTER_OUT");
    return (env && *env) ? std::string(env) : std::string(".");
}

std::string resolve_out(const std::string& path) {
    if (path.empty()) return out_root();
    if (fs::path(path).is_absolute()) return path;
    return path_join(out_root(), path);
}

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& sets) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = config_from_text(read_file(config_path));
    for (const std::string& kv : sets) {
        const auto pairs = parse_key_values(kv);
        if (pairs.size() != 1)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        apply_config_key(cfg, pairs[0].first, pairs[0].second);
    }
    return cfg;
}

std::vector<std::string> seed_dirs(const std::string& run_dir) {
    std::vector<std::string> dirs;
    if (!fs::is_directory(run_dir))
        throw std::runtime_error("run directory not found: " + run_dir);
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (name.rfind("seed", 0) == 0) dirs.push_back(entry.path().string());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw std::runtime_error("no seed directories under " + run_dir);
    return dirs;
}

std::string summary_csv(const MultiSeedResult& result) {
    std::string csv = "metric,class_id,mean,std\n";
    for (const ClassSummary& c : result.per_class)
        csv += "dice," + std::to_string(c.class_id) + "," + fmt_double(c.dice.mean) + "," +
               fmt_double(c.dice.stddev) + "\n";
    csv += "dice,mean_seg," + fmt_double(result.mean_seg.dice.mean) + "," +
           fmt_double(result.mean_seg.dice.stddev) + "\n";
    for (const ClassSummary& c : result.per_class)
        csv += "hausdorff," + std::to_string(c.class_id) + "," + fmt_double(c.hausdorff.mean) +
               "," + fmt_double(c.hausdorff.stddev) + "\n";
    csv += "hausdorff,mean_seg," + fmt_double(result.mean_seg.hausdorff.mean) + "," +
           fmt_double(result.mean_seg.hausdorff.stddev) + "\n";
    csv += "best_val_loss,-," + fmt_double(result.best_val_loss.mean) + "," +
           fmt_double(result.best_val_loss.stddev) + "\n";
    return csv;
}

void require_labels_in_range(const std::vector<Sample>& samples, int num_classes) {
    for (const Sample& s : samples)
        for (int v : s.label.values())
            if (v < 0 || v >= num_classes)
                throw std::invalid_argument(
                    "dataset label class " + std::to_string(v) +
                    " outside the configured " + std::to_string(num_classes) + " classes");
}

// ---------------------------------------------------------------- commands

void cmd_gen(const RunConfig& cfg, const std::string& out_dir) {
    if (cfg.data_count < 1) throw std::invalid_argument("data.count must be >= 1");
    std::vector<Sample> samples = generate(cfg.data, cfg.data_count, cfg.data_seed);
    if (cfg.data_augment != "none") {
        const AugmentMode mode =
            cfg.data_augment == "rotate" ? AugmentMode::rotate : AugmentMode::translate;
        if (cfg.data_augment != "rotate" && cfg.data_augment != "translate")
            throw std::invalid_argument("data.augment: expected none|rotate|translate");
        for (Sample& s : samples)
            s = augment(s, mode, derive_seed(cfg.data_seed, static_cast<std::uint64_t>(s.id)));
    }
    if (cfg.data_normalize)
        for (Sample& s : samples) s = normalize_sample(s);
    auto [train_set, val_set] = split(samples, cfg.train_fraction, cfg.data_seed);
    save_dataset(out_dir, train_set, val_set, cfg.data.num_classes);
    write_file_atomic(path_join(out_dir, "config.txt"), config_to_text(cfg));
    std::printf("gen: %zu train + %zu val samples (%dx%d) -> %s\n", train_set.size(),
                val_set.size(), cfg.data.image_size, cfg.data.image_size, out_dir.c_str());
}

void cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& run_dir) {
    const Dataset data = load_dataset(path_join(data_dir, "manifest.txt"));
    require_labels_in_range(data.val, cfg.net.num_classes);
    require_labels_in_range(data.train, cfg.net.num_classes);

    fs::create_directories(run_dir);
    write_file_atomic(path_join(run_dir, "config.txt"), config_to_text(cfg));

    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < cfg.train_seeds; ++k)
        seeds.push_back(cfg.train.seed + static_cast<std::uint64_t>(k));

    const MultiSeedResult result = multi_seed(cfg.net, data.train, data.val, cfg.train, seeds, run_dir);
    write_file_atomic(path_join(run_dir, "summary.csv"), summary_csv(result));

    for (const SeedOutcome& run : result.runs)
        std::printf("train: seed %llu  best epoch %d  val loss %s  mean dice %s\n",
                    static_cast<unsigned long long>(run.seed), run.record.best_epoch,
                    fmt_double(run.best_val_loss).c_str(),
                    fmt_double(run.val_mean_seg.dice).c_str());
    std::printf("train: %zu run(s) -> %s (mean-seg dice %s +- %s)\n", result.runs.size(),
                run_dir.c_str(), fmt_double(result.mean_seg.dice.mean).c_str(),
                fmt_double(result.mean_seg.dice.stddev).c_str());
}

double best_val_loss_from_record(const std::string& record_path) {
    const std::string text = read_file(record_path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    double best = 0.0;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 3) throw std::runtime_error("malformed record line in " + record_path);
        const double v = std::strtod(cells[2].c_str(), nullptr);
        if (first || v < best) best = v;
        first = false;
    }
    if (first) throw std::runtime_error("empty record: " + record_path);
    return best;
}

void cmd_eval(const std::string& data_dir, const std::string& run_dir, const std::string& tag) {
    if (std::find(std::begin(kCheckpointTags), std::end(kCheckpointTags), tag) ==
        std::end(kCheckpointTags))
        throw std::invalid_argument("unknown checkpoint tag '" + tag + "'");
    const RunConfig cfg = config_from_text(read_file(path_join(run_dir, "config.txt")));
    const Dataset data = load_dataset(path_join(data_dir, "manifest.txt"));
    if (data.val.empty()) throw std::invalid_argument("dataset has no validation samples");
    require_labels_in_range(data.val, cfg.net.num_classes);

    MultiSeedResult result;
    for (const std::string& dir : seed_dirs(run_dir)) {
        LayerGraph graph = load_checkpoint(path_join(path_join(dir, "ckpt"), tag));
        if (graph.spec().num_classes != cfg.net.num_classes)
            throw std::invalid_argument("checkpoint class count disagrees with the run config");

        const int k = graph.spec().num_classes;
        std::vector<double> dice_acc(static_cast<std::size_t>(k), 0.0);
        std::vector<double> hd_acc(static_cast<std::size_t>(k), 0.0);
        double ms_dice = 0.0, ms_hd = 0.0;
        std::string csv = "sample_id,class_id,dice,hausdorff\n";
        for (const Sample& s : data.val) {
            const LabelMap pred = predict(graph, s.image);
            const auto rows = evaluate_classes(pred, s.label, k);
            for (const MetricsRow& r : rows) {
                csv += std::to_string(s.id) + "," + std::to_string(r.class_id) + "," +
                       fmt_double(r.dice) + "," + fmt_double(r.hausdorff) + "\n";
                dice_acc[static_cast<std::size_t>(r.class_id)] += r.dice;
                hd_acc[static_cast<std::size_t>(r.class_id)] += r.hausdorff;
            }
            const MeanSeg m = mean_seg(rows);
            ms_dice += m.dice;
            ms_hd += m.hausdorff;
        }
        const double inv = 1.0 / static_cast<double>(data.val.size());
        SeedOutcome outcome;
        outcome.seed = graph.spec().seed;
        for (int cid = 1; cid < k; ++cid) {
            const double dm = dice_acc[static_cast<std::size_t>(cid)] * inv;
            const double hm = hd_acc[static_cast<std::size_t>(cid)] * inv;
            csv += "summary," + std::to_string(cid) + "," + fmt_double(dm) + "," +
                   fmt_double(hm) + "\n";
            outcome.val_class_means.push_back(MetricsRow{cid, dm, hm});
        }
        outcome.val_mean_seg = MeanSeg{ms_dice * inv, ms_hd * inv};
        csv += "mean_seg,-," + fmt_double(outcome.val_mean_seg.dice) + "," +
               fmt_double(outcome.val_mean_seg.hausdorff) + "\n";
        outcome.best_val_loss = best_val_loss_from_record(path_join(dir, "record.csv"));
        write_file_atomic(path_join(dir, "metrics_" + tag + ".csv"), csv);
        result.runs.push_back(std::move(outcome));
        std::printf("eval: %s @ %s  mean dice %s  mean hd %s\n", dir.c_str(), tag.c_str(),
                    fmt_double(result.runs.back().val_mean_seg.dice).c_str(),
                    fmt_double(result.runs.back().val_mean_seg.hausdorff).c_str());
    }

    for (int cid = 1; cid < cfg.net.num_classes; ++cid) {
        std::vector<double> ds, hs;
        for (const SeedOutcome& r : result.runs) {
            ds.push_back(r.val_class_means[static_cast<std::size_t>(cid - 1)].dice);
            hs.push_back(r.val_class_means[static_cast<std::size_t>(cid - 1)].hausdorff);
        }
        result.per_class.push_back(ClassSummary{cid, summarize(ds), summarize(hs)});
    }
    std::vector<double> ds, hs, bl;
    for (const SeedOutcome& r : result.runs) {
        ds.push_back(r.val_mean_seg.dice);
        hs.push_back(r.val_mean_seg.hausdorff);
        bl.push_back(r.best_val_loss);
    }
    result.mean_seg = ClassSummary{-1, summarize(ds), summarize(hs)};
    result.best_val_loss = summarize(bl);
    if (tag == "Em")
        write_file_atomic(path_join(run_dir, "summary.csv"), summary_csv(result));
}

std::string pick_seed_dir(const std::string& run_dir, int seed_index) {
    if (fs::is_directory(path_join(run_dir, "ckpt"))) return run_dir;
    char name[32];
    std::snprintf(name, sizeof name, "seed%04d", seed_index);
    const std::string dir = path_join(run_dir, name);
    if (fs::is_directory(path_join(dir, "ckpt"))) return dir;
    throw std::runtime_error("no ckpt/ under " + run_dir + " or " + dir);
}

void cmd_probe(const std::string& data_dir, const std::string& run_dir, int seed_index,
               const std::vector<std::string>& tags) {
    const std::string dir = pick_seed_dir(run_dir, seed_index);
    for (const std::string& tag : tags)
        if (std::find(std::begin(kCheckpointTags), std::end(kCheckpointTags), std::string(tag)) ==
            std::end(kCheckpointTags))
            throw std::invalid_argument("unknown checkpoint tag '" + tag + "'");

    const Dataset data = load_dataset(path_join(data_dir, "manifest.txt"));
    if (data.val.empty()) throw std::invalid_argument("dataset has no validation samples");

    std::string entropy_csv = "layer_index,tag,Hf,Hd,delta\n";
    for (const std::string& tag : tags) {
        LayerGraph graph = load_checkpoint(path_join(path_join(dir, "ckpt"), tag));
        if (!graph.spec().with_cff)
            throw std::invalid_argument(
                "checkpoint was trained without feature filters; nothing to probe");
        const std::vector<int> taps = graph.fbc_node_ids();
        std::vector<double> hf(taps.size(), 0.0), hd(taps.size(), 0.0);
        bool first_sample = true;
        std::string signals_csv = "layer_index,channel,f_value,d_value\n";
        for (const Sample& s : data.val) {
            const ForwardTrace trace = run_forward(graph, s.image, Mode::eval);
            for (std::size_t i = 0; i < taps.size(); ++i) {
                const NodeTrace& node = trace.nodes[static_cast<std::size_t>(taps[i])];
                const EntropyPair pair = layer_entropy_pair(node.f, node.out);
                hf[i] += pair.hf;
                hd[i] += pair.hd;
                if (first_sample) {
                    const PixelSignal sig = extract_pixel_signal(node.f, node.out,
                                                                 node.f.dim(0) / 2,
                                                                 node.f.dim(1) / 2);
                    for (std::size_t c = 0; c < sig.f.size(); ++c)
                        signals_csv += std::to_string(i) + "," + std::to_string(c) + "," +
                                       fmt_double(sig.f[c]) + "," + fmt_double(sig.d[c]) + "\n";
                }
            }
            first_sample = false;
        }
        const double inv = 1.0 / static_cast<double>(data.val.size());
        double mean_delta = 0.0;
        for (std::size_t i = 0; i < taps.size(); ++i) {
            const double mf = hf[i] * inv, md = hd[i] * inv;
            entropy_csv += std::to_string(i) + "," + tag + "," + fmt_double(mf) + "," +
                           fmt_double(md) + "," + fmt_double(md - mf) + "\n";
            mean_delta += md - mf;
        }
        mean_delta /= static_cast<double>(taps.size());
        write_file_atomic(path_join(dir, "signals_" + tag + ".csv"), signals_csv);
        std::printf("probe: %s @ %s  layers %zu  mean delta-H %s\n", dir.c_str(), tag.c_str(),
                    taps.size(), fmt_double(mean_delta).c_str());
    }
    write_file_atomic(path_join(dir, "entropy.csv"), entropy_csv);
}

int cmd_check(const std::string& suite, std::uint64_t seed) {
    const CheckList results = run_check_suite(suite, seed);
    for (const CheckResult& r : results)
        std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    const bool ok = all_passed(results);
    std::printf("check %s: %zu/%zu passed\n", suite.c_str(),
                static_cast<std::size_t>(std::count_if(results.begin(), results.end(),
                                                       [](const CheckResult& r) { return r.pass; })),
                results.size());
    return ok ? 0 : 1;
}

struct SummaryTable {
    std::vector<std::array<std::string, 2>> order;           // (metric, class_id)
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> rows;
};

SummaryTable read_summary(const std::string& run_dir) {
    SummaryTable table;
    const std::string text = read_file(path_join(run_dir, "summary.csv"));
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4)
            throw std::runtime_error("malformed summary line in " + run_dir + ": " + line);
        table.order.push_back({cells[0], cells[1]});
        table.rows[{cells[0], cells[1]}] = {std::strtod(cells[2].c_str(), nullptr),
                                            std::strtod(cells[3].c_str(), nullptr)};
    }
    return table;
}

void cmd_compare(const std::string& run_a, const std::string& run_b, const std::string& out_path) {
    const SummaryTable a = read_summary(run_a);
    const SummaryTable b = read_summary(run_b);
    if (a.order.size() != b.order.size())
        throw std::invalid_argument("runs report different metric sets");
    for (const auto& key : a.order)
        if (b.rows.find({key[0], key[1]}) == b.rows.end())
            throw std::invalid_argument("run B lacks metric " + key[0] + "/" + key[1]);

    const RunConfig cfg_a = config_from_text(read_file(path_join(run_a, "config.txt")));
    const RunConfig cfg_b = config_from_text(read_file(path_join(run_b, "config.txt")));
    const long long params_a = build(cfg_a.net).count_params();
    const long long params_b = build(cfg_b.net).count_params();

    std::string csv = "metric,class_id,a_mean,a_std,b_mean,b_std,delta\n";
    for (const auto& key : a.order) {
        const auto& va = a.rows.at({key[0], key[1]});
        const auto& vb = b.rows.at({key[0], key[1]});
        csv += key[0] + "," + key[1] + "," + fmt_double(va.first) + "," + fmt_double(va.second) +
               "," + fmt_double(vb.first) + "," + fmt_double(vb.second) + "," +
               fmt_double(vb.first - va.first) + "\n";
    }
    csv += "params,-," + std::to_string(params_a) + ",0," + std::to_string(params_b) + ",0," +
           std::to_string(params_b - params_a) + "\n";

    std::fputs(csv.c_str(), stdout);
    if (!out_path.empty()) write_file_atomic(out_path, csv);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature-filter segmentation workbench"};
    app.require_subcommand(1);
    int exit_code = 0;

    std::string gen_config, gen_out = "data";
    std::vector<std::string> gen_sets;
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("--config", gen_config, "configuration file");
    gen->add_option("--set", gen_sets, "override, key=value (applied last)");
    gen->add_option("--out", gen_out, "output directory (under FEATFILTER_OUT)");
    gen->callback([&] { cmd_gen(resolve_config(gen_config, gen_sets), resolve_out(gen_out)); });

    std::string tr_config, tr_data, tr_out = "run", tr_net, tr_cff;
    std::vector<std::string> tr_sets;
    auto* train = app.add_subcommand("train", "train one or more seeded runs");
    train->add_option("--config", tr_config, "configuration file");
    train->add_option("--set", tr_sets, "override, key=value (applied last)");
    train->add_option("--data", tr_data, "dataset directory (from gen)")->required();
    train->add_option("--out", tr_out, "run directory (under FEATFILTER_OUT)");
    train->add_option("--net", tr_net, "net.family shorthand: fcn|unet");
    train->add_option("--cff", tr_cff, "net.with_cff shorthand: on|off");
    train->callback([&] {
        RunConfig cfg;
        {
            std::vector<std::string> sets;
            if (!tr_net.empty()) sets.push_back("net.family=" + tr_net);
            if (!tr_cff.empty()) sets.push_back("net.with_cff=" + tr_cff);
            sets.insert(sets.end(), tr_sets.begin(), tr_sets.end());
            cfg = resolve_config(tr_config, sets);
        }
        cmd_train(cfg, tr_data, resolve_out(tr_out));
    });

    std::string ev_data, ev_run, ev_tag = "Em";
    auto* eval = app.add_subcommand("eval", "evaluate checkpoints on the validation split");
    eval->add_option("--data", ev_data, "dataset directory")->required();
    eval->add_option("--run", ev_run, "run directory (from train)")->required();
    eval->add_option("--tag", ev_tag, "checkpoint tag (Es|Esm|Em|Enm|En)");
    eval->callback([&] { cmd_eval(ev_data, resolve_out(ev_run), ev_tag); });

    std::string pr_data, pr_run, pr_tags = "Es,Esm,Em,Enm,En";
    int pr_seed_index = 0;
    auto* probe = app.add_subcommand("probe", "entropy-probe filtered checkpoints");
    probe->add_option("--data", pr_data, "dataset directory")->required();
    probe->add_option("--run", pr_run, "run or seed directory")->required();
    probe->add_option("--seed-index", pr_seed_index, "seed directory index when --run is a run");
    probe->add_option("--tags", pr_tags, "comma-separated checkpoint tags");
    probe->callback([&] {
        std::vector<std::string> tags;
        std::istringstream in(pr_tags);
        std::string tag;
        while (std::getline(in, tag, ','))
            if (!tag.empty()) tags.push_back(tag);
        if (tags.empty()) throw std::invalid_argument("--tags must name at least one tag");
        cmd_probe(pr_data, resolve_out(pr_run), pr_seed_index, tags);
    });

    std::string ck_suite = "all";
    std::uint64_t ck_seed = 42;
    auto* check = app.add_subcommand("check", "run verification suites");
    check->add_option("suite", ck_suite, "grad|entropy|theorem1|linearity|metrics|all");
    check->add_option("--seed", ck_seed, "suite seed");
    check->callback([&] { exit_code = cmd_check(ck_suite, ck_seed); });

    std::string cp_a, cp_b, cp_out;
    auto* compare = app.add_subcommand("compare", "compare two evaluated runs");
    compare->add_option("run_a", cp_a, "baseline run directory")->required();
    compare->add_option("run_b", cp_b, "candidate run directory")->required();
    compare->add_option("--out", cp_out, "also write the comparison CSV here");
    compare->callback(
        [&] { cmd_compare(resolve_out(cp_a), resolve_out(cp_b), cp_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::logic_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return exit_code;
}
