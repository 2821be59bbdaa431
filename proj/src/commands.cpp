#include "mp2rec/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mp2rec/eval.hpp"
#include "mp2rec/model_io.hpp"
#include "mp2rec/reference.hpp"
#include "mp2rec/trainer.hpp"

namespace mp2rec {

namespace {

namespace fs = std::filesystem;

std::string seed_tag(std::uint64_t seed) { return "_s" + std::to_string(seed); }

void ensure_out_dir(const RunConfig& config) {
    if (!config.out.empty()) fs::create_directories(config.out);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

void write_epoch_line(std::ostream& log, std::size_t epoch, const LossBreakdown& loss) {
    log << epoch << ',' << format_metric_value(loss.pointwise) << ','
        << format_metric_value(loss.pairwise) << ',' << format_metric_value(loss.regularization)
        << ',' << format_metric_value(loss.total) << '\n';
}

ExecPolicy policy_of(const RunConfig& config) { return ExecPolicy{config.threads}; }

// Mean metric values over per-seed reports (same ks/metric layout).
std::vector<MetricValue> mean_metrics(const std::vector<MetricsReport>& reports) {
    std::vector<MetricValue> means = reports.front().values;
    for (MetricValue& v : means) v.value = 0.0;
    for (const MetricsReport& r : reports) {
        for (std::size_t i = 0; i < means.size(); ++i) means[i].value += r.values[i].value;
    }
    for (MetricValue& v : means) v.value /= static_cast<double>(reports.size());
    return means;
}

}  // namespace

std::string checkpoint_path(const RunConfig& config, ModelKind kind, std::uint64_t seed) {
    return config.out + "/" + kind_name(kind) + seed_tag(seed) + ".ckpt";
}

std::string train_log_path(const RunConfig& config, ModelKind kind, std::uint64_t seed) {
    return config.out + "/train_" + kind_name(kind) + seed_tag(seed) + ".log";
}

std::string manifest_path(const RunConfig& config, std::uint64_t seed) {
    return config.out + "/split" + seed_tag(seed) + ".tsv";
}

std::string metrics_csv_path(const RunConfig& config, const std::string& model,
                             std::uint64_t seed) {
    return config.out + "/metrics_" + model + seed_tag(seed) + ".csv";
}

const std::vector<double>& default_alpha_grid() {
    static const std::vector<double> grid = {0.0, 0.1, 0.5, 0.9, 0.99, 0.999, 0.9999, 1.0};
    return grid;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
    config.hyper.validate(config.model);
    ensure_out_dir(config);

    const std::uint64_t seed = config.hyper.seed;
    PreparedData data = prepare_data(config, seed);
    write_split_manifest(manifest_path(config, seed), data.split);
    write_id_map(config.out + "/users.map", data.dataset.user_ids);
    write_id_map(config.out + "/items.map", data.dataset.item_ids);
    {
        std::ofstream cfg(config.out + "/run_" + kind_name(config.model) + seed_tag(seed) + ".cfg");
        cfg << config_to_text(config);
    }

    std::ofstream log(train_log_path(config, config.model, seed), std::ios::app);
    if (!log) throw ParseError("train: cannot open log file in " + config.out);
    log << "# train model=" << kind_name(config.model) << " seed=" << seed << ' '
        << hyper_snapshot(config.hyper) << '\n';

    out << "train " << kind_name(config.model) << " seed=" << seed
        << " users=" << data.split.n_users << " items=" << data.split.n_items
        << " pairs=" << data.triplets.size() << " test_users=" << data.split.test.size() << '\n';

    TrainResult result = train_on_triplets(
        config.model, config.hyper, data.triplets, data.dataset.n_users(), data.dataset.n_items(),
        data.dataset.remap_hash(), policy_of(config), [&](std::size_t epoch, const LossBreakdown& loss) {
            write_epoch_line(log, epoch, loss);
            out << "epoch " << epoch << " total=" << format_metric_value(loss.total) << '\n';
        });
    log.flush();

    const std::string ckpt = checkpoint_path(config, config.model, seed);
    save_checkpoint(ckpt, result.model);
    out << "checkpoint " << ckpt << '\n';
    return 0;
}

int cmd_eval(const RunConfig& config, const std::string& checkpoint, const std::string& manifest,
             std::ostream& out) {
    const std::string ckpt_path =
        checkpoint.empty() ? checkpoint_path(config, config.model, config.hyper.seed) : checkpoint;
    const std::string man_path =
        manifest.empty() ? manifest_path(config, config.hyper.seed) : manifest;

    ModelState model = load_checkpoint(ckpt_path);
    DatasetSplit split = read_split_manifest(man_path);
    if (model.remap_hash != 0 && split.remap_hash != 0 && model.remap_hash != split.remap_hash) {
        throw std::invalid_argument("eval: checkpoint and manifest come from different id remaps");
    }
    if (split.n_users != model.n_users || split.n_items != model.n_items) {
        throw std::invalid_argument("eval: id-space sizes disagree between checkpoint and manifest");
    }

    EvalOptions opts;
    opts.ks = config.ks;
    opts.policy = policy_of(config);
    const MetricsReport report = evaluate(model, split.test, opts);

    ensure_out_dir(config);
    const std::string csv_path = metrics_csv_path(config, report.model, report.seed);
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw ParseError("eval: cannot open " + csv_path + " for writing");
    write_metrics_csv(csv, report);
    csv.flush();

    out << metrics_table(report);
    out << "metrics " << csv_path << '\n';
    return 0;
}

int cmd_grid(const RunConfig& config, std::ostream& out) {
    ensure_out_dir(config);
    const std::vector<double>& alphas = config.alphas.empty() ? default_alpha_grid() : config.alphas;
    const std::vector<double> betas =
        config.betas.empty() ? std::vector<double>{config.hyper.beta} : config.betas;

    PreparedData data = prepare_data(config, config.hyper.seed);
    out << "grid model=" << kind_name(config.model) << " points=" << alphas.size() * betas.size()
        << " seeds=" << config.seeds.size() << '\n';

    std::ostringstream rows;
    rows << "alpha,beta,metric,k,value\n";
    for (double alpha : alphas) {
        for (double beta : betas) {
            Hyperparams hyper = config.hyper;
            hyper.alpha = alpha;
            hyper.beta = beta;
            // A sweep visits the degenerate endpoint on purpose.
            hyper.allow_degenerate_alpha = true;
            try {
                std::vector<MetricsReport> reports;
                for (std::uint64_t seed : config.seeds) {
                    hyper.seed = seed;
                    TrainResult result = train_on_triplets(
                        config.model, hyper, data.triplets, data.dataset.n_users(),
                        data.dataset.n_items(), data.dataset.remap_hash(), policy_of(config));
                    EvalOptions opts;
                    opts.ks = config.ks;
                    opts.policy = policy_of(config);
                    reports.push_back(evaluate(result.model, data.split.test, opts));
                }
                for (const MetricValue& v : mean_metrics(reports)) {
                    rows << num(alpha) << ',' << num(beta) << ',' << v.metric << ',' << v.k << ','
                         << format_metric_value(v.value) << '\n';
                }
                out << "point alpha=" << num(alpha) << " beta=" << num(beta) << " done\n";
            } catch (const std::exception& e) {
                rows << num(alpha) << ',' << num(beta) << ",status,0,failed:" << sanitize(e.what())
                     << '\n';
                out << "point alpha=" << num(alpha) << " beta=" << num(beta) << " failed\n";
            }
        }
    }

    const std::string path = config.out + "/grid.csv";
    std::ofstream csv(path, std::ios::trunc);
    if (!csv) throw ParseError("grid: cannot open " + path + " for writing");
    csv << rows.str();
    csv.flush();
    out << "grid " << path << '\n';
    return 0;
}

int cmd_reproduce(const RunConfig& config, std::ostream& out) {
    ensure_out_dir(config);
    std::vector<ModelKind> models = config.models;
    if (models.empty()) {
        models.assign(std::begin(kAllModelKinds), std::end(kAllModelKinds));
    }
    const ConstantsFile constants = locate_constants(config.constants);
    PreparedData data = prepare_data(config, config.hyper.seed);
    out << "reproduce models=" << models.size() << " seeds=" << config.seeds.size()
        << " reference=" << config.reference << '\n';

    std::ostringstream rows;
    rows << "model";
    for (std::size_t k : config.ks) rows << ",hr" << k;
    for (std::size_t k : config.ks) rows << ",ndcg" << k;
    for (std::size_t k : config.ks) rows << ",ref_hr" << k;
    for (std::size_t k : config.ks) rows << ",ref_ndcg" << k;
    rows << ",seeds,hyperparams,status\n";

    for (ModelKind kind : models) {
        Hyperparams hyper = apply_tuned_defaults(kind, constants);
        std::string status = "ok";
        std::vector<MetricValue> means;
        try {
            std::vector<MetricsReport> reports;
            for (std::uint64_t seed : config.seeds) {
                hyper.seed = seed;
                TrainResult result = train_on_triplets(
                    kind, hyper, data.triplets, data.dataset.n_users(), data.dataset.n_items(),
                    data.dataset.remap_hash(), policy_of(config));
                EvalOptions opts;
                opts.ks = config.ks;
                opts.policy = policy_of(config);
                reports.push_back(evaluate(result.model, data.split.test, opts));
            }
            means = mean_metrics(reports);
            out << "model " << kind_name(kind) << " done\n";
        } catch (const std::exception& e) {
            status = "failed:" + sanitize(e.what());
            out << "model " << kind_name(kind) << " failed\n";
        }

        rows << kind_name(kind);
        auto cell = [&](const std::string& metric, std::size_t k) {
            for (const MetricValue& v : means) {
                if (v.metric == metric && v.k == k) return format_metric_value(v.value);
            }
            return std::string();
        };
        for (std::size_t k : config.ks) rows << ',' << cell("hr", k);
        for (std::size_t k : config.ks) rows << ',' << cell("ndcg", k);
        for (std::size_t k : config.ks) {
            auto ref = constants.table.lookup(config.reference, kind_name(kind), "hr", k);
            rows << ',' << (ref ? format_metric_value(*ref) : std::string());
        }
        for (std::size_t k : config.ks) {
            auto ref = constants.table.lookup(config.reference, kind_name(kind), "ndcg", k);
            rows << ',' << (ref ? format_metric_value(*ref) : std::string());
        }
        rows << ',' << config.seeds.size() << ',' << sanitize(hyper_snapshot(hyper)) << ','
             << status << '\n';
    }

    const std::string path = config.out + "/reproduce.csv";
    std::ofstream csv(path, std::ios::trunc);
    if (!csv) throw ParseError("reproduce: cannot open " + path + " for writing");
    csv << rows.str();
    csv.flush();
    out << rows.str();
    out << "reproduce " << path << '\n';
    return 0;
}

int cmd_synth(const std::string& path, const SyntheticSpec& spec, std::ostream& out) {
    if (path.empty()) throw std::invalid_argument("synth: output path required");
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_synthetic_ratings(path, spec);
    out << "synthetic ratings " << path << '\n';
    return 0;
}

}  // namespace mp2rec
