#include "mp2rec/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "kv_text.hpp"

namespace mp2rec {

namespace {

using kv::trim;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

[[noreturn]] void bad_value(const std::string& where, const std::string& key,
                            const std::string& value, const std::string& expect) {
    throw ParseError(where + ": key '" + key + "': cannot parse '" + value + "' as " + expect);
}

double parse_double(const std::string& where, const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) bad_value(where, key, value, "a number");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(where, key, value, "a number");
    }
}

std::uint64_t parse_u64(const std::string& where, const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(value, &used);
        if (used != value.size() || value[0] == '-') bad_value(where, key, value, "an unsigned integer");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(where, key, value, "an unsigned integer");
    }
}

bool parse_bool(const std::string& where, const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(where, key, value, "a boolean (true/false)");
}

// "64x32" or "none"
std::vector<std::size_t> parse_mlp(const std::string& where, const std::string& key,
                                   const std::string& value) {
    if (value == "none") return {};
    std::vector<std::size_t> widths;
    std::istringstream in(value);
    std::string tok;
    while (std::getline(in, tok, 'x')) {
        tok = trim(tok);
        if (tok.empty()) bad_value(where, key, value, "widths like 64x32, or none");
        widths.push_back(static_cast<std::size_t>(parse_u64(where, key, tok)));
    }
    if (widths.empty()) bad_value(where, key, value, "widths like 64x32, or none");
    return widths;
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value,
                        const std::string& where) {
    if (key == "dataset") {
        config.dataset = value;
    } else if (key == "format") {
        auto f = format_from_name(value);
        if (!f) bad_value(where, key, value, "ml100k, ml1m, or csv");
        config.format = *f;
    } else if (key == "model") {
        auto k = kind_from_name(value);
        if (!k) bad_value(where, key, value, "neumf, bpr, ranknet, appl, t3, or mp2");
        config.model = *k;
    } else if (key == "out") {
        config.out = value;
    } else if (key == "alpha") {
        config.hyper.alpha = parse_double(where, key, value);
    } else if (key == "beta") {
        config.hyper.beta = parse_double(where, key, value);
    } else if (key == "lambda") {
        config.hyper.lambda = parse_double(where, key, value);
    } else if (key == "lr") {
        config.hyper.learning_rate = parse_double(where, key, value);
    } else if (key == "dim") {
        config.hyper.embedding_dim = static_cast<std::size_t>(parse_u64(where, key, value));
    } else if (key == "mlp") {
        config.hyper.mlp_hidden = parse_mlp(where, key, value);
    } else if (key == "batch") {
        config.hyper.batch_size = static_cast<std::size_t>(parse_u64(where, key, value));
    } else if (key == "epochs") {
        config.hyper.epochs = static_cast<std::size_t>(parse_u64(where, key, value));
    } else if (key == "seed") {
        config.hyper.seed = parse_u64(where, key, value);
    } else if (key == "weighting") {
        auto m = weighting_mode_from_name(value);
        if (!m) bad_value(where, key, value, "joint, separate, or uniform");
        config.hyper.weighting_mode = *m;
    } else if (key == "allow_degenerate_alpha") {
        config.hyper.allow_degenerate_alpha = parse_bool(where, key, value);
    } else if (key == "optimizer") {
        if (value == "adam") config.hyper.optimizer = OptKind::Adam;
        else if (value == "sgd") config.hyper.optimizer = OptKind::Sgd;
        else bad_value(where, key, value, "adam or sgd");
    } else if (key == "activation") {
        if (value == "relu") config.hyper.activation = Activation::Relu;
        else if (value == "sigmoid") config.hyper.activation = Activation::Sigmoid;
        else if (value == "tanh") config.hyper.activation = Activation::Tanh;
        else bad_value(where, key, value, "relu, sigmoid, or tanh");
    } else if (key == "threshold") {
        config.threshold = parse_double(where, key, value);
    } else if (key == "pairs_per_user") {
        config.pairs_per_user = static_cast<std::size_t>(parse_u64(where, key, value));
    } else if (key == "negatives") {
        config.negatives_per_user = static_cast<std::size_t>(parse_u64(where, key, value));
    } else if (key == "ks") {
        config.ks.clear();
        for (const std::string& tok : split_list(value)) {
            config.ks.push_back(static_cast<std::size_t>(parse_u64(where, key, tok)));
        }
        if (config.ks.empty()) bad_value(where, key, value, "a list of cutoffs");
    } else if (key == "seeds") {
        config.seeds.clear();
        for (const std::string& tok : split_list(value)) {
            config.seeds.push_back(parse_u64(where, key, tok));
        }
        if (config.seeds.empty()) bad_value(where, key, value, "a list of seeds");
    } else if (key == "threads") {
        config.threads = static_cast<int>(parse_u64(where, key, value));
    } else if (key == "alphas") {
        config.alphas.clear();
        for (const std::string& tok : split_list(value)) {
            config.alphas.push_back(parse_double(where, key, tok));
        }
    } else if (key == "betas") {
        config.betas.clear();
        for (const std::string& tok : split_list(value)) {
            config.betas.push_back(parse_double(where, key, tok));
        }
    } else if (key == "models") {
        config.models.clear();
        for (const std::string& tok : split_list(value)) {
            auto k = kind_from_name(tok);
            if (!k) bad_value(where, key, tok, "a model kind");
            config.models.push_back(*k);
        }
    } else if (key == "reference") {
        config.reference = value;
    } else if (key == "constants") {
        config.constants = value;
    } else {
        throw ParseError(where + ": unknown key '" + key + "'");
    }
}

RunConfig parse_config(std::istream& in, const std::string& name) {
    RunConfig config;
    std::set<std::string> seen;
    kv::for_each_entry(in, name, [&](const std::string& key, const std::string& value,
                                     const std::string& where) {
        if (!seen.insert(key).second) {
            throw ParseError(where + ": duplicate key '" + key + "'");
        }
        apply_config_entry(config, key, value, where);
    });
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open config");
    return parse_config(in, path);
}

std::string config_to_text(const RunConfig& c) {
    std::ostringstream out;
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };
    out << "dataset = " << c.dataset << "\n";
    out << "format = " << format_name(c.format) << "\n";
    out << "model = " << kind_name(c.model) << "\n";
    out << "out = " << c.out << "\n";
    out << "alpha = " << num(c.hyper.alpha) << "\n";
    out << "beta = " << num(c.hyper.beta) << "\n";
    out << "lambda = " << num(c.hyper.lambda) << "\n";
    out << "lr = " << num(c.hyper.learning_rate) << "\n";
    out << "dim = " << c.hyper.embedding_dim << "\n";
    std::string mlp;
    for (std::size_t i = 0; i < c.hyper.mlp_hidden.size(); ++i) {
        if (i) mlp += 'x';
        mlp += std::to_string(c.hyper.mlp_hidden[i]);
    }
    out << "mlp = " << (mlp.empty() ? "none" : mlp) << "\n";
    out << "batch = " << c.hyper.batch_size << "\n";
    out << "epochs = " << c.hyper.epochs << "\n";
    out << "seed = " << c.hyper.seed << "\n";
    out << "weighting = " << weighting_mode_name(c.hyper.weighting_mode) << "\n";
    out << "allow_degenerate_alpha = " << (c.hyper.allow_degenerate_alpha ? "true" : "false") << "\n";
    out << "optimizer = " << (c.hyper.optimizer == OptKind::Adam ? "adam" : "sgd") << "\n";
    out << "activation = " << activation_name(c.hyper.activation) << "\n";
    out << "threshold = " << num(c.threshold) << "\n";
    out << "pairs_per_user = " << c.pairs_per_user << "\n";
    out << "negatives = " << c.negatives_per_user << "\n";
    out << "ks = ";
    for (std::size_t i = 0; i < c.ks.size(); ++i) out << (i ? "," : "") << c.ks[i];
    out << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
    out << "\n";
    out << "threads = " << c.threads << "\n";
    if (!c.alphas.empty()) {
        out << "alphas = ";
        for (std::size_t i = 0; i < c.alphas.size(); ++i) out << (i ? "," : "") << num(c.alphas[i]);
        out << "\n";
    }
    if (!c.betas.empty()) {
        out << "betas = ";
        for (std::size_t i = 0; i < c.betas.size(); ++i) out << (i ? "," : "") << num(c.betas[i]);
        out << "\n";
    }
    if (!c.models.empty()) {
        out << "models = ";
        for (std::size_t i = 0; i < c.models.size(); ++i) {
            out << (i ? "," : "") << kind_name(c.models[i]);
        }
        out << "\n";
    }
    out << "reference = " << c.reference << "\n";
    if (!c.constants.empty()) out << "constants = " << c.constants << "\n";
    return out.str();
}

std::string resolve_dataset_path(const std::string& dataset) {
    if (dataset.empty() || dataset.front() == '/') return dataset;
    const char* root = std::getenv("MP2REC_DATA_ROOT");
    if (!root || !*root) return dataset;
    std::string joined(root);
    if (!joined.empty() && joined.back() != '/') joined += '/';
    return joined + dataset;
}

}  // namespace mp2rec
