#include "mp2rec/reference.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kv_text.hpp"

#ifndef MP2REC_SOURCE_DIR
#define MP2REC_SOURCE_DIR ""
#endif

namespace mp2rec {

std::optional<double> ReferenceTable::lookup(const std::string& dataset, const std::string& model,
                                             const std::string& metric, std::size_t k) const {
    for (const ReferenceCell& c : cells) {
        if (c.dataset == dataset && c.model == model && c.metric == metric && c.k == k) {
            return c.value;
        }
    }
    return std::nullopt;
}

const ReferenceTable& builtin_reference() {
    static const ReferenceTable table = [] {
        ReferenceTable t;
        auto row = [&](const char* ds, const char* model, double hr5, double hr20, double ndcg5,
                       double ndcg20) {
            t.cells.push_back({ds, model, "hr", 5, hr5});
            t.cells.push_back({ds, model, "hr", 20, hr20});
            t.cells.push_back({ds, model, "ndcg", 5, ndcg5});
            t.cells.push_back({ds, model, "ndcg", 20, ndcg20});
        };
        row("ml-100k", "neumf", 0.4709, 0.8163, 0.3311, 0.4570);
        row("ml-100k", "bpr", 0.4550, 0.8182, 0.3172, 0.4526);
        row("ml-100k", "ranknet", 0.5949, 0.8822, 0.4415, 0.5493);
        row("ml-100k", "appl", 0.5877, 0.8851, 0.4590, 0.5510);
        row("ml-100k", "t3", 0.5927, 0.8824, 0.4531, 0.5491);
        row("ml-100k", "mp2", 0.5983, 0.8947, 0.4721, 0.5604);
        row("ml-1m", "neumf", 0.2182, 0.5034, 0.1961, 0.3002);
        row("ml-1m", "bpr", 0.4810, 0.7194, 0.4369, 0.5241);
        row("ml-1m", "ranknet", 0.4074, 0.6939, 0.3498, 0.4627);
        row("ml-1m", "appl", 0.3881, 0.6347, 0.3447, 0.4330);
        row("ml-1m", "t3", 0.4832, 0.7109, 0.4391, 0.5217);
        row("ml-1m", "mp2", 0.4920, 0.7270, 0.4449, 0.5314);
        return t;
    }();
    return table;
}

Hyperparams tuned_defaults(ModelKind kind) {
    Hyperparams h;
    h.embedding_dim = 16;
    h.mlp_hidden = {32, 16};
    h.learning_rate = 1e-3;
    h.lambda = 1e-6;
    h.batch_size = 256;
    h.epochs = 8;
    h.alpha = 0.999;
    h.beta = 1.0;
    h.weighting_mode = WeightingMode::Joint;
    h.optimizer = OptKind::Adam;
    h.activation = Activation::Relu;
    if (kind == ModelKind::BprMf) {
        h.embedding_dim = 32;
        h.mlp_hidden.clear();
        h.learning_rate = 2e-3;
    }
    return h;
}

namespace {

double parse_num(const std::string& where, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": cannot parse '" + value + "' as a number");
    }
}

std::vector<std::string> split_dots(const std::string& key) {
    std::vector<std::string> parts;
    std::istringstream in(key);
    std::string tok;
    while (std::getline(in, tok, '.')) parts.push_back(tok);
    return parts;
}

}  // namespace

ConstantsFile parse_constants(std::istream& in, const std::string& name) {
    ConstantsFile out;
    kv::for_each_entry(in, name, [&](const std::string& key, const std::string& value,
                                     const std::string& where) {
        const auto parts = split_dots(key);
        if (parts.size() == 4 && parts[0] == "ref") {
            // ref.<dataset>.<model>.<metric><k>
            const std::string& mk = parts[3];
            std::string metric;
            std::size_t k = 0;
            if (mk.rfind("hr", 0) == 0) {
                metric = "hr";
                k = static_cast<std::size_t>(parse_num(where, mk.substr(2)));
            } else if (mk.rfind("ndcg", 0) == 0) {
                metric = "ndcg";
                k = static_cast<std::size_t>(parse_num(where, mk.substr(4)));
            } else {
                throw ParseError(where + ": metric key must start with hr or ndcg");
            }
            out.table.cells.push_back({parts[1], parts[2], metric, k, parse_num(where, value)});
        } else if (parts.size() == 3 && parts[0] == "default") {
            // default.<model>.<field>; field names match run-config keys.
            if (!kind_from_name(parts[1])) {
                throw ParseError(where + ": unknown model '" + parts[1] + "'");
            }
            out.default_entries.push_back({parts[1] + "." + parts[2], value});
        } else {
            throw ParseError(where + ": unknown constants key '" + key + "'");
        }
    });
    return out;
}

ConstantsFile load_constants(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open constants file");
    return parse_constants(in, path);
}

ConstantsFile locate_constants(const std::string& explicit_path) {
    if (!explicit_path.empty()) return load_constants(explicit_path);
    std::vector<std::string> candidates;
    if (const char* env = std::getenv("MP2REC_CONSTANTS"); env && *env) {
        candidates.push_back(env);
    }
    candidates.push_back("data/reference.cfg");
    const std::string source_dir = MP2REC_SOURCE_DIR;
    if (!source_dir.empty()) candidates.push_back(source_dir + "/data/reference.cfg");
    for (const std::string& path : candidates) {
        std::ifstream in(path);
        if (in) return parse_constants(in, path);
    }
    // No file found: fall back to the compiled-in copy.
    ConstantsFile fallback;
    fallback.table = builtin_reference();
    return fallback;
}

Hyperparams apply_tuned_defaults(ModelKind kind, const ConstantsFile& constants) {
    Hyperparams h = tuned_defaults(kind);
    const std::string prefix = std::string(kind_name(kind)) + ".";
    for (const auto& [key, value] : constants.default_entries) {
        if (key.rfind(prefix, 0) != 0) continue;
        const std::string field = key.substr(prefix.size());
        const std::string where = "constants default." + key;
        if (field == "lr") h.learning_rate = parse_num(where, value);
        else if (field == "dim") h.embedding_dim = static_cast<std::size_t>(parse_num(where, value));
        else if (field == "batch") h.batch_size = static_cast<std::size_t>(parse_num(where, value));
        else if (field == "epochs") h.epochs = static_cast<std::size_t>(parse_num(where, value));
        else if (field == "alpha") h.alpha = parse_num(where, value);
        else if (field == "beta") h.beta = parse_num(where, value);
        else if (field == "lambda") h.lambda = parse_num(where, value);
        else if (field == "mlp") {
            h.mlp_hidden.clear();
            if (value != "none") {
                std::istringstream in(value);
                std::string tok;
                while (std::getline(in, tok, 'x')) {
                    h.mlp_hidden.push_back(static_cast<std::size_t>(parse_num(where, tok)));
                }
            }
        } else {
            throw ParseError(where + ": unknown default field '" + field + "'");
        }
    }
    return h;
}

}  // namespace mp2rec
