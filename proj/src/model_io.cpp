#include "mp2rec/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "mp2rec/error.hpp"

namespace mp2rec {

namespace {

constexpr char kMagic[8] = {'M', 'P', '2', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a_bytes(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct Writer {
    std::string buf;

    void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void matrix(const Matrix& m) {
        u64(m.rows());
        u64(m.cols());
        for (std::size_t i = 0; i < m.size(); ++i) f64(m[i]);
    }
    void tower(const TowerParams& t) {
        u8(static_cast<std::uint8_t>(t.activation));
        u64(t.mlp_weights.size());
        matrix(t.embedding);
        for (std::size_t l = 0; l < t.mlp_weights.size(); ++l) {
            matrix(t.mlp_weights[l]);
            matrix(t.mlp_biases[l]);
        }
    }
};

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw FormatError("checkpoint: truncated payload");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    Matrix matrix() {
        const std::uint64_t rows = u64();
        const std::uint64_t cols = u64();
        if (rows == 0 || cols == 0 || rows > (1ULL << 32) || cols > (1ULL << 32)) {
            throw FormatError("checkpoint: implausible matrix shape");
        }
        Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = f64();
        return m;
    }
    TowerParams tower() {
        TowerParams t;
        const std::uint8_t act = u8();
        if (act > 2) throw FormatError("checkpoint: unknown activation tag");
        t.activation = static_cast<Activation>(act);
        const std::uint64_t layers = u64();
        if (layers > 64) throw FormatError("checkpoint: implausible layer count");
        t.embedding = matrix();
        for (std::uint64_t l = 0; l < layers; ++l) {
            t.mlp_weights.push_back(matrix());
            t.mlp_biases.push_back(matrix());
        }
        return t;
    }
};

template <typename Enum>
Enum checked_enum(std::uint8_t raw, std::uint8_t max_value, const char* what) {
    if (raw > max_value) throw FormatError(std::string("checkpoint: unknown ") + what + " tag");
    return static_cast<Enum>(raw);
}

}  // namespace

void write_checkpoint(std::ostream& os, const ModelState& model) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(model.kind));
    const Hyperparams& h = model.hyper;
    w.f64(h.alpha);
    w.f64(h.beta);
    w.f64(h.lambda);
    w.f64(h.learning_rate);
    w.u64(h.embedding_dim);
    w.u64(h.mlp_hidden.size());
    for (std::size_t width : h.mlp_hidden) w.u64(width);
    w.u64(h.batch_size);
    w.u64(h.epochs);
    w.u64(h.seed);
    w.u8(static_cast<std::uint8_t>(h.weighting_mode));
    w.u8(h.allow_degenerate_alpha ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(h.optimizer));
    w.u8(static_cast<std::uint8_t>(h.activation));
    w.u64(model.n_users);
    w.u64(model.n_items);
    w.u64(model.remap_hash);
    w.tower(model.user_tower);
    w.tower(model.item_vanilla);
    w.u8(model.item_second ? 1 : 0);
    if (model.item_second) w.tower(*model.item_second);

    os.write(kMagic, sizeof(kMagic));
    char ver[4];
    for (int i = 0; i < 4; ++i) ver[i] = static_cast<char>((kVersion >> (8 * i)) & 0xff);
    os.write(ver, 4);
    os.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
    const std::uint64_t sum = fnv1a_bytes(w.buf);
    char tail[8];
    for (int i = 0; i < 8; ++i) tail[i] = static_cast<char>((sum >> (8 * i)) & 0xff);
    os.write(tail, 8);
    if (!os) throw FormatError("checkpoint: write failed");
}

ModelState read_checkpoint(std::istream& is) {
    std::string raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (raw.size() < sizeof(kMagic) + 4 + 8) throw FormatError("checkpoint: file too short");
    if (std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("checkpoint: bad magic");
    }
    std::uint32_t version = 0;
    for (int i = 0; i < 4; ++i) {
        version |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[8 + i])) << (8 * i);
    }
    if (version != kVersion) {
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::string payload = raw.substr(12, raw.size() - 12 - 8);
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) {
        stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[raw.size() - 8 + i]))
                  << (8 * i);
    }
    if (fnv1a_bytes(payload) != stored) throw FormatError("checkpoint: checksum mismatch");

    Reader r{payload};
    ModelState model;
    model.kind = checked_enum<ModelKind>(r.u8(), 5, "model kind");
    Hyperparams h;
    h.alpha = r.f64();
    h.beta = r.f64();
    h.lambda = r.f64();
    h.learning_rate = r.f64();
    h.embedding_dim = r.u64();
    const std::uint64_t n_mlp = r.u64();
    if (n_mlp > 64) throw FormatError("checkpoint: implausible MLP depth");
    h.mlp_hidden.clear();
    for (std::uint64_t i = 0; i < n_mlp; ++i) h.mlp_hidden.push_back(r.u64());
    h.batch_size = r.u64();
    h.epochs = r.u64();
    h.seed = r.u64();
    h.weighting_mode = checked_enum<WeightingMode>(r.u8(), 2, "weighting mode");
    h.allow_degenerate_alpha = r.u8() != 0;
    h.optimizer = checked_enum<OptKind>(r.u8(), 1, "optimizer");
    h.activation = checked_enum<Activation>(r.u8(), 2, "activation");
    model.hyper = h;
    model.n_users = r.u64();
    model.n_items = r.u64();
    model.remap_hash = r.u64();
    model.user_tower = r.tower();
    model.item_vanilla = r.tower();
    if (r.u8() != 0) model.item_second = r.tower();
    if (r.pos != payload.size()) throw FormatError("checkpoint: trailing bytes in payload");

    if (has_second_tower(model.kind) != model.item_second.has_value()) {
        throw FormatError("checkpoint: tower set does not match model kind");
    }
    if (model.user_tower.embedding.rows() != model.n_users ||
        model.item_vanilla.embedding.rows() != model.n_items) {
        throw FormatError("checkpoint: embedding shape does not match id-space sizes");
    }
    for (const TowerParams* t :
         {&model.user_tower, &model.item_vanilla,
          model.item_second ? &*model.item_second : &model.user_tower}) {
        for (std::size_t l = 0; l < t->num_layers(); ++l) {
            if (t->mlp_biases[l].rows() != t->mlp_weights[l].rows() || t->mlp_biases[l].cols() != 1) {
                throw FormatError("checkpoint: bias shape does not match its layer");
            }
        }
    }

    // Fresh optimizer states (moments are not persisted); the loaded model
    // can train further, it just restarts the moment estimates.
    auto fresh_opt = [&](const TowerParams& tower) {
        std::vector<OptimizerState> out(tower.matrices().size());
        for (OptimizerState& st : out) {
            st.kind = h.optimizer;
            st.learning_rate = h.learning_rate;
        }
        return out;
    };
    model.opt_user = fresh_opt(model.user_tower);
    model.opt_item = fresh_opt(model.item_vanilla);
    if (second_tower_is_trainable(model.kind)) model.opt_second = fresh_opt(*model.item_second);
    return model;
}

void save_checkpoint(const std::string& path, const ModelState& model) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("checkpoint: cannot open " + path + " for writing");
    write_checkpoint(os, model);
    os.flush();
    if (!os) throw FormatError("checkpoint: write to " + path + " failed");
}

ModelState load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("checkpoint: cannot open " + path);
    return read_checkpoint(is);
}

}  // namespace mp2rec
