// End-to-end tests of the mp2rec binary (path injected by CMake).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const std::string& capture = "") {
    std::string cmd = std::string(MP2REC_CLI_PATH) + " " + args;
    cmd += capture.empty() ? " >/dev/null 2>&1" : " >" + capture + " 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// Shared fixture: one synthesized ratings file plus one trained mp2 model.
// Built lazily so every case can run standalone.
struct Fixture {
    fs::path root;
    std::string dataset;
    std::string train_flags;  // everything but --out / --seed
    fs::path base_out;        // mp2, seed 7
};

const Fixture& fixture() {
    static const Fixture fx = [] {
        unsetenv("MP2REC_DATA_ROOT");
        unsetenv("MP2REC_CONSTANTS");
        Fixture f;
        f.root = fs::temp_directory_path() / "mp2rec_cli_fixture";
        fs::remove_all(f.root);
        fs::create_directories(f.root);
        f.dataset = (f.root / "ratings.tsv").string();
        REQUIRE(run_cli("synth " + f.dataset + " --users 50 --items 300 --seed 5") == 0);

        f.train_flags = "--dataset " + f.dataset +
                        " --format ml100k --model mp2 --epochs 2 --dim 4 --mlp 8x4"
                        " --batch 64 --lr 0.01 --pairs-per-user 4 --negatives 30";
        f.base_out = f.root / "base";
        const std::string log = (f.root / "base_train.out").string();
        REQUIRE(run_cli("train " + f.train_flags + " --out " + f.base_out.string() + " --seed 7",
                        log) == 0);
        return f;
    }();
    return fx;
}

}  // namespace

TEST_CASE("synth writes a deterministic ratings file") {
    const Fixture& fx = fixture();
    const std::string text = slurp(fx.dataset);
    const auto lines = lines_of(text);
    CHECK(lines.size() >= 50 * 20);  // every user rates at least 20 items
    for (const std::string& line : {lines.front(), lines.back()}) {
        CHECK(std::count(line.begin(), line.end(), '\t') == 3);
    }

    const std::string again = (fx.root / "ratings_again.tsv").string();
    REQUIRE(run_cli("synth " + again + " --users 50 --items 300 --seed 5") == 0);
    CHECK(slurp(again) == text);

    const std::string other = (fx.root / "ratings_other.tsv").string();
    REQUIRE(run_cli("synth " + other + " --users 50 --items 300 --seed 6") == 0);
    CHECK(slurp(other) != text);
}

TEST_CASE("train writes the full artifact set") {
    const Fixture& fx = fixture();
    CHECK(fs::exists(fx.base_out / "mp2_s7.ckpt"));
    CHECK(fs::exists(fx.base_out / "split_s7.tsv"));
    CHECK(fs::exists(fx.base_out / "users.map"));
    CHECK(fs::exists(fx.base_out / "items.map"));
    CHECK(fs::exists(fx.base_out / "run_mp2_s7.cfg"));

    const std::string console = slurp(fx.root / "base_train.out");
    CHECK(contains(console, "train mp2 seed=7"));
    CHECK(contains(console, "epoch 1 total="));
    CHECK(contains(console, "epoch 2 total="));
    CHECK(contains(console, "checkpoint " + (fx.base_out / "mp2_s7.ckpt").string()));

    // Per-epoch log: snapshot header plus one CSV row per epoch.
    const auto log = lines_of(slurp(fx.base_out / "train_mp2_s7.log"));
    REQUIRE(log.size() == 3);
    CHECK(contains(log[0], "# train model=mp2 seed=7 alpha="));
    for (std::size_t e = 1; e <= 2; ++e) {
        CHECK(log[e].rfind(std::to_string(e) + ",", 0) == 0);
        CHECK(std::count(log[e].begin(), log[e].end(), ',') == 4);
    }

    // The persisted config replays the exact run (overrides folded in).
    const std::string cfg = slurp(fx.base_out / "run_mp2_s7.cfg");
    CHECK(contains(cfg, "model = mp2\n"));
    CHECK(contains(cfg, "epochs = 2\n"));
    CHECK(contains(cfg, "mlp = 8x4\n"));
    CHECK(contains(cfg, "seed = 7\n"));
}

TEST_CASE("training is bit-reproducible per seed") {
    const Fixture& fx = fixture();
    const fs::path rerun = fx.root / "rerun";
    REQUIRE(run_cli("train " + fx.train_flags + " --out " + rerun.string() + " --seed 7") == 0);
    CHECK(slurp(rerun / "mp2_s7.ckpt") == slurp(fx.base_out / "mp2_s7.ckpt"));
    CHECK(slurp(rerun / "split_s7.tsv") == slurp(fx.base_out / "split_s7.tsv"));
    CHECK(slurp(rerun / "train_mp2_s7.log") == slurp(fx.base_out / "train_mp2_s7.log"));

    const fs::path other = fx.root / "other_seed";
    REQUIRE(run_cli("train " + fx.train_flags + " --out " + other.string() + " --seed 8") == 0);
    CHECK(slurp(other / "mp2_s8.ckpt") != slurp(fx.base_out / "mp2_s7.ckpt"));
}

TEST_CASE("eval scores a checkpoint and emits stable CSV") {
    const Fixture& fx = fixture();
    const std::string out = fx.base_out.string();
    const std::string console = (fx.root / "eval.out").string();
    REQUIRE(run_cli("eval --model mp2 --seed 7 --out " + out + " --ks 5,20", console) == 0);

    const fs::path csv_path = fx.base_out / "metrics_mp2_s7.csv";
    REQUIRE(fs::exists(csv_path));
    const std::string csv = slurp(csv_path);
    const auto rows = lines_of(csv);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "model,metric,k,value,users,seed");
    CHECK(rows[1].rfind("mp2,hr,5,", 0) == 0);
    CHECK(rows[2].rfind("mp2,hr,20,", 0) == 0);
    CHECK(rows[3].rfind("mp2,ndcg,5,", 0) == 0);
    CHECK(rows[4].rfind("mp2,ndcg,20,", 0) == 0);
    CHECK(contains(slurp(fs::path(console)), "metrics " + csv_path.string()));

    // Re-running the evaluation reproduces the file byte for byte.
    REQUIRE(run_cli("eval --model mp2 --seed 7 --out " + out + " --ks 5,20") == 0);
    CHECK(slurp(csv_path) == csv);

    // Explicit checkpoint/manifest positionals hit the same path.
    REQUIRE(run_cli("eval " + (fx.base_out / "mp2_s7.ckpt").string() + " " +
                    (fx.base_out / "split_s7.tsv").string() + " --out " + out + " --ks 5,20") == 0);
    CHECK(slurp(csv_path) == csv);
}

TEST_CASE("bad invocations exit with code 2") {
    const Fixture& fx = fixture();
    const std::string scratch = (fx.root / "scratch").string();

    // Validation: alpha=1 needs the explicit degenerate flag.
    CHECK(run_cli("train " + fx.train_flags + " --out " + scratch + " --seed 1 --alpha 1") == 2);
    // ...and is accepted with it.
    CHECK(run_cli("train " + fx.train_flags + " --out " + scratch +
                  " --seed 1 --alpha 1 --allow-degenerate-alpha true") == 0);

    CHECK(run_cli("train --dataset " + (fx.root / "missing.tsv").string() + " --out " + scratch) ==
          2);
    CHECK(run_cli("train " + fx.train_flags + " --out " + scratch + " --bogus-flag 1") == 2);
    CHECK(run_cli("no-such-command") == 2);
    CHECK(run_cli("eval --model mp2 --seed 99 --out " + scratch) == 2);  // no such checkpoint

    // A corrupted checkpoint is rejected, not half-loaded.
    const fs::path broken = fx.root / "broken.ckpt";
    {
        std::string bytes = slurp(fx.base_out / "mp2_s7.ckpt");
        bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x01);
        std::ofstream out_f(broken, std::ios::binary);
        out_f << bytes;
    }
    CHECK(run_cli("eval " + broken.string() + " " + (fx.base_out / "split_s7.tsv").string() +
                  " --out " + scratch) == 2);
}

TEST_CASE("numeric divergence exits with code 3") {
    const Fixture& fx = fixture();
    const std::string out = (fx.root / "diverge").string();
    CHECK(run_cli("train " + fx.train_flags + " --out " + out +
                  " --seed 1 --optimizer sgd --lr 1e9") == 3);
}

TEST_CASE("grid sweeps alpha points and keeps going") {
    const Fixture& fx = fixture();
    const fs::path out = fx.root / "grid";
    const std::string console = (fx.root / "grid.out").string();
    REQUIRE(run_cli("grid " + fx.train_flags + " --out " + out.string() +
                    " --alphas 0,0.999 --seeds 1,2 --ks 5", console) == 0);

    const std::string text = slurp(console);
    CHECK(contains(text, "grid model=mp2 points=2 seeds=2"));
    CHECK(contains(text, "point alpha=0 beta=1 done"));
    CHECK(contains(text, "point alpha=0.999 beta=1 done"));

    const auto rows = lines_of(slurp(out / "grid.csv"));
    REQUIRE(rows.size() == 5);  // header + 2 points x (hr5, ndcg5)
    CHECK(rows[0] == "alpha,beta,metric,k,value");
    CHECK(rows[1].rfind("0,1,hr,5,", 0) == 0);
    CHECK(rows[2].rfind("0,1,ndcg,5,", 0) == 0);
    CHECK(rows[3].rfind("0.999,1,hr,5,", 0) == 0);
    CHECK(rows[4].rfind("0.999,1,ndcg,5,", 0) == 0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double v = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("reproduce builds the comparison table with reference cells") {
    const Fixture& fx = fixture();
    const fs::path out = fx.root / "repro";
    const std::string console = (fx.root / "repro.out").string();
    REQUIRE(run_cli("reproduce --dataset " + fx.dataset + " --out " + out.string() +
                    " --models bpr,mp2 --seeds 1 --negatives 30", console) == 0);

    const auto rows = lines_of(slurp(out / "reproduce.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] ==
          "model,hr5,hr20,ndcg5,ndcg20,ref_hr5,ref_hr20,ref_ndcg5,ref_ndcg20,seeds,hyperparams,"
          "status");
    CHECK(rows[1].rfind("bpr,", 0) == 0);
    CHECK(rows[2].rfind("mp2,", 0) == 0);
    // Frozen ml-100k reference cells ride along for side-by-side reading.
    CHECK(contains(rows[1], ",0.455000,0.818200,0.317200,0.452600,"));
    CHECK(contains(rows[2], ",0.598300,0.894700,0.472100,0.560400,"));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].substr(rows[i].rfind(',') + 1) == "ok");
    }
    CHECK(contains(slurp(fs::path(console)), "reproduce models=2 seeds=1 reference=ml-100k"));

    // Byte-identical on a second run.
    const fs::path out2 = fx.root / "repro2";
    REQUIRE(run_cli("reproduce --dataset " + fx.dataset + " --out " + out2.string() +
                    " --models bpr,mp2 --seeds 1 --negatives 30") == 0);
    CHECK(slurp(out2 / "reproduce.csv") == slurp(out / "reproduce.csv"));

    // reference=none leaves the reference cells empty.
    const fs::path out3 = fx.root / "repro_none";
    REQUIRE(run_cli("reproduce --dataset " + fx.dataset + " --out " + out3.string() +
                    " --models bpr --seeds 1 --negatives 30 --reference none") == 0);
    const auto none_rows = lines_of(slurp(out3 / "reproduce.csv"));
    REQUIRE(none_rows.size() == 2);
    CHECK(contains(none_rows[1], ",,,,"));
}

TEST_CASE("config files combine with command-line overrides") {
    const Fixture& fx = fixture();
    const fs::path cfg_path = fx.root / "run.cfg";
    {
        std::ofstream cfg(cfg_path);
        cfg << "dataset = " << fx.dataset << "\n"
            << "model = bpr\n"
            << "dim = 4\n"
            << "epochs = 1\n"
            << "pairs_per_user = 4\n"
            << "negatives = 30\n"
            << "lr = 0.01\n";
    }
    const fs::path out = fx.root / "from_config";
    REQUIRE(run_cli("train --config " + cfg_path.string() + " --out " + out.string() +
                    " --epochs 2 --seed 3") == 0);
    CHECK(fs::exists(out / "bpr_s3.ckpt"));
    const std::string echoed = slurp(out / "run_bpr_s3.cfg");
    CHECK(contains(echoed, "model = bpr\n"));
    CHECK(contains(echoed, "epochs = 2\n"));  // the flag wins over the file
    CHECK(contains(echoed, "dim = 4\n"));

    std::ofstream(cfg_path, std::ios::app) << "volume = 11\n";
    CHECK(run_cli("train --config " + cfg_path.string() + " --out " + out.string()) == 2);
}
