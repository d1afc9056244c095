#include "doctest.h"

#include "stg3net/io.hpp"
#include "stg3net/model.hpp"

#include "json.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stg3net;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "stg3net_test_cli";

const std::string kTinySynth =
    " --set synth.n_slices=2 --set synth.grid_side=6 --set synth.n_domains=2 --set synth.n_genes=30";
const std::string kShortTrain = " --epochs 20 --set train.warmup_epochs=10 --set train.g2n_refresh_every=5 --domains 2";

/** Runs the CLI with `args`, capturing combined output in `log`, and returns the exit status. */
int cli(const std::string& args, const fs::path& log = kRoot / "last.log") {
    fs::create_directories(kRoot);
    const std::string cmd = std::string(STG3NET_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/** A tiny synthetic dataset, written once per test binary. */
const fs::path& tiny_dataset() {
    static const fs::path dir = [] {
        const fs::path d = kRoot / "tiny";
        fs::remove_all(d);
        REQUIRE(cli("synth --out " + d.string() + kTinySynth) == 0);
        return d;
    }();
    return dir;
}

std::string run_args(const fs::path& out) {
    const auto& d = tiny_dataset();
    return "run --manifest " + (d / "manifest.json").string() + " --truth " + (d / "truth.csv").string() + " --out " +
           out.string() + kShortTrain + " -q";
}

}

TEST_CASE("synth writes three slices by default and is byte-identical across runs") {
    const fs::path a = kRoot / "synth_a", b = kRoot / "synth_b";
    fs::remove_all(a);
    fs::remove_all(b);
    REQUIRE(cli("synth --out " + a.string() + " --seed 7") == 0);
    REQUIRE(cli("synth --out " + b.string() + " --seed 7") == 0);
    const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest.size() == 3);
    for (const auto& entry : fs::directory_iterator(a)) {
        CAPTURE(entry.path());
        CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
    CHECK(cli("synth --out " + a.string() + " --set synth.n_slices=1") == 2);
}

TEST_CASE("run writes all six artifacts") {
    const fs::path out = kRoot / "run_full";
    fs::remove_all(out);
    REQUIRE(cli(run_args(out)) == 0);
    for (const char* name : {"H.csv", "Z.csv", "labels.csv", "metrics.json", "loss_history.csv", "checkpoint.txt"}) {
        CAPTURE(name);
        CHECK(fs::exists(out / name));
    }
    const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
    CHECK(metrics["ari"].is_number());
    CHECK(metrics["f1_lisi"].is_number());
    const auto h = io::read_matrix_csv(out / "H.csv", true);
    CHECK(h.rows() == 72);
    CHECK(h.cols() == 16);
    CHECK(io::read_labels_csv(out / "labels.csv").size() == 72);
    const auto history = io::read_table(out / "loss_history.csv");
    CHECK(history.rows.size() == 20);
    CHECK(checkpoint_has_discriminator(out / "checkpoint.txt"));
}

TEST_CASE("identical invocations give byte-identical metrics") {
    const fs::path a = kRoot / "det_a", b = kRoot / "det_b";
    REQUIRE(cli(run_args(a)) == 0);
    REQUIRE(cli(run_args(b)) == 0);
    CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));
    CHECK(slurp(a / "H.csv") == slurp(b / "H.csv"));
}

TEST_CASE("only-mask runs report f1 lisi and save no discriminator") {
    const fs::path out = kRoot / "run_only";
    REQUIRE(cli(run_args(out) + " --variant only-mask") == 0);
    const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
    CHECK(metrics.contains("f1_lisi"));
    CHECK_FALSE(checkpoint_has_discriminator(out / "checkpoint.txt"));
}

TEST_CASE("run extras") {
    const fs::path out = kRoot / "run_extras";
    REQUIRE(cli(run_args(out) + " --dump-triplets --dump-graph --autocorrelation") == 0);
    CHECK(slurp(out / "triplets.csv").rfind("anchor,positive,negative,epoch\n", 0) == 0);
    CHECK(fs::exists(out / "a_norm.txt"));
    const auto metrics = nlohmann::json::parse(slurp(out / "metrics.json"));
    CHECK(metrics["morans_i"].size() == 30);
    CHECK(metrics["gearys_c"].size() == 30);
}

TEST_CASE("exit codes") {
    CHECK(cli("run --out " + (kRoot / "x").string()) == 2);
    CHECK(cli("run --manifest " + (kRoot / "missing.json").string() + " --out " + (kRoot / "x").string()) == 3);
    CHECK(cli("run --bogus") == 2);
    CHECK(cli(run_args(kRoot / "x") + " --set no.such_key=1") == 2);
    CHECK(cli(run_args(kRoot / "x") + " --variant gan") == 2);
    CHECK(cli(run_args(kRoot / "x") + " --epochs 5") == 2);
    CHECK(cli(run_args(kRoot / "x") + " --set train.lr=1e300") == 4);
    CHECK(cli("--help") == 0);
    CHECK(cli("--help-config") == 0);
    CHECK(slurp(kRoot / "last.log").find("train.epochs") != std::string::npos);
}

TEST_CASE("config files are read and flags override them") {
    const fs::path cfg = kRoot / "run.cfg";
    io::write_text(cfg, "# test config\n[train]\nepochs = 12\nwarmup_epochs = 4\n");
    const auto& d = tiny_dataset();
    const fs::path out = kRoot / "run_cfg";
    REQUIRE(cli("run -c " + cfg.string() + " --manifest " + (d / "manifest.json").string() + " --out " + out.string() +
                " --domains 2 -q") == 0);
    CHECK(io::read_table(out / "loss_history.csv").rows.size() == 12);
    REQUIRE(cli("run -c " + cfg.string() + " --epochs 8 --manifest " + (d / "manifest.json").string() + " --out " +
                out.string() + " --domains 2 -q") == 0);
    CHECK(io::read_table(out / "loss_history.csv").rows.size() == 8);
    io::write_text(cfg, "[train]\nepochz = 12\n");
    CHECK(cli("run -c " + cfg.string() + " --manifest " + (d / "manifest.json").string() + " --out " + out.string()) == 2);
}

TEST_CASE("eval scores truth against itself and rejects mismatched inputs") {
    const fs::path out = kRoot / "run_for_eval";
    REQUIRE(cli(run_args(out)) == 0);
    const auto& d = tiny_dataset();

    // Coordinates and integer slice labels in the same spot order as the truth file.
    std::string coords = "spot,x,y\n", slices = "spot,slice\n";
    for (const auto& id : {"slice0", "slice1"}) {
        const auto t = io::read_table(d / (std::string(id) + "_coords.csv"));
        for (const auto& row : t.rows) {
            coords += row[0] + "," + row[1] + "," + row[2] + "\n";
            slices += row[0] + "," + std::string(id).substr(5) + "\n";
        }
    }
    io::write_text(kRoot / "coords.csv", coords);
    io::write_text(kRoot / "slices.csv", slices);

    const std::string common = " --coords " + (kRoot / "coords.csv").string() + " --embedding " + (out / "H.csv").string() +
                               " --slices " + (kRoot / "slices.csv").string();
    const fs::path metrics_path = kRoot / "eval" / "metrics.json";
    REQUIRE(cli("eval --labels " + (d / "truth.csv").string() + " --truth-labels " + (d / "truth.csv").string() + common +
                " --output " + metrics_path.string()) == 0);
    const auto m = nlohmann::json::parse(slurp(metrics_path));
    CHECK(m["ari"].get<double>() == 1.0);
    CHECK(m["nmi"].get<double>() == doctest::Approx(1.0));

    const auto labels = slurp(d / "truth.csv");
    io::write_text(kRoot / "short_labels.csv", labels.substr(0, labels.rfind('\n', labels.size() - 2) + 1));
    CHECK(cli("eval --labels " + (kRoot / "short_labels.csv").string() + common) == 3);
    CHECK(cli("eval --labels " + (d / "truth.csv").string()) == 2);
}

TEST_CASE("ablate writes one row per variant and seed in a fixed order") {
    const fs::path out = kRoot / "ablate";
    fs::remove_all(out);
    REQUIRE(cli("ablate --out " + out.string() + kTinySynth + kShortTrain + " --set ablate.seeds=5 -q") == 0);
    const auto table = io::read_table(out / "ablation.csv");
    REQUIRE(table.rows.size() == 20);
    CHECK(table.header[0] == "variant");
    const std::vector<std::string> order{"only-mask", "mask-gan", "mask-g2n", "full"};
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(table.rows[i][0] == order[i / 5]);
        CHECK(table.rows[i][3] == std::to_string(i % 5));
    }
    const auto summary = io::read_table(out / "ablation_summary.csv");
    CHECK(summary.rows.size() == 4);
    CHECK(summary.rows[0][3] == "5");

    const fs::path sweep = kRoot / "ablate_sweep";
    REQUIRE(cli("ablate --out " + sweep.string() + kTinySynth + kShortTrain +
                " --set ablate.seeds=1 --set ablate.objective_sweep=true -q") == 0);
    const auto swept = io::read_table(sweep / "ablation.csv");
    REQUIRE(swept.rows.size() == 6);
    CHECK(swept.rows[4][0] == "full");
    CHECK(swept.rows[4][1] == "mse");
    CHECK(swept.rows[5][2] == "contrastive");
}
