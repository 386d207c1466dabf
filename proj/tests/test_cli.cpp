#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mgl/graph_io.hpp"

using namespace mgl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path dir =
        fs::temp_directory_path() / ("mgl_cli_" + tag + "_" + std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spill(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

CliResult run_cli(const std::string& args) {
    const fs::path scratch = fresh_dir("io");
    const fs::path out_file = scratch / "stdout.txt";
    const fs::path err_file = scratch / "stderr.txt";
    const std::string cmd = std::string(MGL_CLI_PATH) + " " + args + " > \"" +
                            out_file.string() + "\" 2> \"" + err_file.string() + "\"";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = (raw != -1 && WIFEXITED(raw)) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
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

// Drops everything from the fourth tab onward so timing columns do not enter
// byte-identity comparisons.
std::string first_four_fields(const std::string& line) {
    std::size_t pos = 0;
    for (int t = 0; t < 4 && pos != std::string::npos; ++t)
        pos = line.find('\t', pos == 0 && t == 0 ? 0 : pos + 1);
    return pos == std::string::npos ? line : line.substr(0, pos);
}

std::string strip_timing(const std::string& tsv) {
    std::string out;
    for (const std::string& line : lines_of(tsv)) out += first_four_fields(line) + "\n";
    return out;
}

fs::path synth_small_graph(const std::string& tag) {
    const fs::path dir = fresh_dir(tag);
    const fs::path cfg = dir / "synth.cfg";
    spill(cfg, "n=30\nk=3\nv=2\nd_feat=4\np_in=0.4\np_out=0.05\nseed=3\n");
    const CliResult r =
        run_cli("synth --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r.code == 0);
    return dir;
}

std::string train_config_text(const fs::path& data_dir) {
    return "features=" + (data_dir / "features.txt").string() + "\n" +
           "layers=" + (data_dir / "layer0.txt").string() + "," +
           (data_dir / "layer1.txt").string() + "\n" +
           "hidden=8\nembed_dim=4\nepochs=5\nlr=0.01\nseed=3\n";
}

}  // namespace

TEST_CASE("cli help and argument errors") {
    const CliResult help = run_cli("--help");
    REQUIRE(help.code == 0);
    REQUIRE(contains(help.out, "usage: mgl <command>"));
    REQUIRE(contains(help.out, "gradcheck"));
    REQUIRE(help.err.empty());

    const CliResult none = run_cli("");
    REQUIRE(none.code == 1);
    REQUIRE(contains(none.err, "error: missing command"));
    REQUIRE(contains(none.err, "usage: mgl"));

    const CliResult bad_cmd = run_cli("frobnicate --out \"" + fresh_dir("badcmd").string() + "\"");
    REQUIRE(bad_cmd.code == 1);
    REQUIRE(contains(bad_cmd.err, "unknown command 'frobnicate'"));

    const CliResult bad_flag = run_cli("synth --frob 3");
    REQUIRE(bad_flag.code == 1);
    REQUIRE(contains(bad_flag.err, "unknown flag '--frob'"));
    REQUIRE(contains(bad_flag.err, "--config, --seed, --out"));

    const CliResult dangling = run_cli("synth --config");
    REQUIRE(dangling.code == 1);
    REQUIRE(contains(dangling.err, "--config needs a path"));
}

TEST_CASE("cli config file errors") {
    const fs::path dir = fresh_dir("cfgerr");

    const fs::path junk = dir / "junk.cfg";
    spill(junk, "junk=1\n");
    const CliResult r1 =
        run_cli("synth --config \"" + junk.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r1.code == 1);
    REQUIRE(contains(r1.err, "unknown config key 'junk'"));
    REQUIRE(contains(r1.err, "valid keys"));

    const fs::path noeq = dir / "noeq.cfg";
    spill(noeq, "# comment\nnonsense\n");
    const CliResult r2 =
        run_cli("synth --config \"" + noeq.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r2.code == 1);
    REQUIRE(contains(r2.err, "noeq.cfg"));
    REQUIRE(contains(r2.err, "2"));

    const fs::path empty = dir / "empty.cfg";
    spill(empty, "");
    const CliResult r3 =
        run_cli("train --config \"" + empty.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r3.code == 1);
    REQUIRE(contains(r3.err, "config key 'features' is required"));

    const CliResult r4 =
        run_cli("eval-classify --config \"" + empty.string() + "\" --out \"" + dir.string() +
                "\"");
    REQUIRE(r4.code == 1);
    REQUIRE(contains(r4.err, "config key 'embedding' is required"));
}

TEST_CASE("synth writes a loadable multiplex graph deterministically") {
    const fs::path d1 = synth_small_graph("synth1");

    for (const char* name : {"features.txt", "layer0.txt", "layer1.txt", "labels.txt",
                             "merged_pairs.tsv", "resolved_config.txt"})
        REQUIRE(fs::exists(d1 / name));

    const MultiplexGraph g = load_multiplex(
        (d1 / "features.txt").string(),
        {(d1 / "layer0.txt").string(), (d1 / "layer1.txt").string()},
        (d1 / "labels.txt").string());
    REQUIRE(g.num_nodes() == 30);
    REQUIRE(g.num_layers() == 2);
    REQUIRE(g.features.cols == 4);
    REQUIRE(g.labels.has_value());
    g.validate();

    REQUIRE(lines_of(slurp(d1 / "features.txt")).front() == "30 4");
    REQUIRE(slurp(d1 / "merged_pairs.tsv") ==
            "layer\tblock_a\tblock_b\n0\t-1\t-1\n1\t-1\t-1\n");
    const std::string echoed = slurp(d1 / "resolved_config.txt");
    REQUIRE(contains(echoed, "n=30\n"));
    REQUIRE(contains(echoed, "k=3\n"));
    REQUIRE(contains(echoed, "seed=3\n"));

    const fs::path d2 = synth_small_graph("synth2");
    for (const char* name : {"features.txt", "layer0.txt", "layer1.txt", "labels.txt",
                             "merged_pairs.tsv", "resolved_config.txt"})
        REQUIRE(slurp(d1 / name) == slurp(d2 / name));
}

TEST_CASE("synth records complementary merged pairs and seed overrides") {
    const fs::path dir = fresh_dir("comp");
    const fs::path cfg = dir / "synth.cfg";
    spill(cfg, "n=24\nk=3\nv=4\nd_feat=3\np_in=0.5\np_out=0.05\ncomplementary=true\nseed=3\n");
    const CliResult r = run_cli("synth --config \"" + cfg.string() + "\" --seed 9 --out \"" +
                                dir.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(slurp(dir / "merged_pairs.tsv") ==
            "layer\tblock_a\tblock_b\n0\t0\t1\n1\t0\t2\n2\t1\t2\n3\t0\t1\n");
    REQUIRE(contains(slurp(dir / "resolved_config.txt"), "seed=9\n"));
}

TEST_CASE("train writes encoders, loss log and embeddings; embed reproduces them") {
    const fs::path data = synth_small_graph("traindata");
    const fs::path dt = fresh_dir("train1");
    const fs::path cfg = dt / "train.cfg";
    spill(cfg, train_config_text(data));

    const CliResult r =
        run_cli("train --config \"" + cfg.string() + "\" --out \"" + dt.string() + "\"");
    REQUIRE(r.code == 0);
    for (const char* name : {"encoder_0.txt", "encoder_1.txt", "loss_log.tsv", "embedding.txt",
                             "embedding_layer0.txt", "embedding_layer1.txt",
                             "resolved_config.txt"})
        REQUIRE(fs::exists(dt / name));

    const std::vector<std::string> log = lines_of(slurp(dt / "loss_log.tsv"));
    REQUIRE(log.size() == 6);
    REQUIRE(log.front() == "epoch\tlp0\tlp1\tcca_invariance\tcca_decorrelation\ttotal");
    REQUIRE(log[1].rfind("0\t", 0) == 0);
    REQUIRE(log[5].rfind("4\t", 0) == 0);

    const DenseMatrix z = read_embedding((dt / "embedding.txt").string());
    REQUIRE(z.rows == 30);
    REQUIRE(z.cols == 4);
    REQUIRE(z.all_finite());

    const fs::path dt2 = fresh_dir("train2");
    const CliResult r2 =
        run_cli("train --config \"" + cfg.string() + "\" --out \"" + dt2.string() + "\"");
    REQUIRE(r2.code == 0);
    for (const char* name : {"encoder_0.txt", "encoder_1.txt", "loss_log.tsv", "embedding.txt"})
        REQUIRE(slurp(dt / name) == slurp(dt2 / name));

    const fs::path de = fresh_dir("embed1");
    const fs::path embed_cfg = de / "embed.cfg";
    spill(embed_cfg,
          train_config_text(data) + "model_prefix=" + (dt / "encoder_").string() + "\n");
    const CliResult r3 =
        run_cli("embed --config \"" + embed_cfg.string() + "\" --out \"" + de.string() + "\"");
    REQUIRE(r3.code == 0);
    REQUIRE(slurp(de / "embedding.txt") == slurp(dt / "embedding.txt"));
    REQUIRE(slurp(de / "embedding_layer1.txt") == slurp(dt / "embedding_layer1.txt"));

    const fs::path de2 = fresh_dir("embed2");
    const CliResult r4 =
        run_cli("embed --config \"" + cfg.string() + "\" --out \"" + de2.string() + "\"");
    REQUIRE(r4.code == 1);
    REQUIRE(contains(r4.err, "encoder_0.txt"));
}

TEST_CASE("eval commands score a separable embedding") {
    const fs::path dir = fresh_dir("eval");
    DenseMatrix z(24, 2);
    std::vector<int> labels(24);
    for (int i = 0; i < 24; ++i) {
        const int c = i % 3;
        labels[static_cast<std::size_t>(i)] = c;
        z(i, 0) = c == 1 ? 50.0 : 0.0;
        z(i, 1) = c == 2 ? 50.0 : 0.0;
    }
    write_embedding((dir / "z.txt").string(), z);
    write_labels((dir / "y.txt").string(), labels);

    const fs::path cfg = dir / "eval.cfg";
    spill(cfg, "embedding=" + (dir / "z.txt").string() + "\nlabels=" + (dir / "y.txt").string() +
                   "\nseeds=1,2\neval_train_frac=0.5\n");

    const CliResult rc = run_cli("eval-classify --config \"" + cfg.string() + "\" --out \"" +
                                 dir.string() + "\"");
    REQUIRE(rc.code == 0);
    REQUIRE(rc.out == slurp(dir / "eval_classify.tsv"));
    const std::vector<std::string> cls = lines_of(rc.out);
    REQUIRE(cls.size() == 5);
    REQUIRE(cls[0] == "row\tmacro_f1\tmicro_f1");
    REQUIRE(cls[1] == "seed:1\t1.000000\t1.000000");
    REQUIRE(cls[2] == "seed:2\t1.000000\t1.000000");
    REQUIRE(cls[3] == "mean\t1.000000\t1.000000");
    REQUIRE(cls[4] == "std\t0.000000\t0.000000");

    const CliResult rk = run_cli("eval-cluster --config \"" + cfg.string() + "\" --out \"" +
                                 dir.string() + "\"");
    REQUIRE(rk.code == 0);
    REQUIRE(rk.out == slurp(dir / "eval_cluster.tsv"));
    const std::vector<std::string> clu = lines_of(rk.out);
    REQUIRE(clu.size() == 5);
    REQUIRE(clu[0] == "row\taccuracy\tnmi\tsilhouette");
    REQUIRE(clu[1] == "seed:1\t1.000000\t1.000000\t1.000000");
    REQUIRE(clu[3] == "mean\t1.000000\t1.000000\t1.000000");

    const fs::path norm_cfg = dir / "eval_norm.cfg";
    spill(norm_cfg, slurp(cfg) + "normalize=true\n");
    const fs::path dn = fresh_dir("evalnorm");
    const CliResult rn = run_cli("eval-classify --config \"" + norm_cfg.string() + "\" --out \"" +
                                 dn.string() + "\"");
    REQUIRE(rn.code == 0);
    REQUIRE(contains(rn.out, "seed:1\t1.000000\t1.000000"));

    const fs::path k2_cfg = dir / "eval_k2.cfg";
    spill(k2_cfg, slurp(cfg) + "kmeans_k=2\n");
    const fs::path dk = fresh_dir("evalk2");
    const CliResult r2 = run_cli("eval-cluster --config \"" + k2_cfg.string() + "\" --out \"" +
                                 dk.string() + "\"");
    REQUIRE(r2.code == 0);
    REQUIRE(lines_of(r2.out).size() == 5);
    REQUIRE(contains(r2.out, "seed:1\t"));
}

TEST_CASE("noise sweep emits one row per eta and variant, reproducibly") {
    const fs::path dir = fresh_dir("noise");
    const fs::path cfg = dir / "noise.cfg";
    spill(cfg, "n=24\nk=2\nv=2\nd_feat=4\np_in=0.5\np_out=0.05\nfeature_noise=0.5\n"
               "hidden=6\nembed_dim=3\nepochs=3\nlr=0.01\nseeds=1,2\neta_list=0,0.5\n");

    const CliResult r =
        run_cli("noise-sweep --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(r.out == slurp(dir / "noise_sweep.tsv"));
    const std::vector<std::string> rows = lines_of(r.out);
    REQUIRE(rows.size() == 7);
    REQUIRE(rows[0] == "eta\tvariant\tnmi_mean\tnmi_std");
    REQUIRE(rows[1].rfind("0.000000\tfull\t", 0) == 0);
    REQUIRE(rows[2].rfind("0.000000\tlp_only\t", 0) == 0);
    REQUIRE(rows[3].rfind("0.000000\tcca_only\t", 0) == 0);
    REQUIRE(rows[4].rfind("0.500000\tfull\t", 0) == 0);

    const fs::path dir2 = fresh_dir("noise2");
    const CliResult r2 =
        run_cli("noise-sweep --config \"" + cfg.string() + "\" --out \"" + dir2.string() + "\"");
    REQUIRE(r2.code == 0);
    REQUIRE(r2.out == r.out);
}

TEST_CASE("oos table covers each ratio with per-seed and mean rows") {
    const fs::path dir = fresh_dir("oos");
    const fs::path cfg = dir / "oos.cfg";
    spill(cfg, "n=24\nk=2\nv=2\nd_feat=4\np_in=0.5\np_out=0.05\nfeature_noise=0.5\n"
               "hidden=6\nembed_dim=3\nepochs=3\nlr=0.01\nseeds=1,2\noos_ratios=0,0.3\n"
               "eval_train_frac=0.5\n");

    const CliResult r =
        run_cli("oos --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(r.out == slurp(dir / "oos.tsv"));
    const std::vector<std::string> rows = lines_of(r.out);
    REQUIRE(rows.size() == 7);
    REQUIRE(rows[0] == "ratio\tseed\tseen_micro_f1\tunseen_micro_f1\tinfer_ms");
    REQUIRE(rows[1].rfind("0.000000\t1\t", 0) == 0);
    REQUIRE(contains(rows[1], "\t-\t-"));
    REQUIRE(rows[3].rfind("0.000000\tmean\t", 0) == 0);
    REQUIRE(contains(rows[3], "\t-\t-"));
    REQUIRE(rows[4].rfind("0.300000\t1\t", 0) == 0);
    REQUIRE(!contains(rows[4], "-"));
    REQUIRE(rows[6].rfind("0.300000\tmean\t", 0) == 0);

    const fs::path dir2 = fresh_dir("oos2");
    const CliResult r2 =
        run_cli("oos --config \"" + cfg.string() + "\" --out \"" + dir2.string() + "\"");
    REQUIRE(r2.code == 0);
    REQUIRE(strip_timing(r2.out) == strip_timing(r.out));
}

TEST_CASE("depth sweep reports both encoder kinds per depth, reproducibly") {
    const fs::path dir = fresh_dir("depth");
    const fs::path cfg = dir / "depth.cfg";
    spill(cfg, "n=24\nk=2\nv=2\nd_feat=4\np_in=0.5\np_out=0.05\nfeature_noise=0.5\n"
               "hidden=6\nembed_dim=3\nepochs=3\nlr=0.01\nseeds=1\ndepth_list=1,2\n");

    const CliResult r =
        run_cli("depth-sweep --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(r.out == slurp(dir / "depth_sweep.tsv"));
    const std::vector<std::string> rows = lines_of(r.out);
    REQUIRE(rows.size() == 5);
    REQUIRE(rows[0] == "depth\tencoder_kind\tnmi_mean\tnmi_std");
    REQUIRE(rows[1].rfind("1\tmlp\t", 0) == 0);
    REQUIRE(rows[2].rfind("1\tgcn-baseline\t", 0) == 0);
    REQUIRE(rows[3].rfind("2\tmlp\t", 0) == 0);
    REQUIRE(rows[4].rfind("2\tgcn-baseline\t", 0) == 0);

    const fs::path dir2 = fresh_dir("depth2");
    const CliResult r2 =
        run_cli("depth-sweep --config \"" + cfg.string() + "\" --out \"" + dir2.string() + "\"");
    REQUIRE(r2.code == 0);
    REQUIRE(r2.out == r.out);
}

TEST_CASE("every command echoes the resolved config") {
    const fs::path dir = fresh_dir("echo");
    const CliResult r = run_cli("synth --seed 77 --out \"" + dir.string() + "\"");
    REQUIRE(r.code == 0);
    const std::string echoed = slurp(dir / "resolved_config.txt");
    REQUIRE(contains(echoed, "n=300\n"));
    REQUIRE(contains(echoed, "epochs=500\n"));
    REQUIRE(contains(echoed, "encoder_kind=mlp\n"));
    REQUIRE(contains(echoed, "w_mode=two_hop\n"));
    REQUIRE(contains(echoed, "seed=77\n"));
    REQUIRE(contains(echoed, "seeds=1,2,3,4,5\n"));
    REQUIRE(contains(echoed, "eta_list=0,0.5\n"));
}

TEST_CASE("gradcheck command validates every component") {
    const fs::path dir = fresh_dir("gradcheck");
    const CliResult r = run_cli("gradcheck --out \"" + dir.string() + "\"");
    REQUIRE(r.code == 0);
    REQUIRE(r.out == slurp(dir / "gradcheck.tsv"));
    const std::vector<std::string> rows = lines_of(r.out);
    REQUIRE(rows.size() == 9);
    REQUIRE(rows[0] == "component\tmax_rel_err\tstatus");
    for (std::size_t i = 1; i < rows.size(); ++i) REQUIRE(contains(rows[i], "PASS"));
    REQUIRE(contains(r.out, "lp_loss\t"));
    REQUIRE(contains(r.out, "train_step\t"));
    REQUIRE(!contains(r.out, "FAIL"));
}
