#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

struct CliFixture {
    fs::path dir;
    CliFixture() {
        dir = fs::temp_directory_path() /
              ("id3_cli_" + std::to_string(::getpid()) + "_" +
               std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(dir);
    }
    ~CliFixture() { fs::remove_all(dir); }

    std::string file(const std::string& name) const { return (dir / name).string(); }

    int run(const std::string& args, const std::string& log_name = "log.txt") const {
        std::string cmd = "cd '" + dir.string() + "' && '" + ID3_CLI_PATH + "' " + args +
                          " > '" + file(log_name) + "' 2>&1";
        int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string slurp(const std::string& name) const {
        std::ifstream in(file(name));
        return std::string(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
    }

    std::size_t line_count(const std::string& name) const {
        std::ifstream in(file(name));
        std::size_t count = 0;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++count;
        return count;
    }

    // small fast pipeline config shared by the subcommand tests
    void write_config() const {
        std::ofstream(file("cfg.json")) << R"({
  "world": {"n": 4, "d": 2},
  "schedule": {"T": 10},
  "train": {"steps": 60, "batch": 8, "hidden1": 12, "hidden2": 12},
  "datagen": {"N": 2, "m": 2}
})";
    }
};

}  // namespace

TEST_CASE("config dump prints the effective configuration") {
    CliFixture cli;
    CHECK(cli.run("config dump") == 0);
    std::string out = cli.slurp("log.txt");
    CHECK(out.find("\"schedule\"") != std::string::npos);
    CHECK(out.find("\"gamma\"") != std::string::npos);

    CHECK(cli.run("config dump --set schedule.T=77") == 0);
    CHECK(cli.slurp("log.txt").find("\"T\": 77") != std::string::npos);
}

TEST_CASE("usage and config failures exit with code 2") {
    CliFixture cli;
    CHECK(cli.run("--config does_not_exist.json config dump") == 2);
    CHECK(cli.slurp("log.txt").find("does_not_exist.json") != std::string::npos);
    CHECK(cli.run("train --set train.lr=NaN") == 2);
    CHECK(cli.run("definitely-not-a-subcommand") == 2);
}

TEST_CASE("anchors subcommand prints the separation and writes the csv") {
    CliFixture cli;
    CHECK(cli.run("anchors --set datagen.N=4 --set world.d=3") == 0);
    std::string out = cli.slurp("log.txt");
    CHECK(out.find("max_pairwise_cosine=-0.33") != std::string::npos);
    CHECK(fs::exists(cli.file("out/anchors.csv")));

    CHECK(cli.run("anchors --set datagen.N=2") == 0);
    out = cli.slurp("log.txt");
    CHECK(out.find("max_pairwise_cosine=-1") != std::string::npos);
}

TEST_CASE("the full pipeline runs through the cli") {
    CliFixture cli;
    cli.write_config();

    CHECK(cli.run("--config cfg.json train") == 0);
    CHECK(fs::exists(cli.file("out/checkpoint.id3w")));
    // header plus one row per step
    CHECK(cli.line_count("out/train_loss.csv") == 61);

    // steps=0 still writes the initial checkpoint and exits cleanly
    CHECK(cli.run("--config cfg.json train --set train.steps=0 --set paths.checkpoint=out/init.id3w") == 0);
    CHECK(fs::exists(cli.file("out/init.id3w")));

    CHECK(cli.run("--config cfg.json gendata") == 0);
    CHECK(fs::exists(cli.file("out/dataset.csv")));
    CHECK(fs::exists(cli.file("out/dataset.csv.meta.json")));
    CHECK(cli.line_count("out/dataset.csv") == 5);  // header + N*m rows

    CHECK(cli.run("--config cfg.json eval") == 0);
    CHECK(fs::exists(cli.file("out/eval_stats.json")));
    CHECK(fs::exists(cli.file("out/similarity_histogram.csv")));
    std::string stats = cli.slurp("out/eval_stats.json");
    CHECK(stats.find("separation") != std::string::npos);

    CHECK(cli.run("--config cfg.json sample --nu 0.6 --attrs age=30,yaw=10 --trace out/traj.csv",
                  "sample.txt") == 0);
    std::string rec = cli.slurp("sample.txt");
    CHECK(rec.find("id,sample,age,pose_yaw") != std::string::npos);
    // trajectory: header + T+1 states
    CHECK(cli.line_count("out/traj.csv") == 12);

    CHECK(cli.run("--config cfg.json sample --id-vector 1,0", "sample2.txt") == 0);
    CHECK(cli.run("--config cfg.json sample --id-vector 1,0 --nu 0.5", "sample3.txt") == 2);
    CHECK(cli.run("--config cfg.json sample --id-vector 1,0,0", "sample4.txt") == 2);
    CHECK(cli.run("--config cfg.json sample --attrs age=abc", "sample5.txt") == 2);
}

TEST_CASE("gendata is byte-identical across worker counts") {
    CliFixture cli;
    cli.write_config();
    REQUIRE(cli.run("--config cfg.json train") == 0);
    CHECK(cli.run("--config cfg.json gendata --workers 1 --set paths.dataset=out/a.csv") == 0);
    CHECK(cli.run("--config cfg.json gendata --workers 4 --set paths.dataset=out/b.csv") == 0);
    CHECK(cli.slurp("out/a.csv") == cli.slurp("out/b.csv"));
    CHECK(!cli.slurp("out/a.csv").empty());
}

TEST_CASE("eval rejects a corrupt dataset with the offending line") {
    CliFixture cli;
    cli.write_config();
    REQUIRE(cli.run("--config cfg.json train") == 0);
    REQUIRE(cli.run("--config cfg.json gendata") == 0);

    std::string text = cli.slurp("out/dataset.csv");
    std::ofstream(cli.file("out/corrupt.csv")) << text.substr(0, text.size() - 25);
    CHECK(cli.run("--config cfg.json eval out/corrupt.csv") == 2);
    CHECK(cli.slurp("log.txt").find("line") != std::string::npos);

    CHECK(cli.run("--config cfg.json eval no_such_dataset.csv") == 2);
}

TEST_CASE("verify subcommand reports all four oracle checks") {
    CliFixture cli;
    CHECK(cli.run("verify") == 0);
    std::string out = cli.slurp("log.txt");
    CHECK(out.find("lemma_a1_normalization") != std::string::npos);
    CHECK(out.find("score_decomposition") != std::string::npos);
    CHECK(out.find("tweedie_identity") != std::string::npos);
    CHECK(out.find("loss_bound") != std::string::npos);
    CHECK(out.find("\"passed\":false") == std::string::npos);
    CHECK(fs::exists(cli.file("out/verify.jsonl")));
}

TEST_CASE("seed environment override is logged and applied") {
    CliFixture cli;
    cli.write_config();
    std::string cmd = "cd '" + cli.dir.string() + "' && ID3_SEED=4242 '" + ID3_CLI_PATH +
                      "' config dump > env.txt 2> env_err.txt";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(cli.slurp("env.txt").find("\"master_seed\": 4242") != std::string::npos);
    CHECK(cli.slurp("env_err.txt").find("ID3_SEED") != std::string::npos);
}

TEST_CASE("help lists every subcommand") {
    CliFixture cli;
    cli.run("--help");
    std::string out = cli.slurp("log.txt");
    for (const char* sub : {"anchors", "train", "sample", "gendata", "eval", "verify", "config"})
        CHECK(out.find(sub) != std::string::npos);
}
