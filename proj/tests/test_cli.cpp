#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lcpred/common.hpp"
#include "lcpred/csv.hpp"
#include "lcpred/pipeline.hpp"

using namespace lcpred;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code = -1;
    std::string output;
};

Run cli(const std::string& args, const fs::path& scratch) {
    const auto log = scratch / "cli.log";
    const std::string cmd = std::string("\"") + LCPRED_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(log)};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

std::string base_config(const fs::path& input, const fs::path& out, const std::string& extra = "") {
    return R"({"seed": 11, "input_dir": ")" + input.string() + R"(", "output_dir": ")" + out.string() +
           R"(", "fuzzy": {"grid": [[0.1, 0.1], [0.5, 0.5]]}, "classifier": {"forest": {"n_trees": 10}},
  "synth": {"presets": ["style_blobs"], "recordings_per_preset": 2})" + extra + "}";
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = fs::temp_directory_path() / ("lcpred_cli_" + std::to_string(::getpid()));
        fs::remove_all(root_);
        fs::create_directories(root_);
        cfg_ = write_config(root_, base_config(root_ / "corpus", root_ / "out"));
        setup_ok_ = cli("synth -c \"" + cfg_.string() + "\" -o \"" + (root_ / "corpus").string() + "\"", root_).code == 0;
        for (const char* stage : {"extract", "cluster", "build-datasets"})
            setup_ok_ = setup_ok_ && cli(std::string(stage) + " -c \"" + cfg_.string() + "\"", root_).code == 0;
        const auto sweep = cli("sweep -c \"" + cfg_.string() + "\"", root_);
        sweep_log_ = sweep.output;
        setup_ok_ = setup_ok_ && sweep.code == 0;
    }
    static void TearDownTestSuite() { fs::remove_all(root_); }

    void SetUp() override { ASSERT_TRUE(setup_ok_); }

    static fs::path root_;
    static fs::path cfg_;
    static bool setup_ok_;
    static std::string sweep_log_;
};

fs::path Cli::root_;
fs::path Cli::cfg_;
bool Cli::setup_ok_ = false;
std::string Cli::sweep_log_;

}  // namespace

TEST_F(Cli, StageOutputsCarryProvenance) {
    const auto out = root_ / "out";
    for (const char* f : {"extract/samples.csv", "extract/pairs.csv", "cluster/styles.csv", "sweep/leaderboard.csv"}) {
        const auto text = slurp(out / f);
        EXPECT_EQ(text.rfind("# config_hash=", 0), 0u) << f;
    }
    const auto manifest = nlohmann::json::parse(slurp(out / "extract" / "manifest.json"));
    const auto config = load_config(cfg_);
    EXPECT_EQ(manifest.at("provenance").at("config_hash"), config.hash());
    EXPECT_EQ(manifest.at("provenance").at("seed"), config.seed);
}

TEST_F(Cli, ConsoleTopMatchesLeaderboard) {
    const auto table = CsvTable::read(root_ / "out" / "sweep" / "leaderboard.csv");
    ASSERT_EQ(table.row_count(), 4u);
    std::istringstream log(sweep_log_.substr(sweep_log_.find("top 5:")));
    std::string line;
    std::getline(log, line);
    std::getline(log, line);
    for (std::size_t i = 0; i < table.row_count(); ++i) {
        ASSERT_TRUE(std::getline(log, line));
        std::istringstream fields(line);
        std::string rank, run;
        fields >> rank >> run;
        EXPECT_EQ(rank, std::to_string(i + 1));
        EXPECT_EQ(run, table.cell(i, table.require_column("run")));
    }
}

TEST_F(Cli, ReportValidatesAndIsIdempotent) {
    const auto dir = root_ / "out" / "sweep";
    ASSERT_EQ(cli("report \"" + dir.string() + "\"", root_).code, 0);
    const auto first = slurp(dir / "summary.json");
    const auto first_csv = slurp(dir / "summary.csv");
    ASSERT_EQ(cli("report \"" + dir.string() + "\"", root_).code, 0);
    EXPECT_EQ(slurp(dir / "summary.json"), first);
    EXPECT_EQ(slurp(dir / "summary.csv"), first_csv);
    const auto summary = nlohmann::json::parse(first);
    EXPECT_TRUE(validate_summary(summary).empty());
    EXPECT_EQ(summary.at("runs").size(), 4u);

    auto broken = summary;
    broken["runs"][0].erase("test");
    EXPECT_FALSE(validate_summary(broken).empty());
}

TEST_F(Cli, ReportOnPartialDirectoryListsMissing) {
    const auto copy = root_ / "partial";
    fs::remove_all(copy);
    fs::copy(root_ / "out" / "sweep", copy, fs::copy_options::recursive);
    fs::remove(copy / "runs" / "Bird" / "metrics.json");
    fs::remove(copy / "runs" / "Bird_DS" / "roc.csv");
    const auto r = cli("report \"" + copy.string() + "\"", root_);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("Bird/metrics.json"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("Bird_DS/roc.csv"), std::string::npos) << r.output;
    EXPECT_FALSE(fs::exists(copy / "summary.json") && slurp(copy / "summary.json").empty());
}

TEST_F(Cli, SingleClusterLabelsEveryoneGeneral) {
    const auto dir = root_ / "k1";
    fs::create_directories(dir);
    const auto cfg = write_config(dir, base_config(root_ / "corpus", dir / "out", R"(, "clustering": {"k": 1})"));
    ASSERT_EQ(cli("extract -c \"" + cfg.string() + "\"", dir).code, 0);
    const auto r = cli("cluster -c \"" + cfg.string() + "\"", dir);
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("warning"), std::string::npos);
    const auto styles = CsvTable::read(dir / "out" / "cluster" / "styles.csv");
    ASSERT_GT(styles.row_count(), 0u);
    const auto col = styles.require_column("driving_style");
    for (std::size_t i = 0; i < styles.row_count(); ++i) EXPECT_EQ(styles.cell(i, col), "general");
}

TEST_F(Cli, SeedOverrideChangesProvenance) {
    const auto dir = root_ / "seed";
    fs::create_directories(dir);
    const auto r = cli("extract -c \"" + cfg_.string() + "\" --seed 99 -o \"" + (dir / "out").string() + "\"", dir);
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(slurp(dir / "out" / "extract" / "samples.csv").find("seed=99"), std::string::npos);
}

TEST(CliErrors, EmptyInputDirectory) {
    const auto dir = fs::temp_directory_path() / ("lcpred_cli_empty_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir / "in");
    const auto cfg = write_config(dir, base_config(dir / "in", dir / "out"));
    const auto r = cli("extract -c \"" + cfg.string() + "\"", dir);
    EXPECT_EQ(r.code, 2) << r.output;
    EXPECT_NE(r.output.find("recordingMeta"), std::string::npos) << r.output;
    fs::remove_all(dir);
}

TEST(CliErrors, BadConfigurationsExitOne) {
    const auto dir = fs::temp_directory_path() / ("lcpred_cli_bad_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto in = dir / "in";
    for (const std::string text :
         {std::string(R"({"input_dir": "x"})"), base_config(in, dir, R"(, "colour": 1)"),
          base_config(in, dir, R"(, "clustering": {"k": 4})"), std::string("{not json"),
          base_config(in, dir, R"(, "classifier": {"split_ratio": 1.0})")}) {
        const auto cfg = write_config(dir, text);
        EXPECT_EQ(cli("extract -c \"" + cfg.string() + "\"", dir).code, 1) << text;
    }
    EXPECT_EQ(cli("extract", dir).code, 1);
    EXPECT_EQ(cli("frobnicate", dir).code, 1);
    EXPECT_EQ(cli("extract -c \"" + (dir / "absent.json").string() + "\"", dir).code, 1);
    fs::remove_all(dir);
}

TEST(Config, StrictParsing) {
    const auto ok = nlohmann::json::parse(R"({"seed": 3, "fuzzy": {"grid": "full", "speed_scope": "exclude_subject"}})");
    const auto c = parse_config(ok);
    EXPECT_EQ(c.grid.size(), 81u);
    EXPECT_EQ(c.speed_scope, SpeedScope::exclude_subject);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"seed": 3, "fuzzy": {"grd": "full"}})")), ConfigError);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"seed": "3"})")), ConfigError);
    EXPECT_THROW(validate_config(parse_config(nlohmann::json::parse(R"({"output_dir": "o"})"))), ConfigError);

    auto a = parse_config(ok);
    auto b = parse_config(ok);
    b.output_dir = "elsewhere";
    b.input_dir = "other";
    EXPECT_EQ(a.hash(), b.hash());
    b.clustering.restarts = 3;
    EXPECT_NE(a.hash(), b.hash());
    EXPECT_EQ(a.provenance(), "config_hash=" + a.hash() + " seed=3");
    EXPECT_EQ(run_dir_name("Bird&DS"), "Bird_DS");
}
