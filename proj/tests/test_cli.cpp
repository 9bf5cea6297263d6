#include <bsattack/bsattack.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("bsattack_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  static CliRun invoke(const std::string& args) {
    const std::string out = path("stdout.txt");
    const std::string cmd = std::string(BSATTACK_CLI) + " " + args + " >" + out + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Small corpus and model shared by the pipeline tests.
  static void ensure_model() {
    if (fs::exists(path("model.bin"))) return;
    ASSERT_EQ(invoke("generate --out-dir " + dir_.string() + " --train-size 80 --test-size 12").code, 0);
    const CliRun t = invoke("train --data " + path("train.jsonl") + " --out " + path("model.bin") +
                      " --epochs 2 --seed 3 --test " + path("test.jsonl"));
    ASSERT_EQ(t.code, 0) << t.out;
    EXPECT_NE(t.out.find("test accuracy"), std::string::npos);
  }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(Cli, UnknownFlagExitsTwo) {
  EXPECT_EQ(invoke("train --bogus 1").code, 2);
  EXPECT_EQ(invoke("nosuchcommand").code, 2);
  EXPECT_EQ(invoke("").code, 2);
}

TEST_F(Cli, MissingFileExitsTwo) {
  EXPECT_EQ(invoke("report --in " + path("missing.json")).code, 2);
  EXPECT_EQ(invoke("train --data " + path("missing.jsonl") + " --out " + path("m.bin")).code, 2);
}

TEST_F(Cli, MalformedDatasetIsRuntimeError) {
  std::ofstream(path("bad.jsonl")) << "{\"text\": \"x\"}\n";
  const CliRun r = invoke("train --data " + path("bad.jsonl") + " --out " + path("bad.bin"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error:"), std::string::npos);
  EXPECT_NE(r.out.find(":1:"), std::string::npos) << r.out;
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(invoke("--help").code, 0); }

TEST_F(Cli, TrainAttackReportRoundTrip) {
  ensure_model();
  EXPECT_TRUE(fs::exists(path("model.bin.vocab")));
  const CliRun a = invoke("attack --model " + path("model.bin") + " --data " + path("test.jsonl") +
                    " --out-report " + path("report.json") + " --max-iters 20");
  ASSERT_EQ(a.code, 0) << a.out;
  const auto report = bsattack::load_report(path("report.json"));
  EXPECT_EQ(report.rows.size() + report.unattackable, 12u);
  EXPECT_EQ(report.config.max_iterations, 20u);

  const CliRun j = invoke("report --in " + path("report.json") + " --format json");
  ASSERT_EQ(j.code, 0);
  EXPECT_EQ(j.out, slurp(path("report.json")));
  const CliRun c = invoke("report --in " + path("report.json") + " --format csv");
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(c.out, bsattack::report_csv(report));
  EXPECT_EQ(invoke("report --in " + path("report.json") + " --format xml").code, 2);
}

TEST_F(Cli, ZeroBudgetExhaustsEveryEvaluatedRow) {
  ensure_model();
  ASSERT_EQ(invoke("attack --model " + path("model.bin") + " --data " + path("test.jsonl") +
                " --out-report " + path("zero.json") + " --max-iters 0")
                .code,
            0);
  const auto report = bsattack::load_report(path("zero.json"));
  for (const auto& row : report.rows) {
    if (row.result.status == bsattack::AttackStatus::kSkippedMisclassified) continue;
    EXPECT_EQ(row.result.status, bsattack::AttackStatus::kExhaustedBudget);
    EXPECT_EQ(row.result.iterations, 0u);
  }
}

TEST_F(Cli, AttackIsRepeatable) {
  ensure_model();
  const std::string common = "attack --model " + path("model.bin") + " --data " + path("test.jsonl") +
                             " --max-iters 15 --alpha-set 5,2 --lr-set 0.15";
  ASSERT_EQ(invoke(common + " --out-report " + path("r1.json")).code, 0);
  ASSERT_EQ(invoke(common + " --threads 2 --out-report " + path("r2.json")).code, 0);
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));
}

TEST_F(Cli, SweepWritesCsv) {
  ensure_model();
  const CliRun s = invoke("sweep --model " + path("model.bin") + " --data " + path("test.jsonl") +
                    " --alphas 2,10 --max-iters 10 --out-csv " + path("sweep.csv"));
  ASSERT_EQ(s.code, 0) << s.out;
  const std::string csv = slurp(path("sweep.csv"));
  EXPECT_EQ(csv.rfind("alpha,adv_accuracy,mean_similarity,mean_token_error_rate\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(Cli, CheckpointWithWrongVocabularyIsRejected) {
  ensure_model();
  fs::copy_file(path("model.bin"), path("other.bin"), fs::copy_options::overwrite_existing);
  std::ofstream(path("other.bin.vocab")) << "<unk>\n<pad>\nsomething\n";
  const CliRun a = invoke("attack --model " + path("other.bin") + " --data " + path("test.jsonl") +
                    " --out-report " + path("x.json"));
  EXPECT_EQ(a.code, 1);
}
