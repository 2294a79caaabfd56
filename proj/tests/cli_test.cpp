#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lrmdl/cli.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

using lrmdl::DataMatrix;
using lrmdl::FrameShape;
using lrmdl::Matrix;
using lrmdl::Vector;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  std::streambuf* const old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* const old_err = std::cerr.rdbuf(err.rdbuf());
  CliResult result;
  try {
    result.code = lrmdl::cli_main(args);
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lrmdl_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Rank-1 stack of 8x6 frames with three positive spikes per frame, all pixel
// values inside [0, 255] so the PGM round trip is exact.
fs::path pgm_stack_dir(const std::string& name) {
  const int h = 8, w = 6, n = 12;
  Vector u = test_support::smooth_frame(h, w, 1.0, 1.0, 0.4);
  u.array() += 2.0;
  u /= u.norm();
  Vector v(n);
  for (int t = 0; t < n; ++t) v(t) = 1.0 + 0.15 * std::sin(0.5 * t);
  v /= v.norm();
  Matrix X = (1700.0 * u * v.transpose()).array().round().matrix();
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> row(0, h * w - 1);
  for (int j = 0; j < n; ++j)
    for (int s = 0; s < 3; ++s) X(row(rng), j) += 90.0;

  const fs::path dir = fresh_dir(name);
  lrmdl::export_frame_sequence(X, FrameShape{h, w}, dir, "frame");
  return dir;
}

fs::path csv_matrix_file(const std::string& name) {
  const Matrix X =
      test_support::low_rank_plus_spikes(20, 10, {300.0, 120.0}, 0.06, 60.0, 99).array().round();
  const fs::path dir = fresh_dir(name);
  lrmdl::save_matrix_csv(X, dir / "x.csv");
  return dir / "x.csv";
}

TEST(CliSelect, RunsTheFullPipelineOnFrames) {
  const fs::path stack = pgm_stack_dir("select_frames");
  const fs::path out = fresh_dir("select_frames_out");
  const CliResult r = run_cli({"select", "--input", stack.string(), "--out", out.string(),
                               "--lambdas", "25,19,14.4,10.9,8.3"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("data: 48x12 (frames 8x6)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("selected: rank 1"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "curve.csv"));
  EXPECT_TRUE(fs::exists(out / "eigenframe_1.pgm"));
}

TEST(CliSelect, MissingInputIsADataError) {
  const fs::path out = fresh_dir("select_missing_out");
  const CliResult r =
      run_cli({"select", "--input", "/nonexistent/frames", "--out", out.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(CliSelect, MissingRequiredFlagIsAUsageError) {
  const fs::path stack = pgm_stack_dir("select_noflag");
  const CliResult r = run_cli({"select", "--input", stack.string()});
  EXPECT_EQ(r.code, 1);
}

TEST(CliSelect, UnknownFlagIsAUsageError) {
  const CliResult r = run_cli({"select", "--frobnicate"});
  EXPECT_EQ(r.code, 1);
}

TEST(CliSelect, BadLambdaSpecsAreUsageErrors) {
  const fs::path stack = pgm_stack_dir("select_badlambda");
  const fs::path out = fresh_dir("select_badlambda_out");
  for (const std::string spec : {"abc", "2,2", "1:2", "-3,1", "0.5:8:0"}) {
    const CliResult r = run_cli(
        {"select", "--input", stack.string(), "--out", out.string(), "--lambdas", spec});
    EXPECT_EQ(r.code, 1) << "spec \"" << spec << "\" got: " << r.err;
  }
}

TEST(CliSelect, LambdaListIsEchoedInTheReport) {
  const fs::path stack = pgm_stack_dir("select_list");
  const fs::path out = fresh_dir("select_list_out");
  const CliResult r = run_cli(
      {"select", "--input", stack.string(), "--out", out.string(), "--lambdas", "20,10,5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const lrmdl::ReportFile report = lrmdl::parse_report(read_bytes(out / "report.json"));
  EXPECT_EQ(report.schedule, (std::vector<double>{20.0, 10.0, 5.0}));
  EXPECT_EQ(report.candidates.size(), 5u);  // three swept plus two references
}

TEST(CliSelect, LambdaRangeMakesAGeometricGrid) {
  const fs::path stack = pgm_stack_dir("select_range");
  const fs::path out = fresh_dir("select_range_out");
  const CliResult r = run_cli(
      {"select", "--input", stack.string(), "--out", out.string(), "--lambdas", "0.5:8:5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const lrmdl::ReportFile report = lrmdl::parse_report(read_bytes(out / "report.json"));
  ASSERT_EQ(report.schedule.size(), 5u);
  EXPECT_DOUBLE_EQ(report.schedule.front(), 8.0);
  EXPECT_DOUBLE_EQ(report.schedule.back(), 0.5);
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_LT(report.schedule[i], report.schedule[i - 1]);
    EXPECT_NEAR(report.schedule[i] / report.schedule[i - 1],
                std::pow(0.5 / 8.0, 1.0 / 4.0), 1e-12);
  }
}

TEST(CliSelect, OutputsAreByteDeterministic) {
  const fs::path stack = pgm_stack_dir("select_determinism");
  const fs::path out1 = fresh_dir("select_determinism_out1");
  const fs::path out2 = fresh_dir("select_determinism_out2");
  const std::vector<std::string> tail = {"--lambdas", "25,14.4,8.3"};
  CliResult r1 = run_cli({"select", "--input", stack.string(), "--out", out1.string(),
                          tail[0], tail[1]});
  CliResult r2 = run_cli({"select", "--input", stack.string(), "--out", out2.string(),
                          tail[0], tail[1]});
  ASSERT_EQ(r1.code, 0) << r1.err;
  ASSERT_EQ(r2.code, 0) << r2.err;
  // Everything before the artifacts line is path-free and must match exactly.
  EXPECT_EQ(r1.out.substr(0, r1.out.find("artifacts:")),
            r2.out.substr(0, r2.out.find("artifacts:")));
  EXPECT_EQ(read_bytes(out1 / "report.json"), read_bytes(out2 / "report.json"));
  EXPECT_EQ(read_bytes(out1 / "curve.csv"), read_bytes(out2 / "curve.csv"));
  EXPECT_EQ(read_bytes(out1 / "background_0000.pgm"), read_bytes(out2 / "background_0000.pgm"));
}

TEST(CliDecompose, WritesTheFactors) {
  const fs::path csv = csv_matrix_file("decompose");
  const fs::path out = fresh_dir("decompose_out");
  const CliResult r = run_cli(
      {"decompose", "--input", csv.string(), "--out", out.string(), "--lambda", "4.47"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("solved"), std::string::npos) << r.out;

  const Matrix X = lrmdl::load_matrix_csv(csv).values;
  const Matrix A = lrmdl::load_matrix_csv(out / "A.csv").values;
  const Matrix E = lrmdl::load_matrix_csv(out / "E.csv").values;
  ASSERT_EQ(A.rows(), X.rows());
  ASSERT_EQ(E.cols(), X.cols());
  const double scale = X.cwiseAbs().maxCoeff();
  EXPECT_LE((X - A - E).cwiseAbs().maxCoeff(), 1e-4 * scale);
}

TEST(CliDecompose, ExhaustedIterationBudgetIsASolverError) {
  const fs::path csv = csv_matrix_file("decompose_budget");
  const fs::path out = fresh_dir("decompose_budget_out");
  const CliResult r = run_cli({"decompose", "--input", csv.string(), "--out", out.string(),
                               "--lambda", "4.47", "--max-iter", "3"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(CliCodelength, ScoresAConsistentPair) {
  const fs::path csv = csv_matrix_file("codelength");
  const fs::path dir = csv.parent_path();
  const Matrix X = lrmdl::load_matrix_csv(csv).values;
  lrmdl::save_matrix_csv(Matrix::Zero(X.rows(), X.cols()), dir / "a.csv");
  lrmdl::save_matrix_csv(X, dir / "e.csv");
  const CliResult r = run_cli({"codelength", "--input", csv.string(), "--a",
                               (dir / "a.csv").string(), "--e", (dir / "e.csv").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rank: 0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("total:"), std::string::npos) << r.out;
}

TEST(CliCodelength, RejectsAnInconsistentPair) {
  const fs::path csv = csv_matrix_file("codelength_bad");
  const fs::path dir = csv.parent_path();
  const Matrix X = lrmdl::load_matrix_csv(csv).values;
  lrmdl::save_matrix_csv(Matrix::Ones(X.rows(), X.cols()), dir / "a.csv");
  lrmdl::save_matrix_csv(X, dir / "e.csv");
  const CliResult r = run_cli({"codelength", "--input", csv.string(), "--a",
                               (dir / "a.csv").string(), "--e", (dir / "e.csv").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("losslessness"), std::string::npos) << r.err;
}

TEST(CliTopLevel, VersionAndHelpExitCleanly) {
  const CliResult version = run_cli({"--version"});
  EXPECT_EQ(version.code, 0);
  EXPECT_NE(version.out.find("lrmdl 1.0.0"), std::string::npos);

  const CliResult help = run_cli({"--help"});
  EXPECT_EQ(help.code, 0);
  for (const std::string name : {"select", "decompose", "codelength"})
    EXPECT_NE(help.out.find(name), std::string::npos);

  const CliResult bare = run_cli({});
  EXPECT_EQ(bare.code, 0);
  EXPECT_NE(bare.out.find("select"), std::string::npos);
}

}  // namespace
