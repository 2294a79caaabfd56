#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "lrmdl/report.hpp"

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data or
// format error, 3 convergence or pipeline error. Numeric output on stdout is
// rounded to 6 significant digits; report.json keeps full precision.

namespace lrmdl {

/// Flag value that parses but cannot be acted on (bad --lambdas spec, ...).
class usage_error : public error {
 public:
  using error::error;
};

namespace detail {

inline std::string fmt6(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

inline double parse_flag_double(const std::string& text, const std::string& flag) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value,
                                         std::chars_format::general);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
    throw usage_error(flag + ": '" + text + "' is not a finite number");
  return value;
}

inline LambdaSchedule schedule_from_flag(const std::string& spec, const Matrix& X) {
  if (spec == "auto") return default_schedule(X);

  std::vector<double> values;
  if (spec.find(':') != std::string::npos) {
    // lo:hi:count, geometric spacing
    const std::size_t a = spec.find(':');
    const std::size_t b = spec.find(':', a + 1);
    if (b == std::string::npos || spec.find(':', b + 1) != std::string::npos)
      throw usage_error("--lambdas: expected lo:hi:count, got '" + spec + "'");
    const double lo = parse_flag_double(spec.substr(0, a), "--lambdas");
    const double hi = parse_flag_double(spec.substr(a + 1, b - a - 1), "--lambdas");
    const double count_raw = parse_flag_double(spec.substr(b + 1), "--lambdas");
    const int count = static_cast<int>(count_raw);
    if (!(lo > 0.0) || !(hi > 0.0)) throw usage_error("--lambdas: bounds must be positive");
    if (count < 1 || count_raw != count) throw usage_error("--lambdas: count must be a positive integer");
    if (count == 1) {
      values.push_back(lo);
    } else {
      const double ratio = std::pow(hi / lo, 1.0 / (count - 1));
      for (int i = 0; i < count; ++i) values.push_back(lo * std::pow(ratio, i));
    }
  } else {
    std::size_t pos = 0;
    while (pos <= spec.size()) {
      std::size_t comma = spec.find(',', pos);
      if (comma == std::string::npos) comma = spec.size();
      const double v = parse_flag_double(spec.substr(pos, comma - pos), "--lambdas");
      if (!(v > 0.0)) throw usage_error("--lambdas: values must be positive");
      values.push_back(v);
      pos = comma + 1;
      if (comma == spec.size()) break;
    }
  }

  std::sort(values.begin(), values.end(), std::greater<>());
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] == values[i - 1]) throw usage_error("--lambdas: duplicate value");
  return LambdaSchedule{std::move(values)};
}

inline std::optional<UCoderMode> mode_from_flag(const std::string& flag) {
  if (flag == "auto") return std::nullopt;
  return mode_from(flag);
}

inline std::optional<double> delta_e_from_flag(const std::string& flag) {
  if (flag == "auto") return std::nullopt;
  const double v = parse_flag_double(flag, "--delta-e");
  if (!(v > 0.0)) throw usage_error("--delta-e: step must be positive");
  return v;
}

inline DataMatrix load_input(const std::string& input) {
  const std::filesystem::path path(input);
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) return load_frame_stack(path).first;
  if (std::filesystem::is_regular_file(path, ec)) return load_matrix_csv(path);
  throw io_error(input + ": no such file or directory");
}

struct SelectOptions {
  std::string input;
  std::string out;
  std::string lambdas = "auto";
  std::string u_coder = "auto";
  std::string delta_e = "auto";
  double tol = 1e-7;
  int max_iter = 1000;
};

inline int run_select(const SelectOptions& opt) {
  const DataMatrix X = load_input(opt.input);
  const LambdaSchedule schedule = schedule_from_flag(opt.lambdas, X.values);
  SolverConfig config;
  config.tol = opt.tol;
  config.max_iter = opt.max_iter;

  const SelectionReport report = select_model(X, schedule, config, mode_from_flag(opt.u_coder),
                                              delta_e_from_flag(opt.delta_e));
  const ExportResult exported = export_artifacts(report, X.frame_shape, opt.out);
  for (const std::string& warning : exported.warnings) std::cerr << "warning: " << warning << "\n";

  const ModelCandidate& best = report.candidates[report.best_index];
  int failed = 0;
  for (const ModelCandidate& c : report.candidates)
    if (!c.solved) ++failed;

  std::cout << "data: " << X.values.rows() << "x" << X.values.cols()
            << (X.frame_shape ? " (frames " + std::to_string(X.frame_shape->height) + "x" +
                                    std::to_string(X.frame_shape->width) + ")"
                              : "")
            << "\n";
  std::cout << "candidates: " << report.candidates.size() << " (" << failed << " failed)\n";
  std::cout << "selected: rank " << best.rank << ", lambda " << fmt6(best.lambda) << ", total "
            << fmt6(best.allocation.total.bits) << " bits\n";
  std::cout << "bits: U " << fmt6(best.allocation.l_u.bits) << ", sigma "
            << fmt6(best.allocation.l_sigma.bits) << ", V " << fmt6(best.allocation.l_v.bits)
            << ", E " << fmt6(best.allocation.l_e.bits) << "\n";
  std::cout << "artifacts: " << std::filesystem::path(opt.out).string() << " ("
            << exported.written.size() << " files)\n";
  return 0;
}

struct DecomposeOptions {
  std::string input;
  std::string out;
  double lambda = 0.0;
  double tol = 1e-7;
  int max_iter = 1000;
};

inline int run_decompose(const DecomposeOptions& opt) {
  const DataMatrix X = load_input(opt.input);
  SolverConfig config;
  config.tol = opt.tol;
  config.max_iter = opt.max_iter;

  SolveStats stats;
  const Decomposition d = rpca_alm(X.values, opt.lambda, config, std::nullopt, &stats);

  std::error_code ec;
  std::filesystem::create_directories(opt.out, ec);
  if (ec) throw io_error(opt.out + ": cannot create output directory");
  const std::filesystem::path dir(opt.out);
  save_matrix_csv(d.A, dir / "A.csv");
  save_matrix_csv(d.E, dir / "E.csv");

  std::cout << "solved: lambda " << fmt6(opt.lambda) << ", " << stats.iterations
            << " iterations, residual " << fmt6(stats.residual) << "\n";
  std::cout << "rank: " << reduced_svd(d.A).rank() << ", nonzeros in E: "
            << (d.E.array() != 0.0).count() << "\n";
  std::cout << "artifacts: " << (dir / "A.csv").string() << ", " << (dir / "E.csv").string()
            << "\n";
  return 0;
}

struct CodelengthOptions {
  std::string input;
  std::string a_path;
  std::string e_path;
  std::string u_coder = "auto";
  std::string delta_e = "auto";
};

inline int run_codelength(const CodelengthOptions& opt) {
  const DataMatrix X = load_input(opt.input);
  const Matrix A = load_matrix_csv(opt.a_path).values;
  const Matrix E = load_matrix_csv(opt.e_path).values;
  if (A.rows() != X.values.rows() || A.cols() != X.values.cols() || E.rows() != X.values.rows() ||
      E.cols() != X.values.cols())
    throw invalid_input_error("codelength: A and E must match the shape of X");

  QuantizationGrid grid = default_grid(X);
  if (const std::optional<double> de = delta_e_from_flag(opt.delta_e)) grid.delta_e = *de;
  const double gap = (X.values - A - E).cwiseAbs().maxCoeff();
  if (gap > 0.5000001 * grid.delta_e)
    throw consistency_error("codelength: losslessness violated, max |X - A - E| = " +
                            fmt6(gap) + " exceeds half an error step (" +
                            fmt6(0.5 * grid.delta_e) + ")");

  const std::optional<UCoderMode> forced = mode_from_flag(opt.u_coder);
  const UCoderMode mode =
      forced ? *forced : (X.frame_shape ? UCoderMode::predictive : UCoderMode::spherical);
  const QuantizedParts parts = quantize_decomposition(X, A, grid);
  const BitAllocation bits = total_codelength(X, parts.factors, parts.E, grid, mode);

  std::cout << "rank: " << parts.factors.rank() << "\n";
  std::cout << "l_u: " << fmt6(bits.l_u.bits) << " bits\n";
  std::cout << "l_sigma: " << fmt6(bits.l_sigma.bits) << " bits\n";
  std::cout << "l_v: " << fmt6(bits.l_v.bits) << " bits\n";
  std::cout << "l_e: " << fmt6(bits.l_e.bits) << " bits\n";
  std::cout << "total: " << fmt6(bits.total.bits) << " bits\n";
  return 0;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Lossless low-rank model selection by minimum description length"};
  app.set_version_flag("--version", "lrmdl 1.0.0");
  app.require_subcommand(0, 1);

  detail::SelectOptions sopt;
  CLI::App* select = app.add_subcommand(
      "select", "Sweep the regularization path and keep the shortest description");
  select->add_option("--input", sopt.input, "Frame directory or CSV matrix")->required();
  select->add_option("--out", sopt.out, "Output directory for artifacts")->required();
  select->add_option("--lambdas", sopt.lambdas, "auto | lo:hi:count | comma-separated list");
  select->add_option("--u-coder", sopt.u_coder, "auto | predictive | spherical")
      ->check(CLI::IsMember({"auto", "predictive", "spherical"}));
  select->add_option("--delta-e", sopt.delta_e, "auto | positive error step");
  select->add_option("--tol", sopt.tol, "Relative primal-residual tolerance")
      ->check(CLI::PositiveNumber);
  select->add_option("--max-iter", sopt.max_iter, "Iteration budget per path point")
      ->check(CLI::PositiveNumber);

  detail::DecomposeOptions dopt;
  CLI::App* decompose =
      app.add_subcommand("decompose", "Solve a single penalty weight and dump A and E");
  decompose->add_option("--input", dopt.input, "Frame directory or CSV matrix")->required();
  decompose->add_option("--out", dopt.out, "Output directory")->required();
  decompose->add_option("--lambda", dopt.lambda, "Penalty weight")
      ->required()
      ->check(CLI::PositiveNumber);
  decompose->add_option("--tol", dopt.tol)->check(CLI::PositiveNumber);
  decompose->add_option("--max-iter", dopt.max_iter)->check(CLI::PositiveNumber);

  detail::CodelengthOptions copt;
  CLI::App* codelength =
      app.add_subcommand("codelength", "Score a given (A, E) pair against the data");
  codelength->add_option("--input", copt.input, "Frame directory or CSV matrix")->required();
  codelength->add_option("--a", copt.a_path, "Low-rank part as CSV")->required();
  codelength->add_option("--e", copt.e_path, "Error part as CSV")->required();
  codelength->add_option("--u-coder", copt.u_coder, "auto | predictive | spherical")
      ->check(CLI::IsMember({"auto", "predictive", "spherical"}));
  codelength->add_option("--delta-e", copt.delta_e, "auto | positive error step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (select->parsed()) return detail::run_select(sopt);
    if (decompose->parsed()) return detail::run_decompose(dopt);
    if (codelength->parsed()) return detail::run_codelength(copt);
    std::cout << app.help();
    return 0;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const consistency_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const invalid_input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const convergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pipeline_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

inline int cli_main(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("lrmdl");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace lrmdl
