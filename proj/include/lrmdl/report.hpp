#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lrmdl/io.hpp"
#include "lrmdl/selection.hpp"

// Report serialization and artifact export. report.json stores the selection
// summary at full precision and parses back to the identical ReportFile; the
// heavyweight factor matrices live in their own CSV/PGM artifacts.

namespace lrmdl {

/// Scored-candidate summary: everything about a candidate except the factor
/// and error matrices themselves.
struct CandidateSummary {
  CandidateKind kind = CandidateKind::swept;
  double lambda = 0.0;
  bool solved = false;
  int rank = 0;
  QuantizationGrid grid;
  BitAllocation allocation;
  SolveStats stats;
};

/// Serializable view of a SelectionReport.
struct ReportFile {
  std::vector<double> schedule;
  SolverConfig solver;
  UCoderMode u_mode = UCoderMode::spherical;
  std::size_t best_index = 0;
  std::vector<CandidateSummary> candidates;
};

inline ReportFile summarize(const SelectionReport& report) {
  ReportFile file;
  file.schedule = report.schedule.values;
  file.solver = report.solver;
  file.u_mode = report.u_mode;
  file.best_index = report.best_index;
  for (const ModelCandidate& c : report.candidates)
    file.candidates.push_back(
        CandidateSummary{c.kind, c.lambda, c.solved, c.rank, c.grid, c.allocation, c.stats});
  return file;
}

namespace detail {

inline std::string kind_name(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::swept: return "swept";
    case CandidateKind::rank_zero_reference: return "rank0_reference";
    case CandidateKind::raw_reference: return "raw_reference";
  }
  throw invalid_input_error("unknown candidate kind");
}

inline CandidateKind kind_from(const std::string& name) {
  if (name == "swept") return CandidateKind::swept;
  if (name == "rank0_reference") return CandidateKind::rank_zero_reference;
  if (name == "raw_reference") return CandidateKind::raw_reference;
  throw format_error("report: unknown candidate kind '" + name + "'");
}

inline std::string mode_name(UCoderMode mode) {
  return mode == UCoderMode::predictive ? "predictive" : "spherical";
}

inline UCoderMode mode_from(const std::string& name) {
  if (name == "predictive") return UCoderMode::predictive;
  if (name == "spherical") return UCoderMode::spherical;
  throw format_error("report: unknown u-coder mode '" + name + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const ReportFile& file) {
  nlohmann::json doc;
  doc["format"] = "lrmdl-report";
  doc["version"] = 1;
  doc["schedule"] = file.schedule;
  doc["solver"] = {{"tol", file.solver.tol},
                   {"max_iter", file.solver.max_iter},
                   {"rho", file.solver.rho},
                   {"mu0", file.solver.mu0 ? nlohmann::json(*file.solver.mu0)
                                           : nlohmann::json(nullptr)}};
  doc["u_coder"] = detail::mode_name(file.u_mode);
  doc["best_index"] = file.best_index;
  doc["candidates"] = nlohmann::json::array();
  for (const CandidateSummary& c : file.candidates) {
    // JSON has no infinity; the rank-0 reference's lambda serializes as null.
    nlohmann::json entry = {
        {"kind", detail::kind_name(c.kind)},
        {"lambda", std::isinf(c.lambda) ? nlohmann::json(nullptr) : nlohmann::json(c.lambda)},
        {"solved", c.solved},
        {"rank", c.rank},
        {"grid",
         {{"delta_sigma", c.grid.delta_sigma},
          {"delta_u", c.grid.delta_u},
          {"delta_v", c.grid.delta_v},
          {"delta_e", c.grid.delta_e}}},
        {"bits",
         {{"u", c.allocation.l_u.bits},
          {"sigma", c.allocation.l_sigma.bits},
          {"v", c.allocation.l_v.bits},
          {"e", c.allocation.l_e.bits},
          {"total", c.allocation.total.bits}}},
        {"stats",
         {{"iterations", c.stats.iterations},
          {"residual", c.stats.residual},
          {"converged", c.stats.converged}}}};
    doc["candidates"].push_back(std::move(entry));
  }
  return doc;
}

inline ReportFile report_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "lrmdl-report")
      throw format_error("report: not an lrmdl report document");
    ReportFile file;
    file.schedule = doc.at("schedule").get<std::vector<double>>();
    const nlohmann::json& solver = doc.at("solver");
    file.solver.tol = solver.at("tol").get<double>();
    file.solver.max_iter = solver.at("max_iter").get<int>();
    file.solver.rho = solver.at("rho").get<double>();
    if (!solver.at("mu0").is_null()) file.solver.mu0 = solver.at("mu0").get<double>();
    file.u_mode = detail::mode_from(doc.at("u_coder").get<std::string>());
    file.best_index = doc.at("best_index").get<std::size_t>();
    for (const nlohmann::json& entry : doc.at("candidates")) {
      CandidateSummary c;
      c.kind = detail::kind_from(entry.at("kind").get<std::string>());
      c.lambda = entry.at("lambda").is_null() ? std::numeric_limits<double>::infinity()
                                              : entry.at("lambda").get<double>();
      c.solved = entry.at("solved").get<bool>();
      c.rank = entry.at("rank").get<int>();
      const nlohmann::json& grid = entry.at("grid");
      c.grid.delta_sigma = grid.at("delta_sigma").get<double>();
      c.grid.delta_u = grid.at("delta_u").get<double>();
      c.grid.delta_v = grid.at("delta_v").get<double>();
      c.grid.delta_e = grid.at("delta_e").get<double>();
      const nlohmann::json& bits = entry.at("bits");
      c.allocation.l_u.bits = bits.at("u").get<double>();
      c.allocation.l_sigma.bits = bits.at("sigma").get<double>();
      c.allocation.l_v.bits = bits.at("v").get<double>();
      c.allocation.l_e.bits = bits.at("e").get<double>();
      c.allocation.total.bits = bits.at("total").get<double>();
      const nlohmann::json& stats = entry.at("stats");
      c.stats.iterations = stats.at("iterations").get<int>();
      c.stats.residual = stats.at("residual").get<double>();
      c.stats.converged = stats.at("converged").get<bool>();
      file.candidates.push_back(std::move(c));
    }
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("report: malformed document: ") + e.what());
  }
}

inline std::string serialize_report(const ReportFile& file) { return to_json(file).dump(2) + "\n"; }

inline ReportFile parse_report(const std::string& text) {
  try {
    return report_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("report: invalid JSON: ") + e.what());
  }
}

/// Files written by export_artifacts plus any non-fatal warnings.
struct ExportResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

/// Writes the full artifact set for a finished selection run: curve.csv and
/// report.json always; timecourses.csv for the best candidate; eigen-frame
/// and background/foreground PGM sequences when the frame geometry is known.
inline ExportResult export_artifacts(const SelectionReport& report,
                                     const std::optional<FrameShape>& frame_shape,
                                     const std::filesystem::path& out_dir) {
  if (report.candidates.empty() || report.best_index >= report.candidates.size())
    throw invalid_input_error("export_artifacts: report has no best candidate");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error(out_dir.string() + ": cannot create output directory");

  ExportResult result;
  const auto keep = [&](std::filesystem::path p) { result.written.push_back(std::move(p)); };

  std::string curve = "lambda,rank,l_u,l_sigma,l_v,l_e,total\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const ModelCandidate& c : report.candidates) {
    detail::append_full_precision(curve, c.lambda);
    curve.push_back(',');
    detail::append_full_precision(curve, c.solved ? static_cast<double>(c.rank) : nan);
    for (const double bits : {c.solved ? c.allocation.l_u.bits : nan,
                              c.solved ? c.allocation.l_sigma.bits : nan,
                              c.solved ? c.allocation.l_v.bits : nan,
                              c.solved ? c.allocation.l_e.bits : nan,
                              c.solved ? c.allocation.total.bits : nan}) {
      curve.push_back(',');
      detail::append_full_precision(curve, bits);
    }
    curve.push_back('\n');
  }
  detail::write_file_bytes(out_dir / "curve.csv", curve);
  keep(out_dir / "curve.csv");

  detail::write_file_bytes(out_dir / "report.json", serialize_report(summarize(report)));
  keep(out_dir / "report.json");

  const ModelCandidate& best = report.candidates[report.best_index];
  if (best.rank > 0) {
    Matrix timecourses(best.rank, best.factors.V.rows());
    for (int i = 0; i < best.rank; ++i)
      timecourses.row(i) = best.factors.sigma(i) * best.factors.V.col(i).transpose();
    save_matrix_csv(timecourses, out_dir / "timecourses.csv");
  } else {
    detail::write_file_bytes(out_dir / "timecourses.csv", "");
  }
  keep(out_dir / "timecourses.csv");

  if (!frame_shape) {
    result.warnings.push_back(
        "frame shape unknown: eigen-frame and frame exports skipped, CSV artifacts written");
    return result;
  }

  for (int i = 0; i < best.rank; ++i) {
    const Vector u = best.factors.U.col(i);
    const double lo = u.minCoeff();
    const double hi = u.maxCoeff();
    PgmImage img;
    img.height = frame_shape->height;
    img.width = frame_shape->width;
    img.pixels.resize(static_cast<std::size_t>(u.size()));
    for (Eigen::Index p = 0; p < u.size(); ++p)
      img.pixels[static_cast<std::size_t>(p)] =
          hi > lo ? detail::to_pixel(255.0 * (u(p) - lo) / (hi - lo)) : std::uint8_t{128};
    const std::filesystem::path file = out_dir / ("eigenframe_" + std::to_string(i + 1) + ".pgm");
    save_pgm(img, file);
    keep(file);
  }

  const Matrix recon = reconstruct(best.factors);
  const Matrix background =
      best.grid.delta_e * (recon / best.grid.delta_e).array().round().matrix();
  for (auto& p : export_frame_sequence(background, *frame_shape, out_dir, "background")) keep(p);
  const Matrix foreground = best.E.array() + 128.0;
  for (auto& p : export_frame_sequence(foreground, *frame_shape, out_dir, "foreground")) keep(p);
  return result;
}

}  // namespace lrmdl
