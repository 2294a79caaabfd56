// Generates a small synthetic surveillance stack (smooth rank-2 background,
// sparse bright foreground), saves it as PGM frames, selects the model by
// total codelength, and exports the artifact set.
//
//   synth_stack [output-directory]    (default ./synth_stack_out)
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "lrmdl/lrmdl.hpp"

namespace {

lrmdl::Vector normalized(lrmdl::Vector v) { return v / v.norm(); }

lrmdl::DataMatrix synthetic_stack() {
  const int h = 16, w = 16, m = h * w, n = 96;

  lrmdl::Matrix U(m, 2);
  lrmdl::Vector base(m);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      base(r * w + c) = 12.0 + std::sin(2.0 * M_PI * (0.8 * r / h + 0.6 * c / w) + 0.4);
  U.col(0) = normalized(base);
  lrmdl::Vector sway(m);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      sway(r * w + c) = std::sin(2.0 * M_PI * (2.0 * r / h + 1.0 * c / w) + 1.3);
  U.col(1) = normalized(sway);

  lrmdl::Matrix V(n, 2);
  for (int t = 0; t < n; ++t) {
    V(t, 0) = 1.0 + 0.05 * std::sin(2.0 * M_PI * t / n);
    V(t, 1) = std::sin(2.0 * M_PI * 3.0 * t / n + 0.7);
  }
  V.col(0) = normalized(V.col(0));
  V.col(1) = normalized(V.col(1));

  lrmdl::Vector sigma(2);
  sigma << 128.0 / (U.col(0).mean() * V.col(0).mean()), 900.0;
  lrmdl::Matrix X = U * sigma.asDiagonal() * V.transpose();

  // A bright 3x3 blob walking across the scene, plus scattered specks.
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> speck(0, m - 1);
  for (int t = 0; t < n; ++t) {
    const int cr = 3 + (t * (h - 6)) / n;
    const int cc = 3 + (t * 2 * (w - 6)) / n % (w - 6);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) X((cr + dr) * w + (cc + dc), t) += 70.0;
    for (int s = 0; s < 4; ++s) X(speck(rng), t) += 55.0;
  }

  X = X.array().round().min(255.0).max(0.0).matrix();
  return lrmdl::DataMatrix{X, lrmdl::FrameShape{h, w}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out = argc > 1 ? argv[1] : "synth_stack_out";

  const lrmdl::DataMatrix X = synthetic_stack();
  lrmdl::export_frame_sequence(X.values, *X.frame_shape, out / "frames", "frame");
  std::printf("wrote %d input frames of %dx%d to %s\n", static_cast<int>(X.values.cols()),
              X.frame_shape->height, X.frame_shape->width, (out / "frames").c_str());

  const lrmdl::SelectionReport report =
      lrmdl::select_model(X, lrmdl::default_schedule(X.values, 16));

  std::printf("\n%12s %6s %14s\n", "lambda", "rank", "total bits");
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const lrmdl::ModelCandidate& c = report.candidates[i];
    if (std::isinf(c.lambda))
      std::printf("%12s ", "(empty)");
    else if (c.lambda == 0.0)
      std::printf("%12s ", "(raw)");
    else
      std::printf("%12.4f ", c.lambda);
    if (c.solved)
      std::printf("%6d %14.2f%s\n", c.rank, c.allocation.total.bits,
                  i == report.best_index ? "  <== selected" : "");
    else
      std::printf("%6s %14s\n", "-", "did not solve");
  }

  const lrmdl::ExportResult artifacts = lrmdl::export_artifacts(report, X.frame_shape, out);
  std::printf("\n%d artifact files in %s\n", static_cast<int>(artifacts.written.size()),
              out.c_str());
  return 0;
}
