#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "lrmdl/types.hpp"

// Byte-exact artifact I/O: binary 8-bit PGM frame stacks and CSV matrices at
// 17 significant digits. Writers emit one canonical form so identical data
// always produce identical bytes.

namespace lrmdl {

/// Row-major 8-bit grayscale raster.
struct PgmImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;
};

/// Provenance of a loaded frame stack: one file per column of X, ordered
/// lexicographically by filename.
struct FrameStackManifest {
  std::filesystem::path directory;
  std::vector<std::string> files;
  FrameShape frame_shape;
  int pixel_depth = 8;
};

namespace detail {

inline std::string read_file_bytes(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw io_error(file.string() + ": cannot open for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& file, const std::string& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error(file.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error(file.string() + ": write failed");
}

// Next whitespace-delimited PGM header token; '#' starts a comment running to
// end of line.
inline std::string next_pgm_token(const std::string& bytes, std::size_t& pos,
                                  const std::filesystem::path& file) {
  while (pos < bytes.size()) {
    const unsigned char c = static_cast<unsigned char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#')
    ++pos;
  if (start == pos) throw format_error(file.string() + ": truncated PGM header");
  return bytes.substr(start, pos - start);
}

inline int parse_pgm_int(const std::string& bytes, std::size_t& pos,
                         const std::filesystem::path& file) {
  const std::string token = next_pgm_token(bytes, pos, file);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw format_error(file.string() + ": malformed PGM header field '" + token + "'");
  return value;
}

inline std::string frame_file_name(const std::string& prefix, int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", index);
  return prefix + "_" + buf + ".pgm";
}

inline std::uint8_t to_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

}  // namespace detail

inline PgmImage load_pgm(const std::filesystem::path& file) {
  const std::string bytes = detail::read_file_bytes(file);
  std::size_t pos = 0;
  if (detail::next_pgm_token(bytes, pos, file) != "P5")
    throw format_error(file.string() + ": not a binary PGM (magic is not P5)");
  const int width = detail::parse_pgm_int(bytes, pos, file);
  const int height = detail::parse_pgm_int(bytes, pos, file);
  const int maxval = detail::parse_pgm_int(bytes, pos, file);
  if (width < 1 || height < 1)
    throw format_error(file.string() + ": non-positive image dimensions");
  if (maxval != 255) throw format_error(file.string() + ": maxval must be 255 (8-bit)");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw format_error(file.string() + ": missing raster separator");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < need) throw format_error(file.string() + ": truncated raster data");

  PgmImage img;
  img.height = height;
  img.width = width;
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

inline void save_pgm(const PgmImage& img, const std::filesystem::path& file) {
  if (img.height < 1 || img.width < 1 ||
      img.pixels.size() != static_cast<std::size_t>(img.height) * img.width)
    throw invalid_input_error("save_pgm: inconsistent image dimensions");
  std::string bytes = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
  bytes.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  detail::write_file_bytes(file, bytes);
}

/// Loads every *.pgm in dir (lexicographic order) as one column of X, rows
/// being the row-major raster of each frame.
inline std::pair<DataMatrix, FrameStackManifest> load_frame_stack(
    const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw io_error(dir.string() + ": not a readable directory");

  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw format_error(dir.string() + ": no .pgm frames found");

  DataMatrix data;
  FrameStackManifest manifest;
  manifest.directory = dir;
  manifest.files = names;

  for (std::size_t j = 0; j < names.size(); ++j) {
    const PgmImage img = load_pgm(dir / names[j]);
    if (j == 0) {
      manifest.frame_shape = FrameShape{img.height, img.width};
      data.values.resize(static_cast<Eigen::Index>(img.height) * img.width,
                         static_cast<Eigen::Index>(names.size()));
    } else if (img.height != manifest.frame_shape.height ||
               img.width != manifest.frame_shape.width) {
      throw format_error(names[j] + ": frame is " + std::to_string(img.width) + "x" +
                         std::to_string(img.height) + " but " + names[0] + " set the shape");
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = img.pixels[i];
  }
  data.frame_shape = manifest.frame_shape;
  return {std::move(data), std::move(manifest)};
}

/// Writes each column of M as <prefix>_NNNN.pgm (0-based), entries rounded
/// and clamped to 0-255. Inverse of load_frame_stack for in-range data.
inline std::vector<std::filesystem::path> export_frame_sequence(
    const Matrix& M, const FrameShape& shape, const std::filesystem::path& dir,
    const std::string& prefix) {
  if (static_cast<Eigen::Index>(shape.height) * shape.width != M.rows())
    throw invalid_input_error("export_frame_sequence: frame shape does not match row count");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error(dir.string() + ": cannot create directory: " + ec.message());
  std::vector<std::filesystem::path> written;
  PgmImage img;
  img.height = shape.height;
  img.width = shape.width;
  img.pixels.resize(static_cast<std::size_t>(M.rows()));
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      img.pixels[static_cast<std::size_t>(i)] = detail::to_pixel(M(i, j));
    const std::filesystem::path file =
        dir / detail::frame_file_name(prefix, static_cast<int>(j));
    save_pgm(img, file);
    written.push_back(file);
  }
  return written;
}

namespace detail {

inline void append_full_precision(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

}  // namespace detail

/// Canonical CSV: LF line endings, 17 significant digits, no quoting. Loading
/// what was saved reproduces every double bit for bit.
inline void save_matrix_csv(const Matrix& M, const std::filesystem::path& file) {
  if (M.rows() < 1 || M.cols() < 1) throw invalid_input_error("save_matrix_csv: empty matrix");
  std::string out;
  out.reserve(static_cast<std::size_t>(M.size()) * 12);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out.push_back(',');
      detail::append_full_precision(out, M(i, j));
    }
    out.push_back('\n');
  }
  detail::write_file_bytes(file, out);
}

inline DataMatrix load_matrix_csv(const std::filesystem::path& file) {
  const std::string bytes = detail::read_file_bytes(file);

  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) eol = bytes.size();
    std::size_t end = eol;
    if (end > pos && bytes[end - 1] == '\r') --end;
    const std::string_view line(bytes.data() + pos, end - pos);
    pos = eol + 1;
    if (line.empty() && pos >= bytes.size()) break;

    std::vector<double> row;
    std::size_t cell_start = 0;
    while (true) {
      std::size_t comma = line.find(',', cell_start);
      const std::size_t cell_end = comma == std::string_view::npos ? line.size() : comma;
      const std::string_view cell = line.substr(cell_start, cell_end - cell_start);
      double value = 0.0;
      const auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), value,
                          std::chars_format::general);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value))
        throw format_error(file.string() + ": row " + std::to_string(rows.size() + 1) +
                           ", column " + std::to_string(row.size() + 1) +
                           ": not a finite number");
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw format_error(file.string() + ": row " + std::to_string(rows.size() + 1) + " has " +
                         std::to_string(row.size()) + " cells, expected " +
                         std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw format_error(file.string() + ": empty CSV");

  DataMatrix data;
  data.values.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return data;
}

}  // namespace lrmdl
