#include "anisotikh/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include <json.hpp>

namespace anisotikh {
namespace {

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

void write_pgm_impl(const std::string& path, const ModelImage& image, double lo,
                    double hi) {
  const Grid& g = image.grid;
  std::ofstream out = open_out(path, true);
  out << "P5\n" << g.n_x << " " << g.n_z << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.n_x));
  const double span = hi - lo;
  for (Index r = 0; r < g.n_z; ++r) {
    for (Index c = 0; c < g.n_x; ++c) {
      double t = span > 0.0 ? (image.values[g.index(r, c)] - lo) / span : 0.0;
      t = std::min(1.0, std::max(0.0, t));
      row[static_cast<std::size_t>(c)] =
          static_cast<unsigned char>(std::lround(255.0 * t));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  finish(out, path);
}

}  // namespace

void write_pgm(const std::string& path, const ModelImage& image) {
  write_pgm_impl(path, image, image.values.minCoeff(), image.values.maxCoeff());
}

void write_pgm_range(const std::string& path, const ModelImage& image,
                     double lo, double hi) {
  if (!(hi > lo)) throw ParameterError("write_pgm_range: need hi > lo");
  write_pgm_impl(path, image, lo, hi);
}

void write_f64(const std::string& path, const ModelImage& image) {
  std::ofstream out = open_out(path, true);
  const Index n = image.values.size();
  for (Index i = 0; i < n; ++i) {
    auto bits = std::bit_cast<std::uint64_t>(image.values[i]);
    if constexpr (std::endian::native == std::endian::big)
      bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  finish(out, path);
}

void write_f64_sidecar(const std::string& path, const Grid& grid) {
  nlohmann::json j;
  j["n_x"] = grid.n_x;
  j["n_z"] = grid.n_z;
  j["order"] = "column-stacked";
  j["dtype"] = "float64";
  j["endianness"] = "little";
  std::ofstream out = open_out(path, false);
  out << j.dump(2) << "\n";
  finish(out, path);
}

ModelImage read_f64(const std::string& path, const Grid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  Vector v(grid.n());
  for (Index i = 0; i < grid.n(); ++i) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw IoError("truncated f64 file: " + path);
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big)
      bits = __builtin_bswap64(bits);
    v[i] = std::bit_cast<double>(bits);
  }
  char extra;
  if (in.read(&extra, 1)) throw IoError("trailing bytes in f64 file: " + path);
  return ModelImage(grid, std::move(v));
}

void write_image_set(const std::string& dir, const std::string& name,
                     const ModelImage& image, bool pgm, bool f64,
                     std::optional<std::pair<double, double>> fixed_range) {
  const std::string base = dir + "/" + name;
  if (pgm) {
    if (fixed_range)
      write_pgm_range(base + ".pgm", image, fixed_range->first,
                      fixed_range->second);
    else
      write_pgm(base + ".pgm", image);
  }
  if (f64) {
    write_f64(base + ".f64", image);
    write_f64_sidecar(base + ".json", image.grid);
  }
}

void write_history_csv(const std::string& path, const SolveHistory& history) {
  std::ofstream out = open_out(path, false);
  out << "iter,U,sq_discrepancy,mu,relerr,dxprime_norm,dzprime_norm\n";
  char buf[256];
  for (const HistoryRecord& r : history.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.iteration, r.upper_value, r.sq_discrepancy, r.mu,
                  r.rel_error ? *r.rel_error
                              : std::numeric_limits<double>::quiet_NaN(),
                  r.dxprime_norm, r.dzprime_norm);
    out << buf;
  }
  finish(out, path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out = open_out(path, false);
  out << content;
  finish(out, path);
}

}  // namespace anisotikh
