#ifndef LRSD_TESTS_SUPPORT_HPP
#define LRSD_TESTS_SUPPORT_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "lrsd/image.hpp"
#include "lrsd/linalg.hpp"
#include "lrsd/model.hpp"

namespace testsupport {

using lrsd::Index;
using lrsd::Matrix;
using lrsd::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  return scale * lrsd::gaussian_matrix(rows, cols, rng);
}

/// Ground-truth planted instance A = L0 + S0 with a rank-r L0 and a sparse S0
/// supported on `sparse_count` uniformly drawn entries.
struct PlantedInstance {
  Matrix a;
  Matrix l0;
  Matrix s0;
  std::vector<Index> support;  // row-major linear indices
};

inline PlantedInstance make_planted(Index m, Index n, Index rank, Index sparse_count,
                                    double sparse_lo, double sparse_hi, std::mt19937_64& rng) {
  PlantedInstance inst;
  inst.l0 = random_matrix(m, rank, rng) * random_matrix(rank, n, rng);
  inst.s0 = Matrix::Zero(m, n);

  std::vector<Index> all(static_cast<std::size_t>(m * n));
  std::iota(all.begin(), all.end(), Index{0});
  for (Index i = 0; i < sparse_count; ++i) {
    std::uniform_int_distribution<Index> pick(i, m * n - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(sparse_count));
  std::sort(all.begin(), all.end());
  std::uniform_real_distribution<double> mag(sparse_lo, sparse_hi);
  std::bernoulli_distribution coin(0.5);
  for (Index idx : all) {
    const double v = mag(rng) * (coin(rng) ? 1.0 : -1.0);
    inst.s0(idx / n, idx % n) = v;
  }
  inst.support = std::move(all);
  inst.a = inst.l0 + inst.s0;
  return inst;
}

inline std::vector<Index> support_of(const Matrix& s, double tol = 0.0) {
  std::vector<Index> out;
  for (Index r = 0; r < s.rows(); ++r)
    for (Index c = 0; c < s.cols(); ++c)
      if (std::abs(s(r, c)) > tol) out.push_back(r * s.cols() + c);
  return out;
}

/// Largest principal angle between the column spans of two orthonormal bases,
/// measured through its sine (robust near zero).
inline double subspace_angle_sin(const Matrix& u1, const Matrix& u2) {
  const Matrix residual = u2 - u1 * (u1.transpose() * u2);
  const auto sigma = lrsd::full_svd(residual).singular_values;
  return sigma.size() ? sigma(0) : 0.0;
}

inline double angle_to_vector(const Matrix& basis, const Vector& a) {
  const double cosv = (basis.transpose() * a).norm() / a.norm();
  return std::acos(std::min(1.0, std::max(-1.0, cosv)));
}

/// 30-frame synthetic sequence: smooth static background plus a bright square
/// sweeping across the grid. Returns frames and per-frame truth masks.
struct SyntheticScene {
  std::vector<Matrix> frames;
  std::vector<lrsd::Mask> truth;
  Index height = 0;
  Index width = 0;
};

inline SyntheticScene make_moving_square_scene(Index height = 16, Index width = 16,
                                               Index frame_count = 30, Index square = 4,
                                               double lift = 0.45) {
  SyntheticScene scene;
  scene.height = height;
  scene.width = width;
  Matrix background(height, width);
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c < width; ++c)
      background(r, c) = 0.2 + 0.3 * (static_cast<double>(r + c) /
                                      static_cast<double>(height + width - 2));
  for (Index t = 0; t < frame_count; ++t) {
    Matrix frame = background;
    lrsd::Mask mask;
    mask.height = height;
    mask.width = width;
    mask.bits.setConstant(height, width, false);
    const Index r0 = (t * (height - square)) / std::max<Index>(frame_count - 1, 1);
    const Index c0 = (t * (width - square)) / std::max<Index>(frame_count - 1, 1);
    for (Index r = r0; r < r0 + square; ++r) {
      for (Index c = c0; c < c0 + square; ++c) {
        frame(r, c) += lift;
        mask.bits(r, c) = true;
      }
    }
    scene.frames.push_back(std::move(frame));
    scene.truth.push_back(std::move(mask));
  }
  return scene;
}

inline void write_scene_pgm(const SyntheticScene& scene, const std::string& frame_dir,
                            const std::string& truth_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(frame_dir);
  fs::create_directories(truth_dir);
  for (std::size_t t = 0; t < scene.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu", t);
    const Matrix& f = scene.frames[t];
    std::vector<unsigned char> raster(
        static_cast<std::size_t>(scene.height) * static_cast<std::size_t>(scene.width));
    for (Index r = 0; r < scene.height; ++r)
      for (Index c = 0; c < scene.width; ++c)
        raster[static_cast<std::size_t>(r * scene.width + c)] =
            static_cast<unsigned char>(std::lround(std::clamp(f(r, c), 0.0, 1.0) * 255.0));
    lrsd::detail::write_pgm(frame_dir + "/" + name + ".pgm", scene.height, scene.width, raster);
    lrsd::write_mask(scene.truth[t], truth_dir + "/" + name + ".pgm");
  }
}

/// Stationary stream: frames from a fixed rank-k model with sporadic
/// additive outliers, for streaming-solver convergence checks.
inline std::vector<Vector> make_stationary_stream(Index n, Index rank, Index frame_count,
                                                  double outlier_rate, double outlier_span,
                                                  std::mt19937_64& rng) {
  const Matrix truth_raw = random_matrix(n, rank, rng);
  Eigen::HouseholderQR<Matrix> qr(truth_raw);
  const Matrix truth = qr.householderQ() * Matrix::Identity(n, rank);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> frames;
  frames.reserve(static_cast<std::size_t>(frame_count));
  for (Index t = 0; t < frame_count; ++t) {
    Vector a = truth * random_matrix(rank, 1, rng).col(0);
    for (Index i = 0; i < n; ++i) {
      if (unit(rng) < outlier_rate) a(i) += outlier_span * (unit(rng) - 0.5);
    }
    frames.push_back(std::move(a));
  }
  return frames;
}

/// 8-bit grayscale PNG writer for test fixtures; values clamped to [0,1].
inline void write_gray_png(const std::string& path, const Matrix& image) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw lrsd::IoError("cannot write '" + path + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw lrsd::IoError("png write failed for '" + path + "'");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols()),
               static_cast<png_uint_32>(image.rows()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<std::size_t>(image.cols()));
  for (Index r = 0; r < image.rows(); ++r) {
    for (Index c = 0; c < image.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(
          std::lround(std::clamp(image(r, c), 0.0, 1.0) * 255.0));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline std::string temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("lrsd_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testsupport

#endif  // LRSD_TESTS_SUPPORT_HPP
