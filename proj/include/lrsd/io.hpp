#ifndef LRSD_IO_HPP
#define LRSD_IO_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "lrsd/metrics.hpp"
#include "lrsd/model.hpp"

namespace lrsd {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr std::uint32_t kDlmFormatVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace detail

/// Matrix container format: "DLAM", u32 version, u64 rows, u64 cols, then
/// rows*cols little-endian doubles in column-major order.
inline void write_dlm(const std::string& path, const Matrix& m) {
  std::string header;
  header.reserve(24);
  header += "DLAM";
  detail::put_u32(header, kDlmFormatVersion);
  detail::put_u64(header, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(header, static_cast<std::uint64_t>(m.cols()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::string payload;
  payload.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      detail::put_u64(payload, std::bit_cast<std::uint64_t>(m(i, j)));
    }
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

inline Matrix read_dlm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  unsigned char header[24];
  in.read(reinterpret_cast<char*>(header), 24);
  if (in.gcount() != 24) {
    throw FormatError("'" + path + "': truncated header", static_cast<std::size_t>(in.gcount()));
  }
  if (header[0] != 'D' || header[1] != 'L' || header[2] != 'A' || header[3] != 'M') {
    throw FormatError("'" + path + "': bad magic", 0);
  }
  const std::uint32_t version = detail::get_u32(header + 4);
  if (version != kDlmFormatVersion) {
    throw FormatError("'" + path + "': unsupported version " + std::to_string(version), 4);
  }
  const std::uint64_t rows = detail::get_u64(header + 8);
  const std::uint64_t cols = detail::get_u64(header + 16);
  if (rows == 0 || cols == 0 || rows > (1u << 30) || cols > (1u << 30)) {
    throw FormatError("'" + path + "': implausible dimensions", 8);
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * 8);
  std::size_t offset = 24;
  for (std::uint64_t j = 0; j < cols; ++j) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
      throw FormatError("'" + path + "': truncated payload",
                        offset + static_cast<std::size_t>(in.gcount()));
    }
    for (std::uint64_t i = 0; i < rows; ++i) {
      m(static_cast<Index>(i), static_cast<Index>(j)) =
          std::bit_cast<double>(detail::get_u64(buf.data() + i * 8));
    }
    offset += buf.size();
  }
  return m;
}

/// Per-iteration trace as CSV. Wall time is deliberately not serialized so
/// identical runs produce identical bytes.
inline void write_trace_csv(const std::string& path,
                            const std::vector<std::pair<int, SolverTrace>>& windows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "window,iter,objective,residual,rank,cardinality,termination\n";
  char line[256];
  for (const auto& [window, trace] : windows) {
    const char* reason = trace.reason == Termination::converged ? "converged" : "max_iter";
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
      const TraceRecord& r = trace.records[i];
      std::snprintf(line, sizeof(line), "%d,%zu,%.12g,%.12g,%lld,%lld,%s\n", window, i + 1,
                    r.objective, r.residual, static_cast<long long>(r.rank_estimate),
                    static_cast<long long>(r.sparse_cardinality),
                    i + 1 == trace.records.size() ? reason : "");
      out << line;
    }
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

/// Flat key=value run manifest, insertion-ordered.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    entries_.emplace_back(key, buf);
  }
  void set(const std::string& key, long long value) {
    entries_.emplace_back(key, std::to_string(value));
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const auto& [k, v] : entries_) out << k << "=" << v << "\n";
    if (!out) throw IoError("short write to '" + path + "'");
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct VideoMetricsRow {
  std::string video;
  std::uint64_t frames = 0;
  ConfusionCounts counts;
  MetricReport report;
};

/// Evaluation report: one row per video, then a pooled AVERAGE row.
inline void write_metrics_csv(const std::string& path,
                              const std::vector<VideoMetricsRow>& rows) {
  if (rows.empty()) throw ArgumentError("write_metrics_csv: no rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "video,frames,TP,TN,FP,FN,recall,specificity,fpr,fnr,pwc,precision,fmeasure\n";
  char line[512];
  auto emit = [&](const std::string& name, std::uint64_t frames, const ConfusionCounts& c,
                  const MetricReport& r) {
    std::snprintf(line, sizeof(line),
                  "%s,%llu,%llu,%llu,%llu,%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  name.c_str(), static_cast<unsigned long long>(frames),
                  static_cast<unsigned long long>(c.tp), static_cast<unsigned long long>(c.tn),
                  static_cast<unsigned long long>(c.fp), static_cast<unsigned long long>(c.fn),
                  r.detection_rate, r.specificity, r.fpr, r.fnr, r.pwc, r.precision,
                  r.f_measure);
    out << line;
  };
  ConfusionCounts pooled;
  std::uint64_t total_frames = 0;
  for (const auto& row : rows) {
    emit(row.video, row.frames, row.counts, row.report);
    pooled += row.counts;
    total_frames += row.frames;
  }
  emit("AVERAGE", total_frames, pooled, compute_metrics(pooled));
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace lrsd

#endif  // LRSD_IO_HPP
