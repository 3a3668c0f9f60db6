#ifndef LRSD_METRICS_HPP
#define LRSD_METRICS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "lrsd/errors.hpp"
#include "lrsd/image.hpp"

namespace lrsd {

/// Pixel confusion counts; foreground is the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

/// The seven classification rates. Degenerate 0/0 ratios are reported as 0
/// with the flag set instead of NaN.
struct MetricReport {
  double detection_rate = 0;  // recall
  double specificity = 0;
  double fpr = 0;
  double fnr = 0;
  double pwc = 0;  // percent, in [0, 100]
  double precision = 0;
  double f_measure = 0;
  bool degenerate = false;

  // Arithmetic mean of per-frame F-measures; set by aggregate() only.
  std::optional<double> macro_f_mean;
};

inline ConfusionCounts confusion(const Mask& mask, const Mask& truth) {
  if (mask.height != truth.height || mask.width != truth.width) {
    throw InputError("confusion: mask is " + std::to_string(mask.height) + "x" +
                     std::to_string(mask.width) + ", truth is " + std::to_string(truth.height) +
                     "x" + std::to_string(truth.width));
  }
  ConfusionCounts c;
  for (Index r = 0; r < mask.height; ++r) {
    for (Index col = 0; col < mask.width; ++col) {
      const bool predicted = mask.bits(r, col);
      const bool actual = truth.bits(r, col);
      if (predicted && actual) ++c.tp;
      else if (!predicted && !actual) ++c.tn;
      else if (predicted) ++c.fp;
      else ++c.fn;
    }
  }
  return c;
}

inline MetricReport compute_metrics(const ConfusionCounts& c) {
  MetricReport rep;
  auto ratio = [&rep](std::uint64_t num, std::uint64_t den) {
    if (den == 0) {
      rep.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  rep.detection_rate = ratio(c.tp, c.tp + c.fn);
  rep.specificity = ratio(c.tn, c.tn + c.fp);
  rep.fpr = ratio(c.fp, c.fp + c.tn);
  rep.fnr = ratio(c.fn, c.tp + c.fn);
  rep.pwc = 100.0 * ratio(c.fn + c.fp, c.total());
  rep.precision = ratio(c.tp, c.tp + c.fp);
  const double dr_plus_p = rep.detection_rate + rep.precision;
  if (dr_plus_p == 0) {
    rep.degenerate = true;
    rep.f_measure = 0;
  } else {
    rep.f_measure = 2.0 * rep.detection_rate * rep.precision / dr_plus_p;
  }
  return rep;
}

/// Micro-average: pool the confusion counts, then compute the metrics once.
/// The macro mean of per-frame F-measures rides along for reference.
inline MetricReport aggregate(const std::vector<MetricReport>& reports,
                              const std::vector<ConfusionCounts>& counts) {
  if (reports.empty() || reports.size() != counts.size()) {
    throw ArgumentError("aggregate: need matching nonempty report/count sequences");
  }
  ConfusionCounts pooled;
  double f_sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    pooled += counts[i];
    f_sum += reports[i].f_measure;
  }
  MetricReport rep = compute_metrics(pooled);
  rep.macro_f_mean = f_sum / static_cast<double>(reports.size());
  return rep;
}

}  // namespace lrsd

#endif  // LRSD_METRICS_HPP
