#pragma once

// Probability fusion, binary confusion counts, detection metrics and their
// mean/std aggregation over folds.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "prt/matrix.hpp"

namespace prt::metrics {

/// Throws ValidationError unless every entry is in [0, 1] and the entries sum
/// to 1 within 1e-9.
void validate_probability(std::span<const double> p);

struct Fusion {
  int label = 0;
  Vector fused;
};

/// fused = (rho + q) / 2, label = argmax with the lowest index on ties.
Fusion fuse_predict(std::span<const double> rho, std::span<const double> q);

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Labels equal to `positive_class` count as positive, everything else as
/// negative.
ConfusionCounts confusion_counts(std::span<const int> predictions, std::span<const int> truth,
                                 int positive_class);

struct Metrics {
  double sen = 0.0;  // percent
  double spe = 0.0;  // percent
  double ppv = 0.0;  // fraction
  double f1 = 0.0;   // fraction
  double acc = 0.0;  // percent
  /// Set when any ratio had a zero denominator and was reported as 0.
  bool degenerate = false;
};

/// SEN = TP/(TP+FN)*100, SPE = TN/(TN+FP)*100, PPV = TP/(TP+FP),
/// F1 = 2*PPV*TPR/(PPV+TPR), ACC = (TP+TN)/total*100.
Metrics compute_metrics(const ConfusionCounts& c);

enum class Method { tl, prt_tl, all };

std::string to_string(Method m);
Method parse_method(const std::string& s);
inline constexpr Method kAllMethods[] = {Method::tl, Method::prt_tl, Method::all};

struct FoldRow {
  std::size_t fold = 0;
  int ratio = 100;
  Method method = Method::tl;
  double sen = 0.0;
  double spe = 0.0;
  double f1 = 0.0;
  double acc = 0.0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single fold
};

struct AggregateRow {
  int ratio = 100;
  Method method = Method::tl;
  std::size_t folds = 0;
  Summary sen, spe, f1, acc;
};

struct MetricsReport {
  std::vector<FoldRow> per_fold;
  std::vector<AggregateRow> aggregated;  // sorted by (ratio, method)

  const AggregateRow* find(int ratio, Method method) const;
};

Summary summarize(std::span<const double> values);

/// Groups rows by (ratio, method); rows are ordered by (ratio, method, fold)
/// in the returned report.
MetricsReport aggregate_folds(std::vector<FoldRow> rows);

/// `ratio,method,metric,mean,std`, one line per (ratio, method, metric).
void write_csv(std::ostream& out, const MetricsReport& report);
/// `fold,ratio,method,sen,spe,f1,acc`, one line per evaluated cell.
void write_fold_csv(std::ostream& out, const MetricsReport& report);
/// One aligned table per metric: ratios down, TL / PRT+TL / All across,
/// cells as mean±std.
void write_tables(std::ostream& out, const MetricsReport& report);

}  // namespace prt::metrics
