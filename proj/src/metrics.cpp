#include "prt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

#include "prt/errors.hpp"

namespace prt::metrics {

void validate_probability(std::span<const double> p) {
  if (p.empty()) throw ValidationError("probability vector is empty");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("probability entry outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("probability vector does not sum to 1");
}

Fusion fuse_predict(std::span<const double> rho, std::span<const double> q) {
  if (rho.size() != q.size())
    throw ValidationError("cannot fuse probability vectors of lengths " +
                          std::to_string(rho.size()) + " and " + std::to_string(q.size()));
  validate_probability(rho);
  validate_probability(q);
  Fusion out;
  out.fused.resize(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) out.fused[i] = (rho[i] + q[i]) / 2.0;
  out.label = static_cast<int>(std::ranges::max_element(out.fused) - out.fused.begin());
  return out;
}

ConfusionCounts confusion_counts(std::span<const int> predictions, std::span<const int> truth,
                                 int positive_class) {
  if (predictions.size() != truth.size())
    throw ValidationError("predictions and truth differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool pred = predictions[i] == positive_class;
    const bool real = truth[i] == positive_class;
    if (pred && real) ++c.tp;
    else if (!pred && !real) ++c.tn;
    else if (pred) ++c.fp;
    else ++c.fn;
  }
  return c;
}

Metrics compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ValidationError("no evaluated samples");
  Metrics m;
  auto ratio = [&m](std::uint64_t num, std::uint64_t den) {
    if (den == 0) {
      m.degenerate = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  const double tpr = ratio(c.tp, c.tp + c.fn);
  const double tnr = ratio(c.tn, c.tn + c.fp);
  m.ppv = ratio(c.tp, c.tp + c.fp);
  m.sen = tpr * 100.0;
  m.spe = tnr * 100.0;
  if (m.ppv + tpr > 0.0) {
    m.f1 = 2.0 * m.ppv * tpr / (m.ppv + tpr);
  } else {
    m.f1 = 0.0;
    m.degenerate = true;
  }
  m.acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total()) * 100.0;
  return m;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::tl: return "TL";
    case Method::prt_tl: return "PRT+TL";
    case Method::all: return "All";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "TL") return Method::tl;
  if (s == "PRT+TL") return Method::prt_tl;
  if (s == "All") return Method::all;
  throw ValidationError("unknown method '" + s + "' (expected TL, PRT+TL or All)");
}

const AggregateRow* MetricsReport::find(int ratio, Method method) const {
  for (const AggregateRow& r : aggregated)
    if (r.ratio == ratio && r.method == method) return &r;
  return nullptr;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ValidationError("cannot summarize an empty group");
  Summary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

MetricsReport aggregate_folds(std::vector<FoldRow> rows) {
  if (rows.empty()) throw ValidationError("no fold rows to aggregate");
  std::ranges::sort(rows, [](const FoldRow& a, const FoldRow& b) {
    return std::tuple(a.ratio, a.method, a.fold) < std::tuple(b.ratio, b.method, b.fold);
  });
  MetricsReport report;
  std::map<std::pair<int, Method>, std::vector<const FoldRow*>> groups;
  for (const FoldRow& r : rows) groups[{r.ratio, r.method}].push_back(&r);
  for (const auto& [key, members] : groups) {
    AggregateRow agg;
    agg.ratio = key.first;
    agg.method = key.second;
    agg.folds = members.size();
    auto column = [&](double FoldRow::*field) {
      std::vector<double> v;
      for (const FoldRow* r : members) v.push_back(r->*field);
      return summarize(v);
    };
    agg.sen = column(&FoldRow::sen);
    agg.spe = column(&FoldRow::spe);
    agg.f1 = column(&FoldRow::f1);
    agg.acc = column(&FoldRow::acc);
    report.aggregated.push_back(agg);
  }
  report.per_fold = std::move(rows);
  return report;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct MetricColumn {
  const char* name;
  const char* title;
  Summary AggregateRow::*field;
  int digits;
};

constexpr MetricColumn kColumns[] = {
    {"sen", "SEN (%)", &AggregateRow::sen, 1},
    {"spe", "SPE (%)", &AggregateRow::spe, 1},
    {"f1", "F1", &AggregateRow::f1, 3},
    {"acc", "ACC (%)", &AggregateRow::acc, 1},
};

std::string pad(const std::string& s, std::size_t width) {
  // `±` is two bytes in UTF-8 but one column wide.
  std::size_t columns = 0;
  for (unsigned char ch : s)
    if ((ch & 0xC0) != 0x80) ++columns;
  return s + std::string(width > columns ? width - columns : 0, ' ');
}

}  // namespace

void write_csv(std::ostream& out, const MetricsReport& report) {
  out << "ratio,method,metric,mean,std\n";
  for (const AggregateRow& r : report.aggregated)
    for (const MetricColumn& col : kColumns) {
      const Summary& s = r.*col.field;
      out << r.ratio << ',' << to_string(r.method) << ',' << col.name << ',' << fixed(s.mean)
          << ',' << fixed(s.std) << '\n';
    }
}

void write_fold_csv(std::ostream& out, const MetricsReport& report) {
  out << "fold,ratio,method,sen,spe,f1,acc\n";
  for (const FoldRow& r : report.per_fold)
    out << r.fold << ',' << r.ratio << ',' << to_string(r.method) << ',' << fixed(r.sen) << ','
        << fixed(r.spe) << ',' << fixed(r.f1) << ',' << fixed(r.acc) << '\n';
}

void write_tables(std::ostream& out, const MetricsReport& report) {
  std::vector<int> ratios;
  for (const AggregateRow& r : report.aggregated)
    if (std::ranges::find(ratios, r.ratio) == ratios.end()) ratios.push_back(r.ratio);
  std::vector<Method> methods;
  for (Method m : kAllMethods)
    if (std::ranges::any_of(report.aggregated, [m](const AggregateRow& r) { return r.method == m; }))
      methods.push_back(m);

  constexpr std::size_t kFirst = 10;
  constexpr std::size_t kCell = 16;
  bool first_table = true;
  for (const MetricColumn& col : kColumns) {
    if (!first_table) out << '\n';
    first_table = false;
    out << col.title << " (mean±std over folds)\n";
    out << pad("ratio", kFirst);
    for (Method m : methods) out << pad(to_string(m), kCell);
    out << '\n';
    for (int ratio : ratios) {
      out << pad(std::to_string(ratio) + "%", kFirst);
      for (Method m : methods) {
        const AggregateRow* r = report.find(ratio, m);
        std::string cell = "-";
        if (r != nullptr) {
          const Summary& s = r->*col.field;
          cell = fixed(s.mean, col.digits) + "±" + fixed(s.std, col.digits);
        }
        out << pad(cell, kCell);
      }
      out << '\n';
    }
  }
}

}  // namespace prt::metrics
