#include <cmath>
#include <numeric>

#include "ffcac/error.hpp"
#include "ffcac/protocol/experiment.hpp"

namespace ffcac::protocol {

double compute_aa(std::span<const double> accs) {
  if (accs.empty()) throw UsageError("AA of an empty accuracy list");
  return std::accumulate(accs.begin(), accs.end(), 0.0) / static_cast<double>(accs.size());
}

double compute_pd(std::span<const double> accs) {
  if (accs.empty()) throw UsageError("PD of an empty accuracy list");
  return accs.front() - accs.back();
}

Stat summarize(std::span<const double> values) {
  if (values.empty()) throw UsageError("summary of no values");
  Stat s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

RunReport aggregate(std::vector<RunResult> runs) {
  if (runs.empty()) throw UsageError("no runs to aggregate");
  RunReport r;
  const std::size_t sessions = runs.front().accuracies.size();
  for (std::size_t m = 0; m < sessions; ++m) {
    std::vector<double> v;
    for (const auto& run : runs) v.push_back(run.accuracies.at(m));
    r.accuracy.push_back(summarize(v));
  }
  std::vector<double> aa, pd;
  for (const auto& run : runs) {
    aa.push_back(run.aa);
    pd.push_back(run.pd);
  }
  r.aa = summarize(aa);
  r.pd = summarize(pd);
  r.runs = std::move(runs);
  return r;
}

}  // namespace ffcac::protocol
