#include "formulab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "formulab/csv.hpp"
#include "formulab/errors.hpp"
#include "formulab/units.hpp"

namespace formulab {

double standard_normal_cdf(double x) {
  // Abramowitz & Stegun, Handbook of Mathematical Functions, eq. 26.2.17.
  if (x < 0.0) return 1.0 - standard_normal_cdf(-x);
  constexpr double p = 0.2316419;
  constexpr double b1 = 0.319381530;
  constexpr double b2 = -0.356563782;
  constexpr double b3 = 1.781477937;
  constexpr double b4 = -1.821255978;
  constexpr double b5 = 1.330274429;
  const double t = 1.0 / (1.0 + p * x);
  const double poly = t * (b1 + t * (b2 + t * (b3 + t * (b4 + t * b5))));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
  return 1.0 - pdf * poly;
}

double z_score(const MetricDist& x1, const MetricDist& x2) {
  if (x1.sigma < 0.0 || x2.sigma < 0.0) {
    throw ContractViolation("negative sigma in z_score");
  }
  const double denom =
      std::sqrt(x1.sigma * x1.sigma + x2.sigma * x2.sigma);
  if (denom == 0.0) {
    if (x1.mu == x2.mu) return 0.0;
    return x1.mu < x2.mu ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
  }
  return (x1.mu - x2.mu) / denom;
}

Comparison compare(const MetricDist& x1, const MetricDist& x2) {
  Comparison c;
  c.z = z_score(x1, x2);
  c.degenerate = std::isinf(c.z);
  c.probability_less = std::isinf(c.z) ? (c.z < 0.0 ? 1.0 : 0.0)
                                       : standard_normal_cdf(-c.z);
  const bool lower = x1.orientation == Orientation::kLowerIsBetter;
  if (c.z < -1.0) {
    c.verdict = lower ? Verdict::kBetter : Verdict::kWorse;
  } else if (c.z > 1.0) {
    c.verdict = lower ? Verdict::kWorse : Verdict::kBetter;
  } else {
    c.verdict = Verdict::kIndistinguishable;
  }
  return c;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kBetter: return "better";
    case Verdict::kWorse: return "worse";
    case Verdict::kIndistinguishable: return "indistinguishable";
  }
  return "?";
}

const char* verdict_arrow(Verdict v) {
  switch (v) {
    case Verdict::kBetter: return "up";
    case Verdict::kWorse: return "down";
    case Verdict::kIndistinguishable: return "~";
  }
  return "?";
}

namespace {

const RunSummary* find_summary(const std::vector<RunSummary>& summaries,
                               const std::string& name) {
  for (const auto& s : summaries) {
    if (s.experiment == name) return &s;
  }
  return nullptr;
}

void append_metric_entries(std::vector<ComparisonEntry>& out,
                           const RunSummary& row, const RunSummary* ref,
                           const std::string& ref_name) {
  // steps to threshold
  {
    ComparisonEntry e;
    e.experiment = row.experiment;
    e.reference = ref_name;
    e.metric = "steps_to_threshold";
    e.mu = row.steps_mu;
    e.sigma = row.steps_sigma;
    e.success_pct = 100.0 * row.success_fraction;
    if (ref) {
      const bool row_has = row.steps_mu.has_value();
      const bool ref_has = ref->steps_mu.has_value();
      if (row_has && ref_has) {
        MetricDist a{*row.steps_mu, *row.steps_sigma,
                     static_cast<int>(row.seeds.size()), e.metric,
                     Orientation::kLowerIsBetter};
        MetricDist b{*ref->steps_mu, *ref->steps_sigma,
                     static_cast<int>(ref->seeds.size()), e.metric,
                     Orientation::kLowerIsBetter};
        const Comparison c = compare(a, b);
        e.z = c.z;
        e.verdict = c.verdict;
      } else if (row_has && !ref_has) {
        e.verdict = Verdict::kBetter;  // reached a threshold the reference never did
      } else if (!row_has && ref_has) {
        e.verdict = Verdict::kWorse;
      } else {
        e.verdict = Verdict::kIndistinguishable;
      }
    }
    out.push_back(std::move(e));
  }
  // final deviation and mean voltage
  const struct {
    const char* metric;
    std::optional<double> RunSummary::* mu;
    std::optional<double> RunSummary::* sigma;
  } metrics[] = {
      {"deviation_deg", &RunSummary::deviation_mu, &RunSummary::deviation_sigma},
      {"voltage_v", &RunSummary::voltage_mu, &RunSummary::voltage_sigma},
  };
  for (const auto& m : metrics) {
    ComparisonEntry e;
    e.experiment = row.experiment;
    e.reference = ref_name;
    e.metric = m.metric;
    e.mu = row.*(m.mu);
    e.sigma = row.*(m.sigma);
    if (ref && e.mu && (ref->*(m.mu)).has_value()) {
      MetricDist a{*e.mu, *e.sigma, static_cast<int>(row.seeds.size()),
                   e.metric, Orientation::kLowerIsBetter};
      MetricDist b{*(ref->*(m.mu)), *(ref->*(m.sigma)),
                   static_cast<int>(ref->seeds.size()), e.metric,
                   Orientation::kLowerIsBetter};
      const Comparison c = compare(a, b);
      e.z = c.z;
      e.verdict = c.verdict;
    }
    out.push_back(std::move(e));
  }
}

std::string format_z(const std::optional<double>& z,
                     const std::optional<Verdict>& verdict) {
  if (!verdict) return "";
  std::ostringstream os;
  if (z) {
    os.setf(std::ios::fixed);
    os.precision(2);
    os << *z;
  } else {
    os << "n/a";
  }
  os << ' ' << verdict_arrow(*verdict);
  return os.str();
}

}  // namespace

std::vector<ComparisonEntry> build_table(
    const std::vector<RunSummary>& summaries,
    const std::map<std::string, std::string>& references) {
  std::vector<ComparisonEntry> entries;
  for (const auto& row : summaries) {
    std::string ref_name;
    const RunSummary* ref = nullptr;
    const auto it = references.find(row.experiment);
    if (it != references.end() && !it->second.empty()) {
      ref_name = it->second;
      ref = find_summary(summaries, ref_name);
      if (!ref) {
        throw ConfigError("unknown reference experiment '" + ref_name +
                          "' for '" + row.experiment + "'");
      }
    }
    append_metric_entries(entries, row, ref, ref_name);
  }
  return entries;
}

std::string comparison_csv(const std::vector<ComparisonEntry>& entries) {
  std::ostringstream os;
  write_csv_row(os, {"experiment", "reference", "metric", "mu", "sigma",
                     "success_pct", "z", "verdict"});
  for (const auto& e : entries) {
    write_csv_row(os, {e.experiment, e.reference, e.metric,
                       e.mu ? format_double(*e.mu) : "",
                       e.sigma ? format_double(*e.sigma) : "",
                       e.success_pct ? format_double(*e.success_pct) : "",
                       e.z ? format_double(*e.z) : "",
                       e.verdict ? verdict_name(*e.verdict) : ""});
  }
  return os.str();
}

std::string comparison_pretty(const std::vector<ComparisonEntry>& entries) {
  // regroup per experiment in first-seen order
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, const ComparisonEntry*>> rows;
  for (const auto& e : entries) {
    if (!rows.count(e.experiment)) order.push_back(e.experiment);
    rows[e.experiment][e.metric] = &e;
  }

  std::ostringstream os;
  os << std::left;
  os.setf(std::ios::fixed);
  os << std::setw(42) << "experiment" << std::setw(26) << "steps to threshold"
     << std::setw(12) << "z" << std::setw(18) << "deviation (deg)"
     << std::setw(12) << "z" << std::setw(18) << "voltage (V)" << std::setw(10)
     << "z" << '\n';
  for (const auto& name : order) {
    const auto& metric_rows = rows[name];
    os << std::setw(42) << name;
    const ComparisonEntry* steps = metric_rows.at("steps_to_threshold");
    std::ostringstream steps_text;
    if (steps->mu) {
      steps_text << std::llround(*steps->mu) << " +- "
                 << std::llround(*steps->sigma);
    } else {
      steps_text << "n/a +- n/a";
    }
    steps_text << " (" << std::llround(steps->success_pct.value_or(0.0))
               << "%)";
    os << std::setw(26) << steps_text.str() << std::setw(12)
       << format_z(steps->z, steps->verdict);
    for (const char* metric : {"deviation_deg", "voltage_v"}) {
      const ComparisonEntry* e = metric_rows.at(metric);
      std::ostringstream val;
      val.setf(std::ios::fixed);
      val.precision(2);
      if (e->mu) {
        val << *e->mu << " +- " << *e->sigma;
      } else {
        val << "n/a";
      }
      os << std::setw(18) << val.str() << std::setw(12)
         << format_z(e->z, e->verdict);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace formulab
