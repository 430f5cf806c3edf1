#include <cmath>
#include <limits>

#include "doctest.h"
#include "formulab/errors.hpp"
#include "formulab/stats.hpp"

using namespace formulab;

namespace {

MetricDist dist(double mu, double sigma) {
  return MetricDist{mu, sigma, 10, "metric", Orientation::kLowerIsBetter};
}

}  // namespace

TEST_CASE("z-score on published comparison rows") {
  // deviation column: baseline with normalization vs baseline
  CHECK(z_score(dist(2.91, 0.23), dist(6.88, 1.94)) ==
        doctest::Approx(-2.03).epsilon(0.0025));
  // voltage column: new setting without normalization vs new setting
  CHECK(z_score(dist(3.84, 0.63), dist(21.47, 2.28)) ==
        doctest::Approx(-7.45).epsilon(0.001));
  CHECK(z_score(dist(1.0, 0.1), dist(1.0, 0.1)) == 0.0);
}

TEST_CASE("z-score antisymmetry and scale equivariance") {
  const MetricDist a = dist(3.1, 0.4);
  const MetricDist b = dist(2.2, 1.7);
  CHECK(z_score(a, b) == -z_score(b, a));
  for (double c : {0.5, 2.0, 100.0}) {
    CHECK(std::abs(z_score(dist(a.mu * c, a.sigma * c),
                           dist(b.mu * c, b.sigma * c)) -
                   z_score(a, b)) < 1e-12);
  }
}

TEST_CASE("degenerate distributions") {
  CHECK(z_score(dist(2.0, 0.0), dist(2.0, 0.0)) == 0.0);
  CHECK(z_score(dist(1.0, 0.0), dist(2.0, 0.0)) ==
        -std::numeric_limits<double>::infinity());
  const Comparison c = compare(dist(1.0, 0.0), dist(2.0, 0.0));
  CHECK(c.degenerate);
  CHECK(c.verdict == Verdict::kBetter);
  CHECK(c.probability_less == 1.0);
}

TEST_CASE("standard normal cdf against table values") {
  // frozen from standard normal tables
  CHECK(standard_normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(standard_normal_cdf(1.0) == doctest::Approx(0.8413447).epsilon(1e-6));
  CHECK(standard_normal_cdf(2.03) == doctest::Approx(0.9788217).epsilon(1e-6));
  CHECK(standard_normal_cdf(-1.65) == doctest::Approx(0.0494715).epsilon(2e-5));
  CHECK(standard_normal_cdf(3.5) == doctest::Approx(0.9997674).epsilon(1e-6));
}

TEST_CASE("verdicts at the +-1 thresholds") {
  const Comparison better = compare(dist(2.91, 0.23), dist(6.88, 1.94));
  CHECK(better.verdict == Verdict::kBetter);
  CHECK(better.probability_less == doctest::Approx(0.9788).epsilon(2e-4));

  const Comparison indist = compare(dist(3.37, 0.55), dist(2.81, 0.37));
  CHECK(indist.z == doctest::Approx(0.85).epsilon(0.005));
  CHECK(indist.verdict == Verdict::kIndistinguishable);

  const Comparison worse = compare(dist(8.78, 5.42), dist(2.81, 0.37));
  CHECK(worse.z == doctest::Approx(1.10).epsilon(0.005));
  CHECK(worse.verdict == Verdict::kWorse);
}

TEST_CASE("verdict consistency under swapping") {
  const MetricDist a = dist(2.0, 0.3);
  const MetricDist b = dist(4.0, 0.5);
  CHECK(compare(a, b).verdict == Verdict::kBetter);
  CHECK(compare(b, a).verdict == Verdict::kWorse);
}

TEST_CASE("higher-is-better flips the verdict") {
  MetricDist a = dist(2.0, 0.3);
  MetricDist b = dist(4.0, 0.5);
  a.orientation = Orientation::kHigherIsBetter;
  b.orientation = Orientation::kHigherIsBetter;
  CHECK(compare(a, b).verdict == Verdict::kWorse);
}

namespace {

RunSummary summary_with(const std::string& name, std::optional<double> steps_mu,
                        std::optional<double> steps_sigma, double success,
                        double dev_mu, double dev_sigma, double volt_mu,
                        double volt_sigma) {
  RunSummary s;
  s.experiment = name;
  s.seeds.resize(10);
  s.success_fraction = success;
  s.steps_mu = steps_mu;
  s.steps_sigma = steps_sigma;
  s.deviation_mu = dev_mu;
  s.deviation_sigma = dev_sigma;
  s.voltage_mu = volt_mu;
  s.voltage_sigma = volt_sigma;
  return s;
}

}  // namespace

TEST_CASE("comparison table: n/a steps reference and success formatting") {
  const std::vector<RunSummary> summaries = {
      summary_with("baseline", std::nullopt, std::nullopt, 0.0, 6.88, 1.94,
                   2.81, 0.37),
      summary_with("baseline_with_normalization", 63000.0, 22825.0, 1.0, 2.91,
                   0.23, 8.78, 5.42),
      summary_with("partial", 872500.0, 83179.0, 0.4, 4.80, 1.21, 3.37, 0.55),
  };
  const std::map<std::string, std::string> refs = {
      {"baseline", ""},
      {"baseline_with_normalization", "baseline"},
      {"partial", "baseline"},
  };
  const auto entries = build_table(summaries, refs);
  REQUIRE(entries.size() == 9);

  // baseline row: reference, no z
  CHECK(entries[0].metric == "steps_to_threshold");
  CHECK_FALSE(entries[0].mu.has_value());
  CHECK(entries[0].success_pct == doctest::Approx(0.0));
  CHECK_FALSE(entries[0].z.has_value());
  CHECK_FALSE(entries[0].verdict.has_value());

  // variant steps vs zero-success reference: no z, verdict better
  const auto& steps = entries[3];
  CHECK(steps.experiment == "baseline_with_normalization");
  CHECK_FALSE(steps.z.has_value());
  CHECK(steps.verdict == Verdict::kBetter);
  CHECK(steps.success_pct == doctest::Approx(100.0));

  const auto& dev = entries[4];
  CHECK(dev.metric == "deviation_deg");
  CHECK(*dev.z == doctest::Approx(-2.03).epsilon(0.0025));
  CHECK(dev.verdict == Verdict::kBetter);

  const auto& partial_steps = entries[6];
  CHECK(partial_steps.success_pct == doctest::Approx(40.0));

  // the csv parses and keeps column order
  const std::string csv = comparison_csv(entries);
  CHECK(csv.rfind("experiment,reference,metric,mu,sigma,success_pct,z,verdict",
                  0) == 0);
}

TEST_CASE("comparison of an experiment against itself is neutral") {
  const auto s = summary_with("x", 40000.0, 11832.0, 1.0, 3.05, 0.15, 21.47, 2.28);
  const auto entries =
      build_table({s}, std::map<std::string, std::string>{{"x", "x"}});
  for (const auto& e : entries) {
    REQUIRE(e.z.has_value());
    CHECK(*e.z == 0.0);
    CHECK(e.verdict == Verdict::kIndistinguishable);
  }
}

TEST_CASE("unknown reference raises a config error") {
  const auto s = summary_with("x", 1.0, 1.0, 1.0, 1, 1, 1, 1);
  CHECK_THROWS_AS(
      build_table({s}, std::map<std::string, std::string>{{"x", "nope"}}),
      ConfigError);
}
