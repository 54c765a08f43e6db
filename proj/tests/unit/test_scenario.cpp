#include <doctest.h>

#include <filesystem>
#include <random>

#include "jpa/graph.hpp"
#include "jpa/scenario.hpp"
#include "jpa/util.hpp"

using namespace jpa;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd two_pass_cov(const std::vector<Eigen::VectorXd>& xs) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(xs[0].size());
  for (const auto& x : xs) m += x;
  m /= static_cast<double>(xs.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m.size(), m.size());
  for (const auto& x : xs) c += (x - m) * (x - m).transpose();
  return c / static_cast<double>(xs.size() - 1);
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("jpa_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("jackknife matches a direct leave-one-out computation") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t B = 8, per = 50;
  std::vector<std::vector<Eigen::VectorXd>> raw(B);
  std::vector<CovarianceAccumulator> acc(B, CovarianceAccumulator(2));
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < per; ++k) {
      Eigen::VectorXd v(2);
      v << g(rng), 0.5 * g(rng) + 0.3;
      raw[b].push_back(v);
      acc[b].add_sample(v);
    }
  auto stat = [](const Eigen::MatrixXd& c) { return c(0, 0) + 2.0 * c(0, 1); };
  std::vector<double> th;
  for (std::size_t leave = 0; leave < B; ++leave) {
    std::vector<Eigen::VectorXd> xs;
    for (std::size_t b = 0; b < B; ++b)
      if (b != leave) xs.insert(xs.end(), raw[b].begin(), raw[b].end());
    th.push_back(stat(two_pass_cov(xs)));
  }
  double m = 0.0;
  for (double t : th) m += t / B;
  double ss = 0.0;
  for (double t : th) ss += (t - m) * (t - m);
  const double expect = std::sqrt(ss * (B - 1.0) / B);
  const double got = jackknife_se(acc, [&](const CovarianceMatrix& c) { return stat(c.data); });
  CHECK(got == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("jackknife size for a sample variance") {
  // SE of a unit-variance sample variance is sqrt(2/n).
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t B = 40, per = 500;
  std::vector<CovarianceAccumulator> acc(B, CovarianceAccumulator(2));
  for (auto& a : acc)
    for (std::size_t k = 0; k < per; ++k) {
      Eigen::VectorXd v(2);
      v << g(rng), g(rng);
      a.add_sample(v);
    }
  const double se = jackknife_se(acc, [](const CovarianceMatrix& c) { return c.data(0, 0); });
  CHECK(se == doctest::Approx(std::sqrt(2.0 / (B * per))).epsilon(0.3));
}

TEST_CASE("pumps for a sweep point") {
  auto cfg = validate_config(R"({"scenario": "tripartite"})");
  const double a = 0.2, d = kPi / 3;
  auto p = pumps_for_point(cfg, &a, &d);
  CHECK(p.normalized_amplitude(0, cfg.cavity) == doctest::Approx(0.2));
  CHECK(p[0].phase == doctest::Approx(kPi / 2 + kPi / 6));
  CHECK(p[1].phase == doctest::Approx(kPi / 2 - kPi / 6));
  cfg.analysis.compensate_cavity_phase = true;
  auto c = pumps_for_point(cfg, &a, &d);
  CHECK(c[0].phase != doctest::Approx(p[0].phase));
  CHECK(c[0].phase - p[0].phase == doctest::Approx(-(c[1].phase - p[1].phase)));
}

TEST_CASE("analytic scenario without a sweep runs the configured point") {
  auto cfg = validate_config(R"({"scenario": "tripartite", "pumps": {"amplitude_a": 0.15},
                                 "analysis": {"method": "analytic"}})");
  auto rep = run_scenario(cfg);
  REQUIRE(rep.points.size() == 1);
  const auto& pt = rep.points[0];
  CHECK(pt.a == doctest::Approx(0.15));
  auto ref = analytic_output_covariance(cfg.cavity, cfg.pumps, cfg.layout);
  CHECK((pt.cov.data - ref.data).cwiseAbs().maxCoeff() == 0.0);
  CHECK(pt.ppt.entries.size() == 3);
  CHECK(pt.gme.weights_h.size() == 3);
  CHECK(pt.nu_min_se == 0.0);
}

TEST_CASE("sweep grid is the cartesian product") {
  auto cfg = validate_config(R"({"scenario": "tripartite", "sweep": {"a_values": [0.1, 0.2], "dphi_deg": [0, 90, 180]},
                                 "analysis": {"method": "analytic", "oracle_quad_points": 4}})");
  auto rep = run_scenario(cfg);
  REQUIRE(rep.points.size() == 6);
  CHECK(rep.points[4].a == doctest::Approx(0.2));
  CHECK(rep.points[4].dphi_deg == doctest::Approx(90.0));
}

TEST_CASE("monte carlo scenario is reproducible and independent of jobs") {
  auto cfg = validate_config(R"({"scenario": "tripartite", "pumps": {"amplitude_a": 0.1},
                                 "sim": {"n_trajectories": 6, "seed": 9}, "analysis": {"n_batches": 3}})");
  auto r1 = run_scenario(cfg, 1);
  auto r2 = run_scenario(cfg, 3);
  REQUIRE(r1.points.size() == 1);
  CHECK(r1.points[0].cov.data == r2.points[0].cov.data);
  CHECK(r1.points[0].std_error == r2.points[0].std_error);
  CHECK(r1.points[0].have_oracle);
  CHECK(r1.points[0].nu_min_se > 0.0);

  const auto d1 = scratch_dir("a"), d2 = scratch_dir("b");
  auto f1 = write_report(r1, d1.string(), "csv");
  auto f2 = write_report(r2, d2.string(), "csv");
  REQUIRE(f1 == f2);
  for (const auto& f : f1) CHECK(read_file((d1 / f).string()) == read_file((d2 / f).string()));
  auto j = write_report(r1, d1.string(), "json");
  CHECK(std::find(j.begin(), j.end(), "report.json") != j.end());
  const auto m = manifest_json(cfg, d1.string(), f1, "test");
  CHECK(m.find(sha256_hex(read_file((d1 / f1[0]).string()))) != std::string::npos);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("errors carry the sweep point") {
  auto cfg = validate_config(R"({"scenario": "tripartite", "sweep": {"a_values": [0.1, 0.7]},
                                 "analysis": {"method": "analytic", "oracle_quad_points": 4}})");
  try {
    run_scenario(cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularAtThreshold);
    CHECK(std::string(e.what()).find("sweep point 1") != std::string::npos);
  }
}
