#include <doctest.h>

#include <cmath>

#include "jpa/graph.hpp"

using namespace jpa;

namespace {

ModeLayout pair_layout() {
  ModeLayout l;
  l.centers = {-1.0e6, 1.0e6};
  l.bandwidth = 1.9e6;
  l.guard = 0.1e6;
  return l;
}

// Fourier components here are a(w) with a(t) = int a(w) exp(-i w t), while a layout centre f
// names the exp(+2 pi i f t) component, so mode k at baseband nu sits at w = -2 pi (f_k + nu).
// One pump at the centre couples a_0(w0) with a_1(-w0)^+ and a_1(w1) with a_0(-w1)^+. Solves
// that 4x4 block directly and averages the quadrature spectrum over the band with the
// trapezoid rule.
Eigen::MatrixXd two_mode_reference(const CavityParams& p, double alpha, double phi, const ModeLayout& l,
                                   std::size_t n_nu) {
  const cplx I(0, 1);
  const double G = p.kappa + p.gamma;
  const double hf = kPlanck * p.omega_r / kTwoPi;
  const double coth = p.temperature > 0 ? 1.0 / std::tanh(hf / (2 * kBoltzmann * p.temperature)) : 1.0;
  const double c0 = kTwoPi * l.centers[0], c1 = kTwoPi * l.centers[1];
  const double hb = kPi * l.bandwidth;
  const cplx z = alpha * std::exp(I * phi);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
  for (std::size_t k = 0; k < n_nu; ++k) {
    const double nu = -hb + 2 * hb * static_cast<double>(k) / static_cast<double>(n_nu - 1);
    const double w = (k == 0 || k + 1 == n_nu) ? 0.5 : 1.0;
    const double w0 = -(c0 + nu), w1 = -(c1 + nu);
    // Unknowns: a0(w0), a1(w1), a1(-w0)^+, a0(-w1)^+.
    Eigen::Matrix4cd M = Eigen::Matrix4cd::Zero();
    M(0, 0) = -I * (w0 - p.delta_r) + G / 2;
    M(0, 2) = I * z;
    M(2, 2) = -I * (w0 + p.delta_r) + G / 2;
    M(2, 0) = -I * std::conj(z);
    M(1, 1) = -I * (w1 - p.delta_r) + G / 2;
    M(1, 3) = I * z;
    M(3, 3) = -I * (w1 + p.delta_r) + G / 2;
    M(3, 1) = -I * std::conj(z);
    const Eigen::Matrix4cd R = M.inverse();
    const Eigen::Matrix4cd T = Eigen::Matrix4cd::Identity() - p.kappa * R;
    const Eigen::Matrix4cd E = 0.5 * (T * T.adjoint() + coth * p.kappa * p.gamma * R * R.adjoint());
    // x0 = (u0 + u3)/2, p0 = (u0 - u3)/2i, x1 = (u1 + u2)/2, p1 = (u1 - u2)/2i.
    Eigen::Matrix4cd K = Eigen::Matrix4cd::Zero();
    K(0, 0) = 0.5;
    K(0, 3) = 0.5;
    K(1, 0) = -0.5 * I;
    K(1, 3) = 0.5 * I;
    K(2, 1) = 0.5;
    K(2, 2) = 0.5;
    K(3, 1) = -0.5 * I;
    K(3, 2) = 0.5 * I;
    acc += w * (K * E * K.adjoint()).real();
  }
  acc /= static_cast<double>(n_nu - 1);
  return 0.5 * (acc + acc.transpose());
}

}  // namespace

TEST_CASE("sideband oracle: vacuum without pumping") {
  auto t = tripartite_preset(0.0);
  t.cavity.temperature = 0.0;
  auto v = analytic_output_covariance(t.cavity, t.pumps, t.layout);
  CHECK((v.data - 0.25 * Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sideband oracle: single degenerate pump against a direct 4x4 solve") {
  const auto layout = pair_layout();
  for (double temp : {0.0, 0.15})
    for (double dr : {0.0, kTwoPi * 0.3e6}) {
      CavityParams p;
      p.temperature = temp;
      p.delta_r = dr;
      const double alpha = 0.2 * p.total_rate(), phi = 0.6;
      PumpConfig pumps({{0.0, alpha, phi}});
      auto v = analytic_output_covariance(p, pumps, layout, {32, 30.0});
      auto ref = two_mode_reference(p, alpha, phi, layout, 4001);
      CHECK((v.data - ref).cwiseAbs().maxCoeff() < 1e-6);
      CHECK(v.data(0, 2) != doctest::Approx(0.0));
    }
}

TEST_CASE("sideband oracle: quadrature and cutoff convergence") {
  auto t = tripartite_preset(0.2, {kPi / 2, 0.1});
  auto a = analytic_output_covariance(t.cavity, t.pumps, t.layout, {16, 30.0});
  auto b = analytic_output_covariance(t.cavity, t.pumps, t.layout, {32, 30.0});
  auto c = analytic_output_covariance(t.cavity, t.pumps, t.layout, {16, 8.0});
  CHECK((a.data - b.data).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a.data - c.data).cwiseAbs().maxCoeff() < 1e-9);
  a.validate();
  const auto om = symplectic_form(3);
  Eigen::MatrixXcd h = 4.0 * a.data.cast<cplx>() + cplx(0, 1) * om.cast<cplx>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  CHECK(es.eigenvalues().minCoeff() > -1e-9);
}

TEST_CASE("sideband oracle: threshold") {
  auto below = tripartite_preset(0.3);
  CHECK(parametric_stability_margin(below.cavity, below.pumps, below.layout) > 0.0);
  auto above = tripartite_preset(0.6);
  CHECK(parametric_stability_margin(above.cavity, above.pumps, above.layout) < 0.0);
  CHECK_THROWS_AS(analytic_output_covariance(above.cavity, above.pumps, above.layout), Error);
  try {
    analytic_output_covariance(above.cavity, above.pumps, above.layout);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularAtThreshold);
  }
}
