#pragma once

// Independent reference implementations used only by tests. Everything here
// is written against first principles (energy methods, Riccati recursions,
// explicit matrix inverses, brute-force scans) rather than the library code
// it checks, so agreement is meaningful.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "s2r/core.hpp"

namespace oracle {

using s2r::Mat;
using s2r::Vec;

// Classic RK4 over dx/dt = f(x).
inline Vec rk4(const std::function<Vec(const Vec&)>& f, const Vec& x0, double dt,
               int steps) {
  Vec x = x0;
  for (int i = 0; i < steps; ++i) {
    const Vec k1 = f(x);
    const Vec k2 = f(x + 0.5 * dt * k1);
    const Vec k3 = f(x + 0.5 * dt * k2);
    const Vec k4 = f(x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// Two-link arm accelerations from the Lagrangian, with every matrix obtained
// numerically: the mass matrix by probing the kinetic energy's quadratic form,
// the Coriolis vector through finite differences of M (Christoffel symbols),
// and gravity as the gradient of the potential. Point masses at the link tips,
// in-plane gravity ge along -y.
struct TwoLink {
  double m1, m2, l1, l2, ge;

  double kinetic(double th1, double th2, double w1, double w2) const {
    const double x1d = -l1 * std::sin(th1) * w1;
    const double y1d = l1 * std::cos(th1) * w1;
    const double x2d = x1d - l2 * std::sin(th1 + th2) * (w1 + w2);
    const double y2d = y1d + l2 * std::cos(th1 + th2) * (w1 + w2);
    return 0.5 * m1 * (x1d * x1d + y1d * y1d) + 0.5 * m2 * (x2d * x2d + y2d * y2d);
  }

  double potential(double th1, double th2) const {
    const double y1 = l1 * std::sin(th1);
    const double y2 = y1 + l2 * std::sin(th1 + th2);
    return ge * (m1 * y1 + m2 * y2);
  }

  Eigen::Matrix2d mass_matrix(double th1, double th2) const {
    // T = 1/2 w' M w, so M_ij comes from probing with unit velocities.
    Eigen::Matrix2d M;
    const double t11 = kinetic(th1, th2, 1, 0);
    const double t22 = kinetic(th1, th2, 0, 1);
    const double t12 = kinetic(th1, th2, 1, 1);
    M(0, 0) = 2.0 * t11;
    M(1, 1) = 2.0 * t22;
    M(0, 1) = M(1, 0) = t12 - t11 - t22;
    return M;
  }

  Eigen::Vector2d accel(double th1, double th2, double w1, double w2,
                        double tau1, double tau2) const {
    const double h = 1e-6;
    const Eigen::Matrix2d M = mass_matrix(th1, th2);
    const Eigen::Matrix2d dM1 =
        (mass_matrix(th1 + h, th2) - mass_matrix(th1 - h, th2)) / (2 * h);
    const Eigen::Matrix2d dM2 =
        (mass_matrix(th1, th2 + h) - mass_matrix(th1, th2 - h)) / (2 * h);
    const Eigen::Vector2d w(w1, w2);
    // Christoffel symbols of the first kind: c_ijk = (dM_ij/dq_k + dM_ik/dq_j
    // - dM_jk/dq_i) / 2, contracted against the joint velocities.
    Eigen::Matrix2d C = Eigen::Matrix2d::Zero();
    const Eigen::Matrix2d dM[2] = {dM1, dM2};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          C(i, j) += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) * w(k);
    const Eigen::Vector2d G(
        (potential(th1 + h, th2) - potential(th1 - h, th2)) / (2 * h),
        (potential(th1, th2 + h) - potential(th1, th2 - h)) / (2 * h));
    const Eigen::Vector2d tau(tau1, tau2);
    return M.fullPivLu().solve(tau - C * w - G);
  }
};

// Finite-horizon discrete LQR via the Riccati recursion, for stage cost
// x'Qx + u'Ru and terminal x'Qf x (no 1/2 factor, matching the planner's
// cost convention; the factor cancels in the argmin anyway).
inline std::vector<Mat> lqr_gains(const Mat& A, const Mat& B, const Mat& Q,
                                  const Mat& R, const Mat& Qf, int horizon) {
  std::vector<Mat> K(horizon);
  Mat P = Qf;
  for (int t = horizon - 1; t >= 0; --t) {
    const Mat H = R + B.transpose() * P * B;
    K[t] = H.ldlt().solve(B.transpose() * P * A);
    const Mat AK = A - B * K[t];
    P = Q + K[t].transpose() * R * K[t] + AK.transpose() * P * AK;
    P = 0.5 * (P + P.transpose());
  }
  return K;
}

// Gaussian conditioning worked out with an explicit inverse, no solver.
// For z = (x, y) jointly Gaussian: y | x = F x + f + N(0, S).
struct CondOracle {
  Mat F;
  Vec f;
  Mat S;
};

inline CondOracle condition_by_inverse(const Vec& mu, const Mat& sigma, int dx) {
  const int dy = static_cast<int>(mu.size()) - dx;
  const Mat Sxx = sigma.topLeftCorner(dx, dx);
  const Mat Sxy = sigma.topRightCorner(dx, dy);
  const Mat Syy = sigma.bottomRightCorner(dy, dy);
  const Mat Sxx_inv = Sxx.inverse();
  CondOracle out;
  out.F = Sxy.transpose() * Sxx_inv;
  out.f = mu.tail(dy) - out.F * mu.head(dx);
  out.S = Syy - out.F * Sxy;
  return out;
}

// Brute-force "samples until the score stays converged": the first curve point
// at or past the threshold such that every 3-point moving median from that
// index on also clears it.
inline std::optional<long> sample_complexity_brute(const std::vector<long>& samples,
                                                   const std::vector<double>& scores,
                                                   double threshold) {
  const int n = static_cast<int>(scores.size());
  auto med3 = [&](int i) {
    const int lo = std::max(0, i - 1);
    const int hi = std::min(n - 1, i + 1);
    std::vector<double> w(scores.begin() + lo, scores.begin() + hi + 1);
    std::sort(w.begin(), w.end());
    return w.size() % 2 == 1 ? w[w.size() / 2]
                             : 0.5 * (w[w.size() / 2 - 1] + w[w.size() / 2]);
  };
  for (int i = 0; i < n; ++i) {
    if (scores[i] < threshold) continue;
    bool ok = true;
    for (int j = i; j < n; ++j)
      if (med3(j) < threshold) {
        ok = false;
        break;
      }
    if (ok) return samples[i];
  }
  return std::nullopt;
}

}  // namespace oracle
