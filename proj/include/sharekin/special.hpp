#pragma once

namespace sharekin {

inline constexpr double kZeta2 = 1.6449340668482264365;  // pi^2 / 6

/// Riemann zeta for real b > 1 (Euler-Maclaurin summation, ~1e-15 relative).
double zeta(double b);
/// Analytic continuation for any real s != 1 (reflection formula below 1/2).
double zeta_continued(double s);

/// Li_b(z) = sum_{m>=1} z^m m^-b for z in [0, 1]. Direct series for z <= 0.9, otherwise the
/// expansion in alpha = -log z around z = 1.
double polylog(double b, double z);

/// phi(eta) = int_{1-i inf}^{1+i inf} dy/(2 pi i) exp(eta (y log y - y)).
struct PhiEvaluation {
  double value = 0.0;
  bool saddle = false;        // true: large-eta saddle form; false: branch-cut quadrature
  int intervals = 0;          // half-periods integrated
  double truncated_at = 0.0;  // x where the envelope fell below kPhiEnvelopeCutoff * peak
};

inline constexpr double kPhiCrossover = 1.0;
inline constexpr double kPhiEnvelopeCutoff = 1e-16;
inline constexpr double kPhiQuadratureTolerance = 1e-10;

/// Saddle form for eta >= 1, quadrature of the branch-cut integral for eta < 1.
double phi(double eta);
PhiEvaluation phi_detail(double eta);
/// sqrt(1 / (2 pi eta)) exp(-eta).
double phi_saddle(double eta);
/// int_0^inf dx/pi exp(eta (x - x log x)) sin(eta pi x), integrated half-period by half-period.
PhiEvaluation phi_quadrature(double eta);

}  // namespace sharekin
