#include "sharekin/special.hpp"

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "sharekin/error.hpp"

namespace sharekin {

namespace {

// B_{2j} / (2j)! for j = 1..12
constexpr std::array<double, 12> kBernoulliOverFactorial = {
    8.3333333333333329e-02,  -1.3888888888888889e-03, 3.3068783068783071e-05,  -8.2671957671957675e-07,
    2.0876756987868100e-08,  -5.2841901386874932e-10, 1.3382536530684679e-11,  -3.3896802963225827e-13,
    8.5860620562778452e-15,  -2.1748686985580619e-16, 5.5090028283602295e-18,  -1.3954464685812522e-19,
};

double zeta_euler_maclaurin(double s) {
  constexpr int n = 24;
  double sum = 0.0;
  for (int k = n - 1; k >= 1; --k) sum += std::pow(static_cast<double>(k), -s);
  const double nn = n;
  sum += std::pow(nn, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(nn, -s);
  // s (s+1) ... (s+2j-2) n^{-s-2j+1}
  double rising = s;
  double power = std::pow(nn, -s - 1.0);
  for (std::size_t j = 0; j < kBernoulliOverFactorial.size(); ++j) {
    const double term = kBernoulliOverFactorial[j] * rising * power;
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    rising *= (s + 2.0 * static_cast<double>(j) + 1.0) * (s + 2.0 * static_cast<double>(j) + 2.0);
    power /= nn * nn;
  }
  return sum;
}

bool is_positive_integer(double b) { return b >= 1.0 && b == std::floor(b) && b < 1e6; }

double polylog_series(double b, double z) {
  double sum = 0.0;
  double zm = 1.0;
  for (int m = 1; m < 100000; ++m) {
    zm *= z;
    const double term = zm * std::pow(static_cast<double>(m), -b);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

// Li_b(e^-alpha) for small alpha, b not a positive integer:
//   Gamma(1-b) alpha^{b-1} + sum_n zeta(b-n) (-alpha)^n / n!
// For integer b = k the n = k-1 term is replaced by (-alpha)^{k-1}/(k-1)! (H_{k-1} - log alpha).
double polylog_near_one(double b, double alpha) {
  double sum = 0.0;
  const bool integer = is_positive_integer(b);
  const int log_index = integer ? static_cast<int>(b) - 1 : -1;
  if (!integer) sum += std::tgamma(1.0 - b) * std::pow(alpha, b - 1.0);
  double coef = 1.0;  // (-alpha)^n / n!
  int small_terms = 0;  // trivial zeros of zeta give isolated zero terms
  for (int n = 0; n < 200; ++n) {
    if (n > 0) coef *= -alpha / static_cast<double>(n);
    double term;
    if (n == log_index) {
      double harmonic = 0.0;
      for (int k = 1; k <= log_index; ++k) harmonic += 1.0 / k;
      term = coef * (harmonic - std::log(alpha));
    } else {
      term = coef * zeta_continued(b - n);
    }
    sum += term;
    small_terms = std::abs(term) < 1e-14 * std::max(1.0, std::abs(sum)) ? small_terms + 1 : 0;
    if (n > log_index + 2 && small_terms >= 2) break;
  }
  return sum;
}

}  // namespace

double zeta_continued(double s) {
  if (s == 1.0) throw domain_error("zeta has a pole at 1");
  if (s == 0.0) return -0.5;
  if (s >= 0.5) return zeta_euler_maclaurin(s);
  // Negative even integers are trivial zeros.
  if (s < 0.0 && std::fmod(s, 2.0) == 0.0) return 0.0;
  const double pi = std::numbers::pi;
  return std::pow(2.0, s) * std::pow(pi, s - 1.0) * std::sin(pi * s / 2.0) * std::tgamma(1.0 - s) *
         zeta_euler_maclaurin(1.0 - s);
}

double zeta(double b) {
  if (!(b > 1.0)) throw domain_error("zeta(b) requires b > 1");
  if (b > 60.0) return 1.0 + std::pow(2.0, -b) + std::pow(3.0, -b);
  return zeta_euler_maclaurin(b);
}

double polylog(double b, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw domain_error("polylog requires z in [0, 1]");
  if (z == 0.0) return 0.0;
  if (z == 1.0) {
    if (!(b > 1.0)) throw domain_error("Li_b(1) diverges for b <= 1");
    return zeta(b);
  }
  if (z <= 0.9) return polylog_series(b, z);
  return polylog_near_one(b, -std::log(z));
}

double phi_saddle(double eta) { return std::sqrt(1.0 / (2.0 * std::numbers::pi * eta)) * std::exp(-eta); }

PhiEvaluation phi_quadrature(double eta) {
  if (!(eta > 0.0)) throw domain_error("phi requires eta > 0");
  const double pi = std::numbers::pi;
  const auto integrand = [eta, pi](double x) {
    if (x <= 0.0) return 0.0;
    return std::exp(eta * (x - x * std::log(x))) * std::sin(eta * pi * x) / pi;
  };
  const double log_peak = eta;  // envelope maximum at x = 1
  const double log_cutoff = log_peak + std::log(kPhiEnvelopeCutoff);
  const double half_period = 1.0 / eta;

  PhiEvaluation out;
  double sum = 0.0;
  for (int k = 0; k < 1000000; ++k) {
    const double a = k * half_period;
    const double b = a + half_period;
    if (a > 1.0 && eta * (a - a * std::log(a)) < log_cutoff) {
      out.truncated_at = a;
      break;
    }
    sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 15, kPhiQuadratureTolerance);
    ++out.intervals;
  }
  out.value = sum;
  return out;
}

PhiEvaluation phi_detail(double eta) {
  if (!(eta > 0.0)) throw domain_error("phi requires eta > 0");
  if (eta >= kPhiCrossover) {
    PhiEvaluation out;
    out.value = phi_saddle(eta);
    out.saddle = true;
    return out;
  }
  return phi_quadrature(eta);
}

double phi(double eta) { return phi_detail(eta).value; }

}  // namespace sharekin
