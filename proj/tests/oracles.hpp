// Test-only reference implementations, written straight from the defining
// formulas and kept independent of the library code paths they check.
#ifndef GANOV_TESTS_ORACLES_HPP
#define GANOV_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracles {

// rho = [ sum_i (z_i-mu_z)(zh_i-mu_zh) / n ] / (sigma_z * sigma_zh),
// population statistics.
inline double pearson(std::span<const float> z, std::span<const float> zh) {
  size_t n = z.size();
  double mz = 0, mh = 0;
  for (size_t i = 0; i < n; ++i) {
    mz += z[i];
    mh += zh[i];
  }
  mz /= n;
  mh /= n;
  double cov = 0, vz = 0, vh = 0;
  for (size_t i = 0; i < n; ++i) {
    cov += (z[i] - mz) * (zh[i] - mh);
    vz += (z[i] - mz) * (z[i] - mz);
    vh += (zh[i] - mh) * (zh[i] - mh);
  }
  cov /= n;
  vz /= n;
  vh /= n;
  return cov / (std::sqrt(vz) * std::sqrt(vh));
}

// R^2 + (1/(nu*m)) * sum_i max{0, ||x_i - c||^2 - R^2}, term by term.
inline double compactness(const std::vector<std::vector<float>>& reps,
                          const std::vector<float>& c, double R, double nu) {
  double total = R * R;
  for (const auto& row : reps) {
    double d2 = 0;
    for (size_t j = 0; j < c.size(); ++j)
      d2 += (static_cast<double>(row[j]) - c[j]) *
            (static_cast<double>(row[j]) - c[j]);
    double hinge = d2 - R * R;
    if (hinge > 0) total += hinge / (nu * static_cast<double>(reps.size()));
  }
  return total;
}

// Exhaustive pair counting with 0.5 tie credit.
inline double auc_pairs(const std::vector<double>& ref,
                        const std::vector<double>& sus) {
  double u = 0;
  for (double s : sus)
    for (double r : ref) {
      if (s > r) u += 1.0;
      else if (s == r) u += 0.5;
    }
  return u / (static_cast<double>(ref.size()) * static_cast<double>(sus.size()));
}

// Dense grid minimization of the 1-D compactness objective in R^2.
struct GridResult {
  double r2 = 0;
  double objective = 0;
};

inline GridResult radius_grid_search(const std::vector<double>& sq_dists,
                                     double nu, double step = 1e-3) {
  double hi = 0;
  for (double d : sq_dists) hi = std::max(hi, d);
  double m = static_cast<double>(sq_dists.size());
  GridResult best{0, 1e300};
  for (double r2 = 0; r2 <= hi + step; r2 += step) {
    double viol = 0;
    for (double d : sq_dists)
      if (d > r2) viol += d - r2;
    double obj = r2 + viol / (nu * m);
    if (obj < best.objective) best = {r2, obj};
  }
  return best;
}

// SSIM of two constant images: variances and covariance vanish, leaving
// (2ab + C1) / (a^2 + b^2 + C1), a and b in display range [0,1].
inline double ssim_constant(double a, double b) {
  const double c1 = 0.01 * 0.01;
  return (2 * a * b + c1) / (a * a + b * b + c1);
}

// Central differences of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-3) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace oracles

#endif
