#include "hob/mca.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <iostream>
#include <set>

namespace hob {

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points,
                          const PowerLawOptions& options) {
  if (points.size() < 2) throw DegenerateError("fit_power_law: need at least two points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd target(n);
  double lo = points[0].first;
  double hi = points[0].first;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [eta, value] = points[static_cast<std::size_t>(i)];
    if (!(eta > 0.0) || !(value > 0.0) || !std::isfinite(eta) || !std::isfinite(value))
      throw DomainError("fit_power_law: eta and value must be positive");
    design(i, 0) = 1.0;
    design(i, 1) = std::log(eta);
    target(i) = std::log(value);
    lo = std::min(lo, eta);
    hi = std::max(hi, eta);
  }
  if (lo == hi) throw DegenerateError("fit_power_law: identical etas");

  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);
  const double residual = std::sqrt((design * coef - target).squaredNorm() / static_cast<double>(n));
  PowerLawFit fit{std::exp(coef(0)), coef(1), lo, hi, residual, false};
  if (!(fit.b > options.b_floor)) {
    if (options.policy == ExponentPolicy::Reject)
      throw DegenerateError("fit_power_law: degenerate-exponent (b = " + std::to_string(fit.b) + ")");
    std::cerr << "warning: fit_power_law: exponent " << fit.b << " floored at " << options.b_floor
              << " (flat value curve)\n";
    fit.b = options.b_floor;
    fit.floored = true;
  }
  return fit;
}

void PowerLawWindow::observe(double eta3, double value) {
  points_.emplace_back(eta3, value);
  while (points_.size() > capacity_) points_.pop_front();
}

std::optional<PowerLawFit> PowerLawWindow::fit() const {
  std::vector<std::pair<double, double>> usable;
  std::set<double> etas;
  for (const auto& p : points_) {
    if (p.first > 0.0 && p.second > 0.0) {
      usable.push_back(p);
      etas.insert(p.first);
    }
  }
  if (etas.size() < 2) return std::nullopt;
  return fit_power_law(usable, options_);
}

}  // namespace hob
