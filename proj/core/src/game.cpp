#include "socialgrad/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace socialgrad {

BoxSpace::BoxSpace(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw ContractViolation("BoxSpace: lower and upper bounds differ in dimension");
  }
  if (lower_.size() == 0) {
    throw ContractViolation("BoxSpace: empty dimension");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || !(lower_[i] < upper_[i])) {
      throw ContractViolation("BoxSpace: need finite lower < upper in coordinate " +
                              std::to_string(i));
    }
  }
}

BoxSpace BoxSpace::cube(Eigen::Index n, double lo, double hi) {
  return BoxSpace(Vector::Constant(n, lo), Vector::Constant(n, hi));
}

bool BoxSpace::contains(const Vector& x, double slack) const {
  if (x.size() != dim()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower_[i] - slack && x[i] <= upper_[i] + slack)) return false;
  }
  return true;
}

Vector project_box(const Vector& x, const BoxSpace& space) {
  require_dim(x, space.dim(), "project_box");
  return x.cwiseMax(space.lower()).cwiseMin(space.upper());
}

double boundary_distance(const Vector& x, const BoxSpace& space) {
  require_dim(x, space.dim(), "boundary_distance");
  if (!space.contains(x)) {
    throw ContractViolation("boundary_distance: point outside the box");
  }
  const Vector below = x - space.lower();
  const Vector above = space.upper() - x;
  return std::min(below.minCoeff(), above.minCoeff());
}

Vector incentivized_pseudo_gradient(const GameModel& game, const Vector& x, const Incentive& p) {
  require_dim(x, game.dim(), "incentivized_pseudo_gradient(x)");
  require_dim(p, game.dim(), "incentivized_pseudo_gradient(p)");
  return game.g0(x) + p;
}

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double lambda_min_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_norm(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

void for_each_grid_point(const BoxSpace& space, int density,
                         const std::function<void(const Vector&)>& visit) {
  if (density < 2) throw ContractViolation("grid density must be at least 2");
  const Eigen::Index n = space.dim();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vector x(n);
  const Vector step = (space.upper() - space.lower()) / static_cast<double>(density - 1);
  while (true) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const int k = idx[static_cast<std::size_t>(i)];
      // Hit the upper face exactly rather than lower + (d-1)*step.
      x[i] = (k == density - 1) ? space.upper()[i] : space.lower()[i] + k * step[i];
    }
    visit(x);
    Eigen::Index i = 0;
    for (; i < n; ++i) {
      auto& k = idx[static_cast<std::size_t>(i)];
      if (++k < density) break;
      k = 0;
    }
    if (i == n) return;
  }
}

CertificateReport certify_strong_monotonicity(const GameModel& game, int grid_density) {
  CertificateReport rep;
  rep.required = game.monotonicity_m / 2.0;
  rep.analytic_bound = game.analytic_lambda_bound;
  rep.grid_min_lambda = std::numeric_limits<double>::infinity();

  const Eigen::Index n = game.dim();
  const Vector step = (game.space.upper() - game.space.lower()) / static_cast<double>(grid_density - 1);

  for_each_grid_point(game.space, grid_density, [&](const Vector& x) {
    const Matrix j = game.jac_g0(x);
    const double lam = lambda_min_sym(j);
    if (lam < rep.grid_min_lambda) {
      rep.grid_min_lambda = lam;
      rep.worst_point = x;
    }
    rep.max_jacobian_norm = std::max(rep.max_jacobian_norm, spectral_norm(j));
    // Lipschitz estimate of the Jacobian along each grid axis.
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] + step[i] > game.space.upper()[i] + 1e-12) continue;
      Vector y = x;
      y[i] = std::min(x[i] + step[i], game.space.upper()[i]);
      const double dist = (y - x).norm();
      if (dist <= 0.0) continue;
      rep.lip_L1_estimate = std::max(rep.lip_L1_estimate, spectral_norm(game.jac_g0(y) - j) / dist);
    }
    ++rep.points;
  });

  rep.certified_m = 2.0 * rep.grid_min_lambda;
  rep.pass = rep.grid_min_lambda > 0.0 && rep.grid_min_lambda >= rep.required - 1e-12;
  return rep;
}

}  // namespace socialgrad
