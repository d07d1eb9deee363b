#pragma once

#include <functional>
#include <optional>
#include <string>

#include "socialgrad/types.hpp"

namespace socialgrad {

// Axis-aligned hyperrectangle with nonempty interior.
class BoxSpace {
 public:
  BoxSpace(Vector lower, Vector upper);

  static BoxSpace cube(Eigen::Index n, double lo, double hi);

  Eigen::Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  // Euclidean length of the main diagonal.
  double diameter() const { return (upper_ - lower_).norm(); }
  Vector center() const { return 0.5 * (lower_ + upper_); }

  bool contains(const Vector& x, double slack = 0.0) const;

 private:
  Vector lower_;
  Vector upper_;
};

// Componentwise clamp into the box. Idempotent and 1-Lipschitz.
Vector project_box(const Vector& x, const BoxSpace& space);

// Distance from x to the nearest face. Throws ContractViolation when x is
// outside the box.
double boundary_distance(const Vector& x, const BoxSpace& space);

// Diagonal best-response structure of G0(x) = Q x + a W x, used by the BR
// learning rule. q holds the diagonal of Q.
struct BestResponseStructure {
  Vector q;
  Matrix W;
  double a = 0.0;
};

using VectorField = std::function<Vector(const Vector&)>;
using JacobianField = std::function<Matrix(const Vector&)>;
using PotentialField = std::function<double(const Vector& x, const Vector& p)>;

// A strongly monotone game over a box. Agent i controls coordinate i.
//
// g0 is the nominal pseudo-gradient; an incentive p shifts it additively.
// monotonicity_m is the certified constant with Sym(jac_g0(x)) >= m/2 I on
// the whole box, lip_L1 a Lipschitz constant of jac_g0, and jacobian_norm_bound
// the value L = max ||jac_g0(x)||_2 used by step-size rules.
//
// Instances are treated as immutable once built.
struct GameModel {
  std::string name;
  BoxSpace space;
  VectorField g0;
  JacobianField jac_g0;
  double monotonicity_m = 0.0;
  double lip_L1 = 0.0;
  double jacobian_norm_bound = 0.0;

  // Present only when jac_g0 is symmetric everywhere; gradient in x equals
  // g0(x) + p.
  std::optional<PotentialField> potential;

  // Optional structure the solvers and learning rules can exploit.
  std::optional<Matrix> linear_operator;  // g0(x) = M x
  std::optional<BestResponseStructure> best_response;

  // Analytic lower bound on lambda_min(Sym(jac_g0)) over the box, when one
  // is known in closed form.
  std::optional<double> analytic_lambda_bound;

  Eigen::Index dim() const { return space.dim(); }
};

// g0(x) + p.
Vector incentivized_pseudo_gradient(const GameModel& game, const Vector& x, const Incentive& p);

struct CertificateReport {
  double grid_min_lambda = 0.0;  // min over grid of lambda_min(Sym(jac_g0))
  std::optional<double> analytic_bound;
  double required = 0.0;  // monotonicity_m / 2
  bool pass = false;
  double certified_m = 0.0;  // 2 * grid_min_lambda, usable when the stored m fails
  double max_jacobian_norm = 0.0;  // grid estimate of L
  double lip_L1_estimate = 0.0;    // from neighbouring grid points
  Vector worst_point;
  std::size_t points = 0;
};

// Scans a uniform grid with grid_density points per axis.
CertificateReport certify_strong_monotonicity(const GameModel& game, int grid_density);

// Visits every point of a uniform tensor grid over the box.
void for_each_grid_point(const BoxSpace& space, int density,
                         const std::function<void(const Vector&)>& visit);

Matrix sym(const Matrix& a);
double lambda_min_sym(const Matrix& a);  // smallest eigenvalue of Sym(a)
double spectral_norm(const Matrix& a);

}  // namespace socialgrad
