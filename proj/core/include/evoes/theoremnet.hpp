#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace evoes {

/// x -> c . ReLU(W x + b) + c0.
struct ReluNet2 {
  Eigen::MatrixXd w;  // hidden x input
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  double c0 = 0.0;

  int input_dim() const { return static_cast<int>(w.cols()); }
  double operator()(const Eigen::VectorXd& x) const;
  /// Upper bound of |net| over [0, input_bound]^n.
  double sup_abs(double input_bound) const;
};

/// One dense layer; ReLU on every hidden layer, linear output.
struct DenseLayer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

/// Worst-case quantities of the construction (all nonnegative).
struct FlipBound {
  double gate_bias = 0.0;       // B
  double ramp_width = 0.0;      // a
  double gate_weight = 0.0;     // L (the gating weights are -L)
  double branch_carry = 0.0;    // deviation of the carried branch value
  double switch_leak_pos = 0.0; // L * switch error, positive flip
  double switch_leak_neg = 0.0;
  double gate_crosstalk = 0.0;  // perturbation crosstalk into the gate layer
  double output_crosstalk = 0.0;
  double error_pos = 0.0;       // bound on sup |F - g|
  double error_neg = 0.0;       // bound on sup |F - h|
};

struct FlipNet {
  std::vector<DenseLayer> layers;  // 5 hidden + output
  /// Designated weight: layers[1].w(row, col), unperturbed value 0.
  int designated_layer = 1;
  int designated_row = 0;
  int designated_col = 0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double epsilon = 0.0;
  double input_bound = 1.0;
  ReluNet2 g;
  ReluNet2 h;
  FlipBound bound;

  /// Forward pass; `perturbation` (same shapes as the weights) is added
  /// when given.
  double operator()(const Eigen::VectorXd& x, const std::vector<Eigen::MatrixXd>* perturbation = nullptr) const;
  std::size_t weight_count() const;
};

struct FlipBuildOptions {
  /// Multiplies the ramp sharpness 1/a.
  double ramp_scale = 1.0;
  /// When false, skip the feasibility checks (for exploring soft ramps).
  bool check_feasible = true;
};

/// Assembles the flip network. Throws ValidationError("infeasible
/// tolerance ...") naming the binding sub-tolerance when the worst-case
/// bound under perturbations of size delta2 exceeds epsilon.
FlipNet build_flip_network(const ReluNet2& g, const ReluNet2& h, double delta1, double delta2, double epsilon,
                           double input_bound, const FlipBuildOptions& options = {});

/// Largest delta2 (with delta1 = ratio * delta2) for which the build succeeds.
double max_feasible_delta2(const ReluNet2& g, const ReluNet2& h, double epsilon, double input_bound,
                           double ratio = 0.1);

enum class FlipMode { designated_only, full_iid };

struct FlipReport {
  double sup_error_pos = 0.0;
  double sup_error_neg = 0.0;
  double flip_rate_pos = 0.0;
  double flip_rate_neg = 0.0;
  double theorem_bound = 0.0;
  std::size_t trials = 0;
  bool passed = false;
};

/// designated_only: perturbs only the designated weight by +-(delta1+delta2)/2.
/// full_iid: every weight entry gets an i.i.d. U(-scale, scale) draw; a
/// trial counts toward the positive (negative) rate when the designated draw
/// is positive (negative) and the sup error against g (h) is below epsilon.
/// theorem_bound = F(delta2) - F(delta1) for the uniform CDF F.
FlipReport verify_flip(const FlipNet& net, int grid_points, FlipMode mode, double scale = 0.0,
                       std::size_t trials = 1000, std::uint64_t seed = 0);

/// Sup errors against g and h for a given perturbation.
std::pair<double, double> flip_sup_errors(const FlipNet& net, int grid_points,
                                          const std::vector<Eigen::MatrixXd>& perturbation);

/// Identity and negation on [0, 1]^1 as one-unit ReLU nets.
ReluNet2 relu_identity();
ReluNet2 relu_negation();

}  // namespace evoes
