#include "evoes/theoremnet.hpp"

#include "evoes/error.hpp"
#include "evoes/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evoes {

namespace {

Eigen::VectorXd relu(const Eigen::VectorXd& v) { return v.cwiseMax(0.0); }

// Upper bound of each hidden unit's activation over the input box.
Eigen::VectorXd unit_sup(const ReluNet2& net, double input_bound) {
  Eigen::VectorXd out(net.w.rows());
  for (Eigen::Index j = 0; j < net.w.rows(); ++j) {
    out[j] = std::max(0.0, net.b[j] + net.w.row(j).cwiseMax(0.0).sum() * input_bound);
  }
  return out;
}

void check_net(const ReluNet2& net, const char* name) {
  if (net.w.rows() < 1 || net.w.cols() < 1 || net.b.size() != net.w.rows() || net.c.size() != net.w.rows()) {
    throw ValidationError(std::string("malformed 2-layer net ") + name);
  }
}

std::vector<std::vector<double>> grid(int dims, int points, double bound) {
  std::vector<std::vector<double>> out{{}};
  for (int d = 0; d < dims; ++d) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : out) {
      for (int i = 0; i < points; ++i) {
        auto p = prefix;
        p.push_back(bound * static_cast<double>(i) / static_cast<double>(points - 1));
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<Eigen::MatrixXd> zero_perturbation(const FlipNet& net) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& l : net.layers) out.push_back(Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols()));
  return out;
}

}  // namespace

double ReluNet2::operator()(const Eigen::VectorXd& x) const { return c.dot(relu(w * x + b)) + c0; }

double ReluNet2::sup_abs(double input_bound) const {
  return c.cwiseAbs().dot(unit_sup(*this, input_bound)) + std::abs(c0);
}

ReluNet2 relu_identity() {
  return ReluNet2{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), 0.0};
}

ReluNet2 relu_negation() {
  return ReluNet2{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), -Eigen::VectorXd::Ones(1), 0.0};
}

double FlipNet::operator()(const Eigen::VectorXd& x, const std::vector<Eigen::MatrixXd>* perturbation) const {
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = layers[l].w * a + layers[l].b;
    if (perturbation) z += (*perturbation)[l] * a;
    a = l + 1 < layers.size() ? relu(z) : z;
  }
  return a[0];
}

std::size_t FlipNet::weight_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.w.size());
  return n;
}

FlipNet build_flip_network(const ReluNet2& g, const ReluNet2& h, double delta1, double delta2, double epsilon,
                           double input_bound, const FlipBuildOptions& options) {
  check_net(g, "g");
  check_net(h, "h");
  if (g.input_dim() != h.input_dim()) throw ValidationError("g and h must share their input dimension");
  if (!(delta1 > 0.0 && delta1 < delta2)) throw ValidationError("need 0 < delta1 < delta2");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!(input_bound > 0.0)) throw ValidationError("input_bound must be > 0");
  if (!(options.ramp_scale > 0.0)) throw ValidationError("ramp_scale must be > 0");

  const int n = g.input_dim();
  const auto ng = g.w.rows();
  const auto nh = h.w.rows();
  const auto n1 = ng + nh + 1;
  const double d = delta2;  // bound on every other weight's perturbation
  const double x_sum = n * input_bound;

  const double s1 = unit_sup(g, input_bound).sum() + unit_sup(h, input_bound).sum();
  const double mg = g.sup_abs(input_bound);
  const double mh = h.sup_abs(input_bound);
  const double shift = std::max(mg, mh) + 1.0;  // M: keeps carried branches >= 1

  // Layer 1 and the gate node.
  const double e1 = d * x_sum;
  const double cross = d * (s1 + static_cast<double>(n1 - 1) * e1);
  const double gate_bias = std::max(1.0, e1 + 4.0 * cross / delta1);
  const double m = gate_bias - e1;
  const double a = delta1 * m / (4.0 * options.ramp_scale);
  const double a1 = s1 + gate_bias + static_cast<double>(n1) * e1;

  // Layer 2: shifted branches and K'.
  const double cmax = std::max(g.c.cwiseAbs().sum(), h.c.cwiseAbs().sum());
  const double e2 = cmax * e1 + d * a1;
  const double k_max = delta2 * (gate_bias + e1) + cross;
  const double a2 = (shift + mg + e2) + (shift + mh + e2) + k_max;

  // Layer 3: carries and ramps.
  const double c3 = d * a2;
  const double e3 = e2 + c3;
  const double rho = (delta1 * m - cross) / a;
  const double r1_max = k_max / a + c3;
  const double r2_max = std::max(0.0, k_max / a - 1.0 + c3);
  const double a3 = (shift + mg + e3) + (shift + mh + e3) + r1_max + r2_max;

  // Layer 4: switch.
  const double c4 = d * a3;
  const double e4 = e3 + c4;
  const double s_pos = 2.0 * c3 + c4;
  const double s_neg = c3 + c4;
  const double a4 = (shift + mg + e4) + (shift + mh + e4) + 2.0 * (1.0 + s_pos);

  // Layer 5: gates.
  const double c5 = d * a4;
  const double carry_max = shift + std::max(mg, mh) + e4;
  const double suppress = 1.0 - s_pos;
  const double gate_weight = suppress > 0.0 ? 1.1 * (carry_max + c5) / suppress + 1.0 : INFINITY;
  const double dev_pos = e4 + gate_weight * s_pos + c5;
  const double dev_neg = e4 + gate_weight * s_neg + c5;
  const double c6 = d * (carry_max + c5);

  FlipNet net;
  net.delta1 = delta1;
  net.delta2 = delta2;
  net.epsilon = epsilon;
  net.input_bound = input_bound;
  net.g = g;
  net.h = h;
  FlipBound& bd = net.bound;
  bd.gate_bias = gate_bias;
  bd.ramp_width = a;
  bd.gate_weight = gate_weight;
  bd.branch_carry = e4;
  bd.switch_leak_pos = gate_weight * s_pos;
  bd.switch_leak_neg = gate_weight * s_neg;
  bd.gate_crosstalk = c5;
  bd.output_crosstalk = c6;
  bd.error_pos = dev_pos + c6;
  bd.error_neg = dev_neg + c6;

  if (options.check_feasible) {
    auto fail = [&](const std::string& what) {
      std::ostringstream msg;
      msg << "infeasible tolerance (epsilon " << epsilon << ", delta2 " << delta2 << "): " << what;
      throw ValidationError(msg.str());
    };
    if (!(cross < delta1 * m / 4.0 * (1.0 + 1e-12))) fail("gate margin: crosstalk into K' exceeds delta1*m/4");
    if (!(c3 < 1.0) || !(rho - 1.0 - c3 > 0.0)) fail("ramp saturation: switch crosstalk " + std::to_string(c3));
    if (!(suppress > 0.0)) fail("switch leakage: switch error " + std::to_string(s_pos) + " >= 1");
    if (!(1.0 - e4 - gate_weight * s_pos - c5 > 0.0)) fail("branch positivity: carried branch may hit zero");
    const double worst = std::max(bd.error_pos, bd.error_neg);
    if (!(worst < epsilon)) {
      const std::pair<const char*, double> terms[] = {
          {"branch carry", e4},
          {"switch leakage", gate_weight * std::max(s_pos, s_neg)},
          {"gate-layer crosstalk", c5},
          {"output crosstalk", c6},
      };
      const auto* bind = std::max_element(std::begin(terms), std::end(terms),
                                          [](const auto& x, const auto& y) { return x.second < y.second; });
      std::ostringstream msg;
      msg << "worst-case error " << worst << " >= epsilon; binding term " << bind->first << " = " << bind->second;
      fail(msg.str());
    }
  }

  DenseLayer l1{Eigen::MatrixXd::Zero(n1, n), Eigen::VectorXd::Zero(n1)};
  l1.w.topRows(ng) = g.w;
  l1.w.middleRows(ng, nh) = h.w;
  l1.b.head(ng) = g.b;
  l1.b.segment(ng, nh) = h.b;
  l1.b[n1 - 1] = gate_bias;

  DenseLayer l2{Eigen::MatrixXd::Zero(3, n1), Eigen::VectorXd::Zero(3)};
  l2.w.block(0, 0, 1, ng) = g.c.transpose();
  l2.w.block(1, ng, 1, nh) = h.c.transpose();
  l2.b << g.c0 + shift, h.c0 + shift, 0.0;
  net.designated_layer = 1;
  net.designated_row = 2;
  net.designated_col = static_cast<int>(n1 - 1);

  DenseLayer l3{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)};
  l3.w(0, 0) = 1.0;
  l3.w(1, 1) = 1.0;
  l3.w(2, 2) = 1.0 / a;
  l3.w(3, 2) = 1.0 / a;
  l3.b[3] = -1.0;

  DenseLayer l4{Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Zero(4)};
  l4.w(0, 0) = 1.0;
  l4.w(1, 1) = 1.0;
  l4.w(2, 2) = 1.0;
  l4.w(2, 3) = -1.0;
  l4.w(3, 2) = -1.0;
  l4.w(3, 3) = 1.0;
  l4.b[3] = 1.0;

  const double gw = std::isfinite(gate_weight) ? gate_weight : 1e300;
  DenseLayer l5{Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2)};
  l5.w(0, 0) = 1.0;
  l5.w(0, 3) = -gw;
  l5.w(1, 1) = 1.0;
  l5.w(1, 2) = -gw;

  DenseLayer out{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Constant(1, -shift)};

  net.layers = {l1, l2, l3, l4, l5, out};
  return net;
}

double max_feasible_delta2(const ReluNet2& g, const ReluNet2& h, double epsilon, double input_bound, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("ratio must be in (0, 1)");
  auto feasible = [&](double d2) {
    try {
      build_flip_network(g, h, ratio * d2, d2, epsilon, input_bound);
      return true;
    } catch (const ValidationError&) {
      return false;
    }
  };
  double lo = 0.0;
  double hi = 1.0;
  while (feasible(hi) && hi < 1e6) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  if (lo <= 0.0) throw ValidationError("no feasible delta2 for epsilon " + std::to_string(epsilon));
  return lo;
}

std::pair<double, double> flip_sup_errors(const FlipNet& net, int grid_points,
                                          const std::vector<Eigen::MatrixXd>& perturbation) {
  if (grid_points < 2) throw ValidationError("grid_points must be >= 2");
  double ep = 0.0;
  double en = 0.0;
  for (const auto& p : grid(net.g.input_dim(), grid_points, net.input_bound)) {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
    const double y = net(x, &perturbation);
    ep = std::max(ep, std::abs(y - net.g(x)));
    en = std::max(en, std::abs(y - net.h(x)));
  }
  return {ep, en};
}

FlipReport verify_flip(const FlipNet& net, int grid_points, FlipMode mode, double scale, std::size_t trials,
                       std::uint64_t seed) {
  FlipReport report;
  auto pert = zero_perturbation(net);
  auto& designated = pert[static_cast<std::size_t>(net.designated_layer)](net.designated_row, net.designated_col);
  const double mid = 0.5 * (net.delta1 + net.delta2);
  designated = mid;
  report.sup_error_pos = flip_sup_errors(net, grid_points, pert).first;
  designated = -mid;
  report.sup_error_neg = flip_sup_errors(net, grid_points, pert).second;

  if (mode == FlipMode::designated_only) {
    report.flip_rate_pos = report.sup_error_pos < net.epsilon ? 1.0 : 0.0;
    report.flip_rate_neg = report.sup_error_neg < net.epsilon ? 1.0 : 0.0;
    report.theorem_bound = 1.0;
    report.trials = 1;
    report.passed = report.flip_rate_pos == 1.0 && report.flip_rate_neg == 1.0;
    return report;
  }

  if (!(scale > 0.0)) throw ValidationError("full_iid mode needs scale > 0");
  if (trials < 1) throw ValidationError("full_iid mode needs trials >= 1");
  Rng rng(seed);
  std::size_t pos = 0;
  std::size_t neg = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& m : pert) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-scale, scale);
      }
    }
    const double dw = designated;
    const auto [ep, en] = flip_sup_errors(net, grid_points, pert);
    if (dw > 0.0 && ep < net.epsilon) ++pos;
    if (dw < 0.0 && en < net.epsilon) ++neg;
  }
  const double nt = static_cast<double>(trials);
  auto cdf = [scale](double x) { return std::clamp((x + scale) / (2.0 * scale), 0.0, 1.0); };
  report.trials = trials;
  report.flip_rate_pos = static_cast<double>(pos) / nt;
  report.flip_rate_neg = static_cast<double>(neg) / nt;
  report.theorem_bound = std::max(0.0, cdf(net.delta2) - cdf(net.delta1));
  const double se = std::sqrt(report.theorem_bound * (1.0 - report.theorem_bound) / nt);
  report.passed = report.flip_rate_pos >= report.theorem_bound - 3.0 * se &&
                  report.flip_rate_neg >= report.theorem_bound - 3.0 * se;
  return report;
}

}  // namespace evoes
