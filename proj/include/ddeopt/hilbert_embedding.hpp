#pragma once

#include <vector>

#include "ddeopt/core_model.hpp"
#include "ddeopt/delay_dynamics.hpp"

namespace ddeopt {

// Point of R x L2(-T, 0). The second component is stored on the closed grid
// xi_0 = -T, ..., xi_N = 0 so that membership in the generator domain
// (eta1(0) = eta0) can be checked; values are linearly interpolated.
template <class Scalar>
struct BasicHilbertPoint {
  using Samples = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Scalar eta0{};
  Samples eta1;

  BasicHilbertPoint& operator+=(const BasicHilbertPoint& o) {
    eta0 += o.eta0;
    eta1 += o.eta1;
    return *this;
  }
  BasicHilbertPoint& operator-=(const BasicHilbertPoint& o) {
    eta0 -= o.eta0;
    eta1 -= o.eta1;
    return *this;
  }
  BasicHilbertPoint& operator*=(Scalar s) {
    eta0 *= s;
    eta1 *= s;
    return *this;
  }
};

template <class Scalar>
BasicHilbertPoint<Scalar> operator+(BasicHilbertPoint<Scalar> a, const BasicHilbertPoint<Scalar>& b) {
  return a += b;
}
template <class Scalar>
BasicHilbertPoint<Scalar> operator-(BasicHilbertPoint<Scalar> a, const BasicHilbertPoint<Scalar>& b) {
  return a -= b;
}
template <class Scalar>
BasicHilbertPoint<Scalar> operator*(Scalar s, BasicHilbertPoint<Scalar> a) {
  return a *= s;
}

using HilbertPoint = BasicHilbertPoint<double>;

HilbertPoint to_hilbert(const HistoryState& eta);
HistoryState to_history(const HilbertPoint& p);
HilbertPoint zero_point(int n_hist);

// Euclidean part plus trapezoid L2 part on [-T, 0].
double inner(double T, const HilbertPoint& p, const HilbertPoint& q);
double norm(double T, const HilbertPoint& p);

HilbertPoint apply_semigroup(const ProblemConfig& cfg, double t, const HilbertPoint& p);
HilbertPoint apply_A_inverse(const ProblemConfig& cfg, const HilbertPoint& p);
// (r q0, forward differences of q1); the grid-level generator used as a round-trip oracle
HilbertPoint apply_discrete_A(const ProblemConfig& cfg, const HilbertPoint& q);
double minus_one_norm(const ProblemConfig& cfg, const HilbertPoint& p);

struct MildSolution {
  double dt = 0.0;
  std::vector<HilbertPoint> states;  // X(i dt), i = 0..steps
  int iterations = 0;
  double last_update = 0.0;
};

MildSolution mild_solve(const ProblemConfig& cfg, const HilbertPoint& p, const ControlPath& c,
                        double horizon);

// sup over grid times of |X(t) - Xbar(t)|_{-1} / |eta - etabar|_{-1} under zero control
double minus_one_growth(const ProblemConfig& cfg, const HilbertPoint& p, const HilbertPoint& q,
                        double horizon);

// Inverse of the generator with the lag term eta1(-T) folded in:
// ((eta0 - c)/r, c + int_{-T}^s eta1), c = eta0/(r+1) - r/(r+1) int eta1.
HilbertPoint lagged_generator_inverse(double r, double T, const HilbertPoint& p);
double lagged_generator_offset(double r, double eta0, double integral);

struct CounterexampleRow {
  int n = 0;
  double abs_eta0 = 0.0;
  double minus_one_norm = 0.0;
  double integral = 0.0;  // int eta1^n
  double offset = 0.0;    // the constant c of the inverse
};

std::vector<CounterexampleRow> pointwise_delay_counterexample(int n_max, double T = 1.0,
                                                              double r = 1.0 / 3.0);

}  // namespace ddeopt
