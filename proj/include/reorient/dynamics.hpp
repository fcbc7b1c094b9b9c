// Copyright 2026 The Reorient Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Free-fall dynamics of the planar model in manipulator form
//
//   M(q) [p'', theta'', q''] + C(q, v) v + g = [0, 0, tau]
//
// with p the system COM. Because p is the COM, M is block diagonal
// (total mass on the p block) and gravity only enters the p rows, so the
// 10-dim reduced state [theta, theta_dot, q, q_dot] evolves on its own.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "reorient/dual.hpp"
#include "reorient/robot_model.hpp"

namespace reorient {

inline constexpr int kGenDim = 7;  // [px, pz, theta, q1..q4]
using GenVector = Eigen::Matrix<double, kGenDim, 1>;
using GenMatrix = Eigen::Matrix<double, kGenDim, kGenDim>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMatrix = Eigen::Matrix<double, kStateDim, kControlDim>;

// Non-finite values produced while integrating. knot is -1 outside rollouts.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, int knot = -1)
      : std::runtime_error(what), knot_(knot) {}
  int knot() const { return knot_; }

 private:
  int knot_;
};

struct DynamicsTerms {
  GenMatrix mass_matrix;
  GenVector bias;  // C v + g
  Eigen::Matrix<double, kGenDim, kControlDim> selector;
};

struct StateDerivative {
  double d_theta = 0.0;
  double d_theta_dot = 0.0;
  Vector4 d_q = Vector4::Zero();
  Vector4 d_q_dot = Vector4::Zero();
  std::optional<Eigen::Vector2d> d_com_pos;
  std::optional<Eigen::Vector2d> d_com_vel;

  Vector10 vec() const {
    Vector10 v;
    v << d_theta, d_theta_dot, d_q, d_q_dot;
    return v;
  }
};

struct Jacobians {
  StateMatrix A;  // df/dx
  InputMatrix B;  // df/du
};

struct MomentumDecomposition {
  double total = 0.0;
  double body = 0.0;
  double legs = 0.0;
};

namespace detail {

template <typename T>
struct P2 {
  T x{};
  T z{};
};
template <typename T>
P2<T> operator+(const P2<T>& a, const P2<T>& b) { return {a.x + b.x, a.z + b.z}; }
template <typename T>
P2<T> operator-(const P2<T>& a, const P2<T>& b) { return {a.x - b.x, a.z - b.z}; }
template <typename T, typename S>
P2<T> scale(const S& s, const P2<T>& a) { return {s * a.x, s * a.z}; }
template <typename T>
T dot(const P2<T>& a, const P2<T>& b) { return a.x * b.x + a.z * b.z; }
// Derivative of a point with respect to a positive rotation about +y.
template <typename T>
P2<T> perp(const P2<T>& a) { return {a.z, -a.x}; }

inline constexpr int kReduced = 5;   // [theta, q1..q4]
inline constexpr int kElements = 7;  // body, then (upper, lower, boot) per leg

template <typename T>
struct Element {
  double mass = 0.0;
  double inertia = 0.0;
  P2<T> pos;                         // relative to the body COM
  std::array<P2<T>, kReduced> jac;   // d pos / d [theta, q]
  P2<T> acc;                         // velocity-product acceleration
  std::array<double, kReduced> jw{};  // angular velocity row
};

template <typename T>
using Elements = std::array<Element<T>, kElements>;

// Sign that maps joint rotation to physical rotation about +y. The back leg
// is parameterised as the mirror image of the front leg.
inline double leg_sign(int leg) { return leg == 0 ? 1.0 : -1.0; }

template <typename T>
Elements<T> mass_elements(const RobotModel& m, const T& theta, const T* q, const T& theta_dot,
                          const T* q_dot) {
  using std::cos;
  using std::sin;
  Elements<T> el;
  el[0].mass = m.body_mass;
  el[0].inertia = m.body_inertia;
  el[0].jw[0] = 1.0;

  const T ct = cos(theta);
  const T st = sin(theta);
  const T w0sq = theta_dot * theta_dot;
  for (int leg = 0; leg < 2; ++leg) {
    const LegParams& lp = m.legs[leg];
    const double sg = leg_sign(leg);
    const int jh = 2 * leg;
    const int ch = 1 + jh;
    const int ck = 2 + jh;

    const P2<T> hip{lp.hip_offset * ct, -lp.hip_offset * st};
    const T psi1 = sg * theta + q[jh];
    const T psi2 = psi1 + q[jh + 1];
    const P2<T> d1{-sg * sin(psi1), -cos(psi1)};
    const P2<T> d2{-sg * sin(psi2), -cos(psi2)};
    const T w1 = theta_dot + sg * q_dot[jh];
    const T w2 = w1 + sg * q_dot[jh + 1];
    const T w1sq = w1 * w1;
    const T w2sq = w2 * w2;
    const P2<T> knee = hip + scale(lp.upper.length, d1);
    const P2<T> hip_acc = scale(-w0sq, hip);
    const P2<T> knee_acc = hip_acc + scale(-w1sq * lp.upper.length, d1);

    Element<T>& up = el[1 + 3 * leg];
    up.mass = lp.upper.mass;
    up.inertia = lp.upper.inertia;
    up.pos = hip + scale(lp.upper.com_offset, d1);
    up.jac[0] = perp(up.pos);
    up.jac[ch] = scale(sg * lp.upper.com_offset, perp(d1));
    up.acc = hip_acc + scale(-w1sq * lp.upper.com_offset, d1);
    up.jw[0] = 1.0;
    up.jw[ch] = sg;

    auto distal = [&](Element<T>& e, double along) {
      e.pos = knee + scale(along, d2);
      e.jac[0] = perp(e.pos);
      e.jac[ch] = scale(sg, perp(e.pos - hip));
      e.jac[ck] = scale(sg * along, perp(d2));
      e.acc = knee_acc + scale(-w2sq * along, d2);
    };

    Element<T>& lo = el[2 + 3 * leg];
    lo.mass = lp.lower.mass;
    lo.inertia = lp.lower.inertia;
    distal(lo, lp.lower.com_offset);
    lo.jw[0] = 1.0;
    lo.jw[ch] = sg;
    lo.jw[ck] = sg;

    Element<T>& boot = el[3 + 3 * leg];
    boot.mass = m.boot_mass;
    boot.inertia = 0.0;
    distal(boot, lp.lower.length);
  }
  return el;
}

// Position, Jacobian and velocity-product acceleration of the system COM
// relative to the body COM.
template <typename T>
struct ComKinematics {
  double mass = 0.0;
  P2<T> pos;
  std::array<P2<T>, kReduced> jac;
  P2<T> acc;
};

template <typename T>
ComKinematics<T> com_kinematics(const Elements<T>& el) {
  ComKinematics<T> c;
  for (const auto& e : el) c.mass += e.mass;
  for (const auto& e : el) {
    const double w = e.mass / c.mass;
    c.pos = c.pos + scale(w, e.pos);
    c.acc = c.acc + scale(w, e.acc);
    for (int a = 0; a < kReduced; ++a) c.jac[a] = c.jac[a] + scale(w, e.jac[a]);
  }
  return c;
}

template <typename T>
struct ReducedTerms {
  std::array<std::array<T, kReduced>, kReduced> mass;
  std::array<T, kReduced> bias;
};

// Reduced mass matrix and velocity-product forces for [theta, q], using
// sum m (J - Jc)^T (J - Jc) = sum m J^T J - M Jc^T Jc.
template <typename T>
ReducedTerms<T> reduced_terms(const Elements<T>& el) {
  const ComKinematics<T> com = com_kinematics(el);
  ReducedTerms<T> r;
  for (int a = 0; a < kReduced; ++a) {
    for (int b = a; b < kReduced; ++b) {
      T s = -com.mass * dot(com.jac[a], com.jac[b]);
      for (const auto& e : el) {
        s += e.mass * dot(e.jac[a], e.jac[b]);
        if (e.jw[a] != 0.0 && e.jw[b] != 0.0) s += e.inertia * e.jw[a] * e.jw[b];
      }
      r.mass[a][b] = s;
      r.mass[b][a] = s;
    }
    T s = -com.mass * dot(com.jac[a], com.acc);
    for (const auto& e : el) s += e.mass * dot(e.jac[a], e.acc);
    r.bias[a] = s;
  }
  return r;
}

// Cholesky solve of the 5x5 SPD system.
template <typename T>
std::array<T, kReduced> solve_spd(std::array<std::array<T, kReduced>, kReduced> a,
                                  std::array<T, kReduced> b) {
  using std::sqrt;
  for (int j = 0; j < kReduced; ++j) {
    T d = a[j][j];
    for (int k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(value_of(d) > 0.0)) {
      // Only reachable with non-finite inputs; let callers see NaN.
      b.fill(T(std::numeric_limits<double>::quiet_NaN()));
      return b;
    }
    const T l = sqrt(d);
    a[j][j] = l;
    for (int i = j + 1; i < kReduced; ++i) {
      T s = a[i][j];
      for (int k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / l;
    }
  }
  for (int i = 0; i < kReduced; ++i) {
    for (int k = 0; k < i; ++k) b[i] -= a[i][k] * b[k];
    b[i] = b[i] / a[i][i];
  }
  for (int i = kReduced - 1; i >= 0; --i) {
    for (int k = i + 1; k < kReduced; ++k) b[i] -= a[k][i] * b[k];
    b[i] = b[i] / a[i][i];
  }
  return b;
}

// f(x, u) on the reduced 10-dim state.
template <typename T>
std::array<T, kStateDim> state_derivative(const RobotModel& m, const std::array<T, kStateDim>& x,
                                          const std::array<T, kControlDim>& u) {
  const Elements<T> el = mass_elements(m, x[0], &x[2], x[1], &x[6]);
  const ReducedTerms<T> rt = reduced_terms(el);
  std::array<T, kReduced> rhs;
  rhs[0] = -rt.bias[0];
  for (int j = 0; j < kNumJoints; ++j) rhs[1 + j] = u[j] - rt.bias[1 + j];
  const auto acc = solve_spd(rt.mass, rhs);
  std::array<T, kStateDim> xd;
  xd[0] = x[1];
  xd[1] = acc[0];
  for (int j = 0; j < kNumJoints; ++j) {
    xd[2 + j] = x[6 + j];
    xd[6 + j] = acc[1 + j];
  }
  return xd;
}

template <typename T, std::size_t N>
std::array<T, N> axpy(const std::array<T, N>& x, double a, const std::array<T, N>& y) {
  std::array<T, N> r;
  for (std::size_t i = 0; i < N; ++i) r[i] = x[i] + a * y[i];
  return r;
}

// One classical RK4 step of the reduced dynamics with u held constant.
template <typename T>
std::array<T, kStateDim> rk4_reduced(const RobotModel& m, const std::array<T, kStateDim>& x,
                                     const std::array<T, kControlDim>& u, double h) {
  const auto k1 = state_derivative(m, x, u);
  const auto k2 = state_derivative(m, axpy(x, 0.5 * h, k1), u);
  const auto k3 = state_derivative(m, axpy(x, 0.5 * h, k2), u);
  const auto k4 = state_derivative(m, axpy(x, h, k3), u);
  std::array<T, kStateDim> r;
  for (int i = 0; i < kStateDim; ++i) r[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return r;
}

inline std::array<double, kStateDim> to_array(const Vector10& v) {
  std::array<double, kStateDim> a;
  for (int i = 0; i < kStateDim; ++i) a[i] = v[i];
  return a;
}
inline std::array<double, kControlDim> to_array(const Vector4& v) {
  return {v[0], v[1], v[2], v[3]};
}
inline Vector10 to_vector(const std::array<double, kStateDim>& a) {
  return Eigen::Map<const Vector10>(a.data());
}

inline void require_finite(const State& s) {
  if (!s.vec().allFinite() || (s.com && !(s.com->pos.allFinite() && s.com->vel.allFinite()))) {
    throw std::domain_error("state contains non-finite values");
  }
}

// Per-element data in the COM frame, for momentum and inverse dynamics.
struct ComFrameElement {
  double mass;
  double inertia;
  Eigen::Vector2d rho;                           // position relative to system COM
  Eigen::Matrix<double, 2, kGenDim> jac;         // d(p + rho) / d generalized coords
  Eigen::Vector2d acc;                           // velocity-product acceleration
  Eigen::Matrix<double, 1, kGenDim> jw;
  bool body;
};

inline std::array<ComFrameElement, kElements> com_frame_elements(const RobotModel& m, const State& s) {
  const auto el = mass_elements<double>(m, s.theta, s.q.data(), s.theta_dot, s.q_dot.data());
  const auto com = com_kinematics(el);
  std::array<ComFrameElement, kElements> out;
  for (int i = 0; i < kElements; ++i) {
    const auto& e = el[i];
    ComFrameElement& o = out[i];
    o.mass = e.mass;
    o.inertia = e.inertia;
    o.rho = {e.pos.x - com.pos.x, e.pos.z - com.pos.z};
    o.acc = {e.acc.x - com.acc.x, e.acc.z - com.acc.z};
    o.jac.setZero();
    o.jac(0, 0) = 1.0;
    o.jac(1, 1) = 1.0;
    o.jw.setZero();
    for (int a = 0; a < kReduced; ++a) {
      o.jac(0, 2 + a) = e.jac[a].x - com.jac[a].x;
      o.jac(1, 2 + a) = e.jac[a].z - com.jac[a].z;
      o.jw(2 + a) = e.jw[a];
    }
    o.body = (i == 0);
  }
  return out;
}

inline GenVector generalized_velocity(const State& s) {
  GenVector v;
  const Eigen::Vector2d pv = s.com ? s.com->vel : Eigen::Vector2d::Zero();
  v << pv, s.theta_dot, s.q_dot;
  return v;
}

}  // namespace detail

// M a + C v + g for generalized acceleration a = [p'', theta'', q''].
inline GenVector inverse_dynamics(const RobotModel& m, const State& s, const GenVector& accel) {
  detail::require_finite(s);
  const auto el = detail::com_frame_elements(m, s);
  const Eigen::Vector2d gravity(0.0, m.gravity);
  GenVector f = GenVector::Zero();
  for (const auto& e : el) {
    const Eigen::Vector2d r_dd = e.jac * accel + e.acc;
    f += e.jac.transpose() * (e.mass * (r_dd + gravity));
    f += e.jw.transpose() * (e.inertia * e.jw.dot(accel));
  }
  return f;
}

inline DynamicsTerms compute_terms(const RobotModel& m, const State& s) {
  detail::require_finite(s);
  const auto el = detail::com_frame_elements(m, s);
  DynamicsTerms t;
  t.mass_matrix.setZero();
  for (const auto& e : el) {
    t.mass_matrix += e.mass * e.jac.transpose() * e.jac + e.inertia * e.jw.transpose() * e.jw;
  }
  t.mass_matrix = 0.5 * (t.mass_matrix + t.mass_matrix.transpose()).eval();
  t.bias = inverse_dynamics(m, s, GenVector::Zero());
  t.selector.setZero();
  t.selector.bottomRows<kNumJoints>().setIdentity();
  return t;
}

inline StateDerivative forward_dynamics(const RobotModel& m, const State& s, const ControlInput& u) {
  detail::require_finite(s);
  const auto xd = detail::state_derivative<double>(m, detail::to_array(s.vec()), detail::to_array(u.tau));
  StateDerivative d;
  d.d_theta = xd[0];
  d.d_theta_dot = xd[1];
  for (int j = 0; j < kNumJoints; ++j) {
    d.d_q[j] = xd[2 + j];
    d.d_q_dot[j] = xd[6 + j];
  }
  if (s.com) {
    d.d_com_pos = s.com->vel;
    d.d_com_vel = Eigen::Vector2d(0.0, -m.gravity);
  }
  return d;
}

// Generalized acceleration [p'', theta'', q''] from forward dynamics.
inline GenVector generalized_acceleration(const RobotModel& m, const State& s, const ControlInput& u) {
  const auto d = forward_dynamics(m, s, u);
  GenVector a;
  a << 0.0, -m.gravity, d.d_theta_dot, d.d_q_dot;
  return a;
}

// Exact continuous-time Jacobians by forward-mode differentiation.
inline Jacobians dynamics_jacobians(const RobotModel& m, const State& s, const ControlInput& u) {
  using D = Dual<kStateDim + kControlDim>;
  std::array<D, kStateDim> x;
  std::array<D, kControlDim> uu;
  const Vector10 xv = s.vec();
  for (int i = 0; i < kStateDim; ++i) x[i] = D::variable(xv[i], i);
  for (int i = 0; i < kControlDim; ++i) uu[i] = D::variable(u.tau[i], kStateDim + i);
  const auto f = detail::state_derivative(m, x, uu);
  Jacobians J;
  for (int r = 0; r < kStateDim; ++r) {
    for (int c = 0; c < kStateDim; ++c) J.A(r, c) = f[r].d[c];
    for (int c = 0; c < kControlDim; ++c) J.B(r, c) = f[r].d[kStateDim + c];
  }
  return J;
}

// Classical RK4 on any vector type supporting +, scalar * and a field
// f(x) -> dx.
template <typename Field, typename Vec>
Vec rk4_integrate(Field&& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(Vec(x + (0.5 * h) * k1));
  const Vec k3 = f(Vec(x + (0.5 * h) * k2));
  const Vec k4 = f(Vec(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Discrete step x_{k+1} = F(x_k, u_k) on the reduced state.
inline Vector10 discrete_step(const RobotModel& m, const Vector10& x, const Vector4& u, double h) {
  return detail::to_vector(detail::rk4_reduced<double>(m, detail::to_array(x), detail::to_array(u), h));
}

// dF/dx and dF/du of the RK4 step, exact to rounding.
inline void discrete_step_jacobians(const RobotModel& m, const Vector10& x, const Vector4& u, double h,
                                    StateMatrix& A, InputMatrix& B) {
  using D = Dual<kStateDim + kControlDim>;
  std::array<D, kStateDim> xd;
  std::array<D, kControlDim> ud;
  for (int i = 0; i < kStateDim; ++i) xd[i] = D::variable(x[i], i);
  for (int i = 0; i < kControlDim; ++i) ud[i] = D::variable(u[i], kStateDim + i);
  const auto next = detail::rk4_reduced(m, xd, ud, h);
  for (int r = 0; r < kStateDim; ++r) {
    for (int c = 0; c < kStateDim; ++c) A(r, c) = next[r].d[c];
    for (int c = 0; c < kControlDim; ++c) B(r, c) = next[r].d[kStateDim + c];
  }
}

// RK4 step of the full state. The COM is integrated alongside the reduced
// state (exactly, since its acceleration is constant).
inline State rk4_step(const RobotModel& m, const State& s, const ControlInput& u, double h = 0.001) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  using Full = Eigen::Matrix<double, kStateDim + 4, 1>;
  Full x;
  const ComState c = s.com.value_or(ComState{});
  x << s.vec(), c.pos, c.vel;
  const auto tau = detail::to_array(u.tau);
  auto field = [&](const Full& y) -> Full {
    Full d;
    d.head<kStateDim>() = detail::to_vector(detail::state_derivative<double>(
        m, detail::to_array(Vector10(y.head<kStateDim>())), tau));
    d.segment<2>(kStateDim) = y.segment<2>(kStateDim + 2);
    d.segment<2>(kStateDim + 2) = Eigen::Vector2d(0.0, -m.gravity);
    return d;
  };
  const Full next = rk4_integrate(field, x, h);
  if (!next.allFinite()) throw NumericalError("integration produced non-finite state");
  State r = State::from_vec(next.head<kStateDim>());
  if (s.com) r.com = ComState{next.segment<2>(kStateDim), next.segment<2>(kStateDim + 2)};
  return r;
}

// Angular momentum about the system COM (pitch axis), split into the body
// link and everything attached to it.
inline MomentumDecomposition angular_momentum(const RobotModel& m, const State& s) {
  const auto el = detail::com_frame_elements(m, s);
  const GenVector v = detail::generalized_velocity(s);
  MomentumDecomposition L;
  for (const auto& e : el) {
    // Only the internal motion contributes about the COM.
    GenVector vi = v;
    vi[0] = vi[1] = 0.0;
    const Eigen::Vector2d rd = e.jac * vi;
    const double l = e.mass * (e.rho.y() * rd.x() - e.rho.x() * rd.y()) + e.inertia * e.jw.dot(v);
    (e.body ? L.body : L.legs) += l;
  }
  L.total = L.body + L.legs;
  return L;
}

// Composite pitch inertia about the COM with the joints locked.
inline double locked_inertia(const RobotModel& m, const State& s) {
  const auto t = compute_terms(m, s);
  return t.mass_matrix(2, 2);
}

}  // namespace reorient
