#pragma once

#include <memory>

#include "bzmarble/lattice.hpp"
#include "bzmarble/parallel.hpp"

namespace bzmarble {

/// Light-sensitive two-variable Oregonator parameters and integration constants.
///
///   du/dt = (u - u^2 - (f v + phi)(u - q)/(u + q)) / eps + d_u lap(u)
///   dv/dt = u - v
///
/// `phi` is the base (dark) inhibitor production rate; illumination raises it.
/// `d_u` is not fixed by the source model and defaults to the usual
/// nondimensional 1.0.
struct SimParams {
  double eps = 0.02;
  double f = 1.4;
  double q = 0.002;
  double phi = 0.05;
  double d_u = 1.0;
  double dt = 0.001;
  double dx = 0.25;
  /// Project u onto [0, inf) after each step. At dt = 0.001 the explicit
  /// update otherwise overshoots past the u = -q pole in refractory tails.
  bool nonnegative_u = true;

  /// dt * d_u / dx^2; must stay <= 0.25.
  double diffusion_number() const noexcept { return dt * d_u / (dx * dx); }

  /// Throws InvalidParameter when a sign constraint or the diffusion
  /// stability guard is violated.
  void validate() const;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

/// Activator and inhibitor fields sharing one mask, plus the step counter.
struct MarbleState {
  ScalarField u;
  ScalarField v;
  long step_index = 0;

  /// Both fields filled homogeneously on the active cells.
  static MarbleState homogeneous(std::shared_ptr<const DomainMask> mask, double u0, double v0);

  double time(double dt) const noexcept { return static_cast<double>(step_index) * dt; }
  const DomainMask& mask() const noexcept { return u.mask(); }

  /// Max |u| and |v| over active cells (NaN propagates).
  double max_abs_u() const noexcept;
  double max_abs_v() const noexcept;
};

/// Reaction part of du/dt. Throws SingularityError at u == -q.
double reaction_u(double u, double v, const SimParams& p);
/// Reaction part of du/dt with an explicit phi overriding p.phi.
double reaction_u(double u, double v, double phi, const SimParams& p);

inline double reaction_v(double u, double v) noexcept { return u - v; }

/// Homogeneous steady state u* = v* on [q, 1] by bisection, residual <= 1e-12.
/// Throws NoFixedPoint when the bracket has no sign change.
double find_homogeneous_fixed_point(const SimParams& p);
/// Residual u - u^2 - (f u + phi)(u - q)/(u + q) of the homogeneous steady state.
double fixed_point_residual(double u, const SimParams& p) noexcept;

/// Explicit Euler stepper with preallocated scratch fields.
///
/// Both updates read only pre-step values. Any |u|, |v| > 10 or non-finite
/// value raises BlowUpError naming the first offending cell in row-major order.
class EulerStepper {
 public:
  explicit EulerStepper(const SimParams& params, RowBandPool* pool = nullptr);

  const SimParams& params() const noexcept { return params_; }

  /// One step with a spatially uniform phi.
  void step(MarbleState& state, double phi);
  /// One step with per-cell phi (partial illumination).
  void step(MarbleState& state, const ScalarField& phi);
  /// Reaction switched off; only u diffuses.
  void diffuse(MarbleState& state);

 private:
  template <class PhiAt>
  void step_impl(MarbleState& state, PhiAt phi_at, bool reaction);
  void ensure_scratch(const MarbleState& state);

  SimParams params_;
  RowBandPool* pool_;
  std::unique_ptr<ScalarField> u_next_;
  std::unique_ptr<ScalarField> v_next_;
};

/// Value-returning convenience wrapper around EulerStepper.
MarbleState euler_step(const MarbleState& state, const SimParams& p, double phi);
MarbleState euler_step(const MarbleState& state, const SimParams& p, const ScalarField& phi);

}  // namespace bzmarble
