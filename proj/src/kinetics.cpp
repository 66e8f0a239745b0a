#include "bzmarble/kinetics.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "bzmarble/error.hpp"

namespace bzmarble {

namespace {

constexpr double kBlowUpLimit = 10.0;
constexpr std::uint64_t kBlowUpBits = 0x4024000000000000ULL;  // bit pattern of 10.0

struct RowArgs {
  const double* u;
  const double* v;
  const double* deg;
  const double* phi;  // null for uniform phi
  double* u_out;
  double* v_out;
  long n;
  long stride;
};

struct Coeffs {
  double inv_eps;
  double f;
  double q;
  double phi;
  double d_u_inv_dx2;
  double dt;
};

// Returns nonzero when some output cell is out of range or non-finite.
template <bool kFieldPhi, bool kReaction, bool kFloor>
int update_row_impl(const double* __restrict u, const double* __restrict v, const double* __restrict deg,
                    const double* __restrict phi, double* __restrict uo, double* __restrict vo, const long n,
                    const long s, const Coeffs c) {
  const double inv_eps = c.inv_eps;
  const double f = c.f;
  const double q = c.q;
  const double phi0 = c.phi;
  const double diff = c.d_u_inv_dx2;
  const double dt = c.dt;
  for (long x = 0; x < n; ++x) {
    const double uc = u[x];
    const double vc = v[x];
    const double lap = (u[x - 1] + u[x + 1]) + (u[x - s] + u[x + s]) - deg[x] * uc;
    double du = diff * lap;
    double dv = 0.0;
    if constexpr (kReaction) {
      const double ph = kFieldPhi ? phi[x] : phi0;
      du = (uc - uc * uc - (f * vc + ph) * (uc - q) / (uc + q)) * inv_eps + du;
      dv = uc - vc;
    }
    double un = uc + dt * du;
    if constexpr (kFloor) un = un < 0.0 ? 0.0 : un;
    uo[x] = un;
    vo[x] = vc + dt * dv;
  }
  // Sign-stripped bit patterns order like magnitudes, with NaN and Inf above
  // every finite value; the integer form vectorises.
  std::uint64_t worst = 0;
  for (long x = 0; x < n; ++x) {
    std::uint64_t bu;
    std::uint64_t bv;
    std::memcpy(&bu, uo + x, sizeof bu);
    std::memcpy(&bv, vo + x, sizeof bv);
    bu &= 0x7fffffffffffffffULL;
    bv &= 0x7fffffffffffffffULL;
    const std::uint64_t m = bu > bv ? bu : bv;
    worst = m > worst ? m : worst;
  }
  const int bad = worst > kBlowUpBits;
  return bad != 0;
}

template <bool kFieldPhi, bool kReaction, bool kFloor>
int update_row(const RowArgs& a, const Coeffs& c) {
  return update_row_impl<kFieldPhi, kReaction, kFloor>(a.u, a.v, a.deg, a.phi, a.u_out, a.v_out, a.n, a.stride, c);
}

using RowFn = int (*)(const RowArgs&, const Coeffs&);

RowFn pick_kernel(bool field_phi, bool reaction, bool floor_u) {
  static constexpr RowFn table[2][2][2] = {
      {{update_row<false, false, false>, update_row<false, false, true>},
       {update_row<false, true, false>, update_row<false, true, true>}},
      {{update_row<true, false, false>, update_row<true, false, true>},
       {update_row<true, true, false>, update_row<true, true, true>}},
  };
  return table[field_phi][reaction][floor_u];
}

double max_abs(const ScalarField& field) noexcept {
  const DomainMask& mask = field.mask();
  double m = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    const auto span = mask.row_span(y);
    for (int x = span.begin; x < span.end; ++x) {
      const double a = std::fabs(field.row(y)[x]);
      if (std::isnan(a)) return a;
      if (a > m) m = a;
    }
  }
  return m;
}

}  // namespace

void SimParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidParameter(what);
  };
  require(eps > 0.0, "eps must be positive");
  require(q > 0.0, "q must be positive");
  require(f > 0.0, "f must be positive");
  require(dt > 0.0, "dt must be positive");
  require(dx > 0.0, "dx must be positive");
  require(d_u >= 0.0, "d_u must be non-negative");
  require(phi >= 0.0, "phi must be non-negative");
  if (!(diffusion_number() <= 0.25)) {
    throw InvalidParameter("diffusion stability guard violated: dt*d_u/dx^2 = " +
                           std::to_string(diffusion_number()) + " > 0.25");
  }
}

MarbleState MarbleState::homogeneous(std::shared_ptr<const DomainMask> mask, double u0, double v0) {
  ScalarField u(mask, u0);
  ScalarField v(std::move(mask), v0);
  return MarbleState{std::move(u), std::move(v), 0};
}

double MarbleState::max_abs_u() const noexcept { return max_abs(u); }
double MarbleState::max_abs_v() const noexcept { return max_abs(v); }

double reaction_u(double u, double v, double phi, const SimParams& p) {
  if (u + p.q == 0.0) throw SingularityError("reaction_u is singular at u = -q");
  return (u - u * u - (p.f * v + phi) * (u - p.q) / (u + p.q)) / p.eps;
}

double reaction_u(double u, double v, const SimParams& p) { return reaction_u(u, v, p.phi, p); }

double fixed_point_residual(double u, const SimParams& p) noexcept {
  return u - u * u - (p.f * u + p.phi) * (u - p.q) / (u + p.q);
}

double find_homogeneous_fixed_point(const SimParams& p) {
  double lo = p.q;
  double hi = 1.0;
  double g_lo = fixed_point_residual(lo, p);
  const double g_hi = fixed_point_residual(hi, p);
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if ((g_lo > 0.0) == (g_hi > 0.0)) {
    throw NoFixedPoint("no sign change of the steady-state residual on [q, 1]");
  }
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 200; ++i) {
    mid = 0.5 * (lo + hi);
    const double g_mid = fixed_point_residual(mid, p);
    if (g_mid == 0.0 || mid == lo || mid == hi) break;
    if ((g_mid > 0.0) == (g_lo > 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  if (!(std::fabs(fixed_point_residual(mid, p)) <= 1e-12)) {
    throw NoFixedPoint("bisection did not reach a residual of 1e-12");
  }
  return mid;
}

EulerStepper::EulerStepper(const SimParams& params, RowBandPool* pool) : params_(params), pool_(pool) {
  params_.validate();
}

void EulerStepper::ensure_scratch(const MarbleState& state) {
  if (!u_next_ || u_next_->mask_ptr() != state.u.mask_ptr()) {
    u_next_ = std::make_unique<ScalarField>(state.u.mask_ptr());
    v_next_ = std::make_unique<ScalarField>(state.u.mask_ptr());
  }
}

template <class PhiAt>
void EulerStepper::step_impl(MarbleState& state, PhiAt phi_row, bool reaction) {
  if (state.u.mask_ptr() != state.v.mask_ptr()) throw InvalidParameter("u and v must share one mask");
  ensure_scratch(state);
  const DomainMask& mask = state.mask();
  const SimParams& p = params_;
  constexpr bool field_phi = !std::is_same_v<PhiAt, double>;
  Coeffs cc{1.0 / p.eps, p.f, p.q, p.phi, p.d_u / (p.dx * p.dx), p.dt};
  if constexpr (!field_phi) cc.phi = phi_row;
  const RowFn kernel = pick_kernel(field_phi, reaction, p.nonnegative_u);

  std::vector<int> band_bad(pool_ ? pool_->threads() : 1, 0);
  auto band = [&](unsigned index, int y0, int y1) {
    int bad = 0;
    for (int y = y0; y < y1; ++y) {
      const auto span = mask.row_span(y);
      if (span.begin == span.end) continue;
      const double* phi_ptr = nullptr;
      if constexpr (field_phi) phi_ptr = phi_row(y) + span.begin;
      const RowArgs args{state.u.row(y) + span.begin,
                         state.v.row(y) + span.begin,
                         mask.degree_data() + mask.padded_index(span.begin, y),
                         phi_ptr,
                         u_next_->row(y) + span.begin,
                         v_next_->row(y) + span.begin,
                         span.end - span.begin,
                         mask.stride()};
      bad |= kernel(args, cc);
    }
    band_bad[index] = bad;
  };
  if (pool_) {
    pool_->run(mask.height(), band);
  } else {
    band(0, 0, mask.height());
  }

  for (int bad : band_bad) {
    if (!bad) continue;
    for (int y = 0; y < mask.height(); ++y) {
      const auto span = mask.row_span(y);
      for (int x = span.begin; x < span.end; ++x) {
        const double un = u_next_->row(y)[x];
        const double vn = v_next_->row(y)[x];
        if (!(std::fabs(un) <= kBlowUpLimit) || !(std::fabs(vn) <= kBlowUpLimit)) {
          throw BlowUpError(state.step_index + 1, x, y, un, vn);
        }
      }
    }
  }

  std::swap(state.u, *u_next_);
  std::swap(state.v, *v_next_);
  ++state.step_index;
}

void EulerStepper::step(MarbleState& state, double phi) {
  if (!(phi >= 0.0)) throw InvalidParameter("phi must be non-negative");
  step_impl(state, phi, true);
}

void EulerStepper::step(MarbleState& state, const ScalarField& phi) {
  if (phi.mask_ptr() != state.u.mask_ptr()) throw InvalidParameter("phi field must share the state's mask");
  const DomainMask& mask = phi.mask();
  for (int y = 0; y < mask.height(); ++y) {
    const auto span = mask.row_span(y);
    for (int x = span.begin; x < span.end; ++x) {
      if (!(phi.row(y)[x] >= 0.0)) throw InvalidParameter("phi field values must be non-negative");
    }
  }
  step_impl(state, [&phi](int y) { return phi.row(y); }, true);
}

void EulerStepper::diffuse(MarbleState& state) { step_impl(state, 0.0, false); }

MarbleState euler_step(const MarbleState& state, const SimParams& p, double phi) {
  MarbleState next = state;
  EulerStepper stepper(p);
  stepper.step(next, phi);
  return next;
}

MarbleState euler_step(const MarbleState& state, const SimParams& p, const ScalarField& phi) {
  MarbleState next = state;
  EulerStepper stepper(p);
  stepper.step(next, phi);
  return next;
}

}  // namespace bzmarble
