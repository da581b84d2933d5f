#ifndef ALGOTHERMO_THERMO_HPP
#define ALGOTHERMO_THERMO_HPP

#include <array>
#include <utility>
#include <vector>

#include "algothermo/ensemble.hpp"

namespace algothermo {

// T = 1/beta, P = gamma/beta, mu = -delta/beta; defined only for beta > 0.
struct ConjugateReadout {
  double temperature = 0;
  double pressure = 0;
  double potential = 0;
};

ConjugateReadout conjugates(const EnsembleParams& params);

// Quantities evaluated on the truncated ensemble: means for E, V, N.
enum class Quantity : uint8_t { S, E, V, N, T, P, Mu };

const char* quantity_name(Quantity q);
double quantity_value(const GibbsCalculator& calc, Quantity q,
                      const EnsembleParams& params);

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

struct GradHess {
  Vec3 grad{};
  Mat3 hess{};
};

// Central-difference gradient and Hessian of ln z_trunc in (beta, gamma,
// delta).  grad tracks (-mean_E, -mean_V, -mean_N) and hess the covariance
// matrix of (E, V, N); the Hessian is symmetrized by construction.  Every
// stencil point must stay in the certified region.
GradHess lnz_derivatives(const GibbsCalculator& calc, const EnsembleParams& params,
                         double h);

// FD gradient of a quantity in (beta, gamma, delta); closed-form for T, P, mu.
Vec3 quantity_gradient(const GibbsCalculator& calc, Quantity q,
                       const EnsembleParams& params, double h);

// Partial derivative of `target` with respect to `wrt` holding `held` fixed,
// computed by solving the 3x3 sensitivity system.  Throws ConditionError when
// the held/wrt Jacobian has condition number above 1e8.
double constrained_partial(const GibbsCalculator& calc, Quantity target, Quantity wrt,
                           std::pair<Quantity, Quantity> held,
                           const EnsembleParams& params, double h,
                           double* condition_out = nullptr);

// |dE - (T dS - P dV + mu dN)| / max(|dE|, eps) along the given direction in
// (beta, gamma, delta) space.
double fundamental_residual(const GibbsCalculator& calc, const EnsembleParams& params,
                            const Vec3& direction, double h);

struct IsolineOptions {
  double step = 0.05;       // drive-coordinate increment
  double h = 1e-4;          // FD step scale
  double tol = 1e-8;        // relative hold tolerance
  int max_newton = 20;
};

// Predictor-corrector continuation holding `hold` (S or V) and mean N at
// their values at `start`, driving coordinate `drive` (0=beta, 1=gamma,
// 2=delta) to `target`.  Returns the corrected polyline including `start`.
std::vector<EnsembleParams> trace_isoline(const GibbsCalculator& calc, Quantity hold,
                                          const EnsembleParams& start, int drive,
                                          double target,
                                          const IsolineOptions& opts = {});

// As above but stops where the ensemble entropy crosses `entropy_target`
// (drive direction chosen automatically); used to close cycles.
EnsembleParams isoline_match_entropy(const GibbsCalculator& calc,
                                     const EnsembleParams& start, int drive,
                                     double entropy_target,
                                     const IsolineOptions& opts = {});

enum class LegKind : uint8_t { Parametric, IsoV, IsoS };

struct Leg {
  LegKind kind = LegKind::Parametric;
  int drive = 0;  // drive coordinate for iso legs
};

// Closed loop: legs[i] connects vertices[i] to vertices[(i+1) % size].
struct LoopPath {
  std::vector<EnsembleParams> vertices;
  std::vector<Leg> legs;

  LoopPath reversed() const;
};

struct CycleReport {
  double delta_q = 0;           // loop integral of T dS
  double work_term = 0;         // loop integral of P dV
  double mu_term = 0;           // loop integral of mu dN
  double closure_residual = 0;  // |delta_q - (work_term - mu_term)|
};

// Midpoint-rule line integrals around the loop with `refinement` segments per
// leg.  Iso legs are re-corrected onto their isolines at every sample.
CycleReport cycle_integrals(const GibbsCalculator& calc, const LoopPath& loop,
                            int refinement, const IsolineOptions& opts = {});

// One leg of a loop-spec: drive a coordinate to a target along an isoline, or
// stop where the entropy returns to the starting vertex's value.
struct LegSpec {
  LegKind kind = LegKind::IsoV;
  double target = 0;
  bool match_start_entropy = false;
};

// Builds a closed LoopPath from `start` by tracing each leg in turn.  The
// final vertex must land back at `start` within tolerance.
LoopPath build_loop(const GibbsCalculator& calc, const EnsembleParams& start,
                    const std::vector<LegSpec>& legs,
                    const IsolineOptions& opts = {});

}  // namespace algothermo

#endif  // ALGOTHERMO_THERMO_HPP
