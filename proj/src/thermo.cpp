#include "algothermo/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "algothermo/stable_sum.hpp"

namespace algothermo {

namespace {

constexpr double kCondLimit = 1e8;

std::string point_str(const EnsembleParams& p) {
  return "(beta=" + std::to_string(p.beta) + ", gamma=" + std::to_string(p.gamma) +
         ", delta=" + std::to_string(p.delta) + ")";
}

void require_interior(const EnsembleParams& p, const Vec3& h) {
  const EnsembleParams corner{p.beta - h[0], p.gamma - h[1], p.delta - h[2]};
  if (!corner.certified())
    throw RegionError("finite-difference stencil at " + point_str(p) +
                      " leaves the certified region");
}

Vec3 step_sizes(const EnsembleParams& p, double h) {
  return {h * std::max(1.0, std::abs(p.beta)), h * std::max(1.0, std::abs(p.gamma)),
          h * std::max(1.0, std::abs(p.delta))};
}

EnsembleParams shifted(EnsembleParams p, int coord, double amount) {
  p.coord(coord) += amount;
  return p;
}

// Gaussian elimination with partial pivoting; false when singular.
bool solve3(Mat3 a, Vec3 b, Vec3* x) {
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[perm[r]][col]) > std::abs(a[perm[pivot]][col])) pivot = r;
    std::swap(perm[col], perm[pivot]);
    const double diag = a[perm[col]][col];
    if (diag == 0 || !std::isfinite(diag)) return false;
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[perm[r]][col] / diag;
      for (int c = col; c < 3; ++c) a[perm[r]][c] -= f * a[perm[col]][c];
      b[perm[r]] -= f * b[perm[col]];
    }
  }
  for (int col = 2; col >= 0; --col) {
    double acc = b[perm[col]];
    for (int c = col + 1; c < 3; ++c) acc -= a[perm[col]][c] * (*x)[c];
    (*x)[col] = acc / a[perm[col]][col];
  }
  return std::isfinite((*x)[0]) && std::isfinite((*x)[1]) && std::isfinite((*x)[2]);
}

double frobenius(const Mat3& m) {
  double s = 0;
  for (const auto& row : m)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

// ||J||_F * ||J^-1||_F; an upper bound on the spectral condition number up
// to a factor of 3.
double condition_frobenius(const Mat3& j) {
  Mat3 inv{};
  for (int col = 0; col < 3; ++col) {
    Vec3 e{}, x{};
    e[col] = 1.0;
    if (!solve3(j, e, &x)) return std::numeric_limits<double>::infinity();
    for (int r = 0; r < 3; ++r) inv[r][col] = x[r];
  }
  return frobenius(j) * frobenius(inv);
}

struct MeanReadout {
  double entropy = 0, mean_E = 0, mean_V = 0, mean_N = 0;
};

// One stats evaluation yields every non-conjugate quantity at once.
MeanReadout means_at(const GibbsCalculator& calc, const EnsembleParams& p) {
  const EnsembleStats s = calc.stats(p);
  return {s.entropy, s.mean_E, s.mean_V, s.mean_N};
}

double pick(const MeanReadout& m, Quantity q) {
  switch (q) {
    case Quantity::S: return m.entropy;
    case Quantity::E: return m.mean_E;
    case Quantity::V: return m.mean_V;
    case Quantity::N: return m.mean_N;
    default: break;
  }
  throw Error("pick: conjugate quantity has no mean readout");
}

}  // namespace

ConjugateReadout conjugates(const EnsembleParams& params) {
  if (params.beta <= 0)
    throw Error("conjugates undefined at beta <= 0 (infinite-temperature limit)");
  return {1.0 / params.beta, params.gamma / params.beta, -params.delta / params.beta};
}

const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::S: return "S";
    case Quantity::E: return "E";
    case Quantity::V: return "V";
    case Quantity::N: return "N";
    case Quantity::T: return "T";
    case Quantity::P: return "P";
    case Quantity::Mu: return "mu";
  }
  return "?";
}

double quantity_value(const GibbsCalculator& calc, Quantity q,
                      const EnsembleParams& params) {
  switch (q) {
    case Quantity::T: return conjugates(params).temperature;
    case Quantity::P: return conjugates(params).pressure;
    case Quantity::Mu: return conjugates(params).potential;
    default: return pick(means_at(calc, params), q);
  }
}

GradHess lnz_derivatives(const GibbsCalculator& calc, const EnsembleParams& params,
                         double h) {
  if (h <= 0) throw Error("lnz_derivatives: h must be positive");
  const Vec3 hs = step_sizes(params, h);
  require_interior(params, {2 * hs[0], 2 * hs[1], 2 * hs[2]});

  const auto f = [&](const EnsembleParams& p) { return calc.ln_z_trunc(p); };
  const double f0 = f(params);

  GradHess out;
  double fp[3], fm[3];
  for (int i = 0; i < 3; ++i) {
    fp[i] = f(shifted(params, i, hs[i]));
    fm[i] = f(shifted(params, i, -hs[i]));
    out.grad[i] = (fp[i] - fm[i]) / (2 * hs[i]);
    out.hess[i][i] = (fp[i] - 2 * f0 + fm[i]) / (hs[i] * hs[i]);
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double fpp = f(shifted(shifted(params, i, hs[i]), j, hs[j]));
      const double fpm = f(shifted(shifted(params, i, hs[i]), j, -hs[j]));
      const double fmp = f(shifted(shifted(params, i, -hs[i]), j, hs[j]));
      const double fmm = f(shifted(shifted(params, i, -hs[i]), j, -hs[j]));
      const double mixed = (fpp - fpm - fmp + fmm) / (4 * hs[i] * hs[j]);
      out.hess[i][j] = mixed;
      out.hess[j][i] = mixed;
    }
  }
  return out;
}

Vec3 quantity_gradient(const GibbsCalculator& calc, Quantity q,
                       const EnsembleParams& params, double h) {
  const double b = params.beta;
  switch (q) {
    case Quantity::T:
      if (b <= 0) throw Error("quantity_gradient: T needs beta > 0");
      return {-1.0 / (b * b), 0.0, 0.0};
    case Quantity::P:
      if (b <= 0) throw Error("quantity_gradient: P needs beta > 0");
      return {-params.gamma / (b * b), 1.0 / b, 0.0};
    case Quantity::Mu:
      if (b <= 0) throw Error("quantity_gradient: mu needs beta > 0");
      return {params.delta / (b * b), 0.0, -1.0 / b};
    default:
      break;
  }
  const Vec3 hs = step_sizes(params, h);
  require_interior(params, hs);
  Vec3 grad{};
  for (int i = 0; i < 3; ++i) {
    const double qp = pick(means_at(calc, shifted(params, i, hs[i])), q);
    const double qm = pick(means_at(calc, shifted(params, i, -hs[i])), q);
    grad[i] = (qp - qm) / (2 * hs[i]);
  }
  return grad;
}

double constrained_partial(const GibbsCalculator& calc, Quantity target, Quantity wrt,
                           std::pair<Quantity, Quantity> held,
                           const EnsembleParams& params, double h,
                           double* condition_out) {
  if (params.beta <= 0)
    throw Error("constrained_partial: beta must be positive");

  Mat3 jac{};
  jac[0] = quantity_gradient(calc, wrt, params, h);
  jac[1] = quantity_gradient(calc, held.first, params, h);
  jac[2] = quantity_gradient(calc, held.second, params, h);

  const double cond = condition_frobenius(jac);
  if (condition_out) *condition_out = cond;
  if (!(cond < kCondLimit))
    throw ConditionError("constrained_partial: Jacobian of (" +
                             std::string(quantity_name(wrt)) + ", " +
                             quantity_name(held.first) + ", " +
                             quantity_name(held.second) + ") at " + point_str(params) +
                             " is ill-conditioned (cond ~ " + std::to_string(cond) + ")",
                         cond);

  Vec3 direction{};
  if (!solve3(jac, {1.0, 0.0, 0.0}, &direction))
    throw ConditionError("constrained_partial: singular Jacobian", cond);

  const Vec3 tgrad = quantity_gradient(calc, target, params, h);
  return tgrad[0] * direction[0] + tgrad[1] * direction[1] + tgrad[2] * direction[2];
}

double fundamental_residual(const GibbsCalculator& calc, const EnsembleParams& params,
                            const Vec3& direction, double h) {
  const double norm = std::sqrt(direction[0] * direction[0] +
                                direction[1] * direction[1] +
                                direction[2] * direction[2]);
  if (norm == 0) throw Error("fundamental_residual: direction must be nonzero");
  const ConjugateReadout cj = conjugates(params);

  const Vec3 unit{direction[0] / norm, direction[1] / norm, direction[2] / norm};
  const double hd = h * std::max({1.0, std::abs(params.beta), std::abs(params.gamma),
                                  std::abs(params.delta)});
  EnsembleParams plus = params, minus = params;
  for (int i = 0; i < 3; ++i) {
    plus.coord(i) += hd * unit[i];
    minus.coord(i) -= hd * unit[i];
  }
  if (!plus.certified() || !minus.certified())
    throw RegionError("fundamental_residual: stencil at " + point_str(params) +
                      " leaves the certified region");

  const MeanReadout mp = means_at(calc, plus);
  const MeanReadout mm = means_at(calc, minus);
  const double d_e = (mp.mean_E - mm.mean_E) / (2 * hd);
  const double d_s = (mp.entropy - mm.entropy) / (2 * hd);
  const double d_v = (mp.mean_V - mm.mean_V) / (2 * hd);
  const double d_n = (mp.mean_N - mm.mean_N) / (2 * hd);

  const double rhs = cj.temperature * d_s - cj.pressure * d_v + cj.potential * d_n;
  return std::abs(d_e - rhs) / std::max(std::abs(d_e), 1e-12);
}

namespace {

struct HoldTargets {
  Quantity hold;    // S or V
  double hold_val;
  double n_val;
};

void check_iterate_sane(const EnsembleParams& p) {
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(p.coord(i)) || std::abs(p.coord(i)) > 50.0)
      throw ConvergenceError("Newton corrector diverged to " + point_str(p));
  }
}

// Newton-corrects the two non-drive coordinates so that (hold, mean N) match
// their targets to relative tolerance.  The drive coordinate stays put.
void newton_correct(const GibbsCalculator& calc, const HoldTargets& t, int drive,
                    EnsembleParams* p, const IsolineOptions& opts) {
  const int ca = (drive == 0) ? 1 : 0;
  const int cb = (drive == 2) ? 1 : 2;
  const double s1 = std::max(1.0, std::abs(t.hold_val));
  const double s2 = std::max(1.0, std::abs(t.n_val));

  for (int iter = 0; iter < opts.max_newton; ++iter) {
    check_iterate_sane(*p);
    const MeanReadout m = means_at(calc, *p);
    const double f1 = (pick(m, t.hold) - t.hold_val) / s1;
    const double f2 = (m.mean_N - t.n_val) / s2;
    if (std::abs(f1) <= opts.tol && std::abs(f2) <= opts.tol) {
      if (!p->certified() || p->beta <= 0)
        throw RegionError("isoline left the certified region at " + point_str(*p));
      return;
    }

    const double ha = opts.h * std::max(1.0, std::abs(p->coord(ca)));
    const double hb = opts.h * std::max(1.0, std::abs(p->coord(cb)));
    const MeanReadout map = means_at(calc, shifted(*p, ca, ha));
    const MeanReadout mam = means_at(calc, shifted(*p, ca, -ha));
    const MeanReadout mbp = means_at(calc, shifted(*p, cb, hb));
    const MeanReadout mbm = means_at(calc, shifted(*p, cb, -hb));

    const double j11 = (pick(map, t.hold) - pick(mam, t.hold)) / (2 * ha * s1);
    const double j12 = (pick(mbp, t.hold) - pick(mbm, t.hold)) / (2 * hb * s1);
    const double j21 = (map.mean_N - mam.mean_N) / (2 * ha * s2);
    const double j22 = (mbp.mean_N - mbm.mean_N) / (2 * hb * s2);

    const double det = j11 * j22 - j12 * j21;
    if (det == 0 || !std::isfinite(det))
      throw ConvergenceError("Newton corrector hit a singular 2x2 Jacobian at " +
                             point_str(*p));
    p->coord(ca) -= (j22 * f1 - j12 * f2) / det;
    p->coord(cb) -= (-j21 * f1 + j11 * f2) / det;
  }
  throw ConvergenceError("Newton corrector failed to converge near " + point_str(*p) +
                         " after " + std::to_string(opts.max_newton) + " iterations");
}

HoldTargets targets_at(const GibbsCalculator& calc, Quantity hold,
                       const EnsembleParams& start) {
  if (hold != Quantity::S && hold != Quantity::V)
    throw Error("trace_isoline: hold quantity must be S or V");
  const MeanReadout m = means_at(calc, start);
  return {hold, pick(m, hold), m.mean_N};
}

}  // namespace

std::vector<EnsembleParams> trace_isoline(const GibbsCalculator& calc, Quantity hold,
                                          const EnsembleParams& start, int drive,
                                          double target, const IsolineOptions& opts) {
  if (drive < 0 || drive > 2) throw Error("trace_isoline: drive must be 0, 1 or 2");
  if (!start.certified() || start.beta <= 0)
    throw RegionError("trace_isoline: start " + point_str(start) +
                      " must be certified with beta > 0");
  const HoldTargets t = targets_at(calc, hold, start);

  std::vector<EnsembleParams> path{start};
  const double from = start.coord(drive);
  if (target == from) return path;

  const int nsteps =
      std::max(1, static_cast<int>(std::ceil(std::abs(target - from) / opts.step)));
  const double delta = (target - from) / nsteps;

  EnsembleParams cur = start;
  for (int k = 1; k <= nsteps; ++k) {
    EnsembleParams next = cur;
    next.coord(drive) = (k == nsteps) ? target : from + k * delta;
    // Secant predictor for the two solved coordinates.
    if (path.size() >= 2) {
      const EnsembleParams& a = path[path.size() - 2];
      for (int i = 0; i < 3; ++i)
        if (i != drive) next.coord(i) += cur.coord(i) - a.coord(i);
    }
    newton_correct(calc, t, drive, &next, opts);
    path.push_back(next);
    cur = next;
  }
  return path;
}

EnsembleParams isoline_match_entropy(const GibbsCalculator& calc,
                                     const EnsembleParams& start, int drive,
                                     double entropy_target,
                                     const IsolineOptions& opts) {
  const HoldTargets t = targets_at(calc, Quantity::V, start);
  const double scale = std::max(1.0, std::abs(entropy_target));

  const auto entropy_at = [&](double coord_value, EnsembleParams guess) {
    guess.coord(drive) = coord_value;
    newton_correct(calc, t, drive, &guess, opts);
    return std::pair{means_at(calc, guess).entropy, guess};
  };

  double x0 = start.coord(drive);
  double s0 = means_at(calc, start).entropy;
  if (std::abs(s0 - entropy_target) <= opts.tol * scale) return start;

  // Probe one step to learn which way entropy moves, then march to a bracket.
  EnsembleParams cur = start;
  double dir = (entropy_target > s0) ? 1.0 : -1.0;
  {
    auto [s_probe, p_probe] = entropy_at(x0 + dir * opts.step, cur);
    if (std::abs(s_probe - entropy_target) > std::abs(s0 - entropy_target) &&
        (s_probe - entropy_target) * (s0 - entropy_target) > 0)
      dir = -dir;  // moving away; entropy is decreasing in this coordinate
  }

  double x_prev = x0, s_prev = s0;
  EnsembleParams p_prev = start;
  constexpr int kMaxMarch = 1000;
  for (int i = 1; i <= kMaxMarch; ++i) {
    const double x = x0 + dir * i * opts.step;
    auto [s, p] = entropy_at(x, p_prev);
    if ((s - entropy_target) * (s_prev - entropy_target) <= 0) {
      // Bracketed: regula falsi on the drive coordinate.
      double lo = x_prev, hi = x, slo = s_prev, shi = s;
      EnsembleParams guess = p;
      for (int it = 0; it < 80; ++it) {
        const double denom = shi - slo;
        double mid = (denom != 0) ? lo + (entropy_target - slo) * (hi - lo) / denom
                                  : 0.5 * (lo + hi);
        if (!(mid > std::min(lo, hi) && mid < std::max(lo, hi)))
          mid = 0.5 * (lo + hi);
        auto [sm, pm] = entropy_at(mid, guess);
        guess = pm;
        if (std::abs(sm - entropy_target) <= opts.tol * scale) return pm;
        if ((sm - entropy_target) * (slo - entropy_target) <= 0) {
          hi = mid;
          shi = sm;
        } else {
          lo = mid;
          slo = sm;
        }
      }
      throw ConvergenceError("isoline_match_entropy: root polish failed near " +
                             point_str(guess));
    }
    x_prev = x;
    s_prev = s;
    p_prev = p;
  }
  throw ConvergenceError("isoline_match_entropy: no entropy crossing within " +
                         std::to_string(kMaxMarch) + " steps of the start");
}

LoopPath LoopPath::reversed() const {
  LoopPath out;
  const size_t n = vertices.size();
  if (n == 0) return out;
  out.vertices.reserve(n);
  out.legs.reserve(n);
  out.vertices.push_back(vertices[0]);
  for (size_t i = n - 1; i >= 1; --i) out.vertices.push_back(vertices[i]);
  for (size_t i = 0; i < n; ++i) out.legs.push_back(legs[n - 1 - i]);
  return out;
}

namespace {

// Sample points along one leg: refinement+1 endpoints and refinement
// midpoints, interleaved [e0, m1, e1, m2, e2, ...].
std::vector<EnsembleParams> discretize_leg(const GibbsCalculator& calc,
                                           const EnsembleParams& a,
                                           const EnsembleParams& b, const Leg& leg,
                                           int refinement,
                                           const IsolineOptions& opts) {
  std::vector<EnsembleParams> pts;
  pts.reserve(2 * refinement + 1);
  if (leg.kind == LegKind::Parametric) {
    for (int k = 0; k <= 2 * refinement; ++k) {
      const double u = static_cast<double>(k) / (2 * refinement);
      EnsembleParams p;
      for (int i = 0; i < 3; ++i)
        p.coord(i) = (1 - u) * a.coord(i) + u * b.coord(i);
      pts.push_back(p);
    }
    return pts;
  }

  const Quantity hold = (leg.kind == LegKind::IsoV) ? Quantity::V : Quantity::S;
  const HoldTargets t = targets_at(calc, hold, a);
  const double from = a.coord(leg.drive), to = b.coord(leg.drive);
  EnsembleParams cur = a;
  pts.push_back(a);
  for (int k = 1; k <= 2 * refinement; ++k) {
    const double u = static_cast<double>(k) / (2 * refinement);
    EnsembleParams next = cur;
    next.coord(leg.drive) = (k == 2 * refinement) ? to : (1 - u) * from + u * to;
    newton_correct(calc, t, leg.drive, &next, opts);
    pts.push_back(next);
    cur = next;
  }
  return pts;
}

}  // namespace

CycleReport cycle_integrals(const GibbsCalculator& calc, const LoopPath& loop,
                            int refinement, const IsolineOptions& opts_in) {
  // Sample-point corrections must sit far below the quadrature error or the
  // closure defect stops shrinking with refinement.
  IsolineOptions opts = opts_in;
  opts.tol = std::min(opts.tol, 1e-12);
  const size_t n = loop.vertices.size();
  if (n < 3) throw Error("cycle_integrals: a loop needs at least 3 vertices");
  if (loop.legs.size() != n)
    throw Error("cycle_integrals: need exactly one leg per vertex (closed loop)");
  if (refinement < 1) throw Error("cycle_integrals: refinement must be >= 1");
  for (const auto& v : loop.vertices) {
    if (!v.certified() || v.beta <= 0)
      throw RegionError("cycle_integrals: vertex " + point_str(v) +
                        " outside the certified region or beta <= 0");
  }

  StableSum heat, work, mu_flow;
  for (size_t i = 0; i < n; ++i) {
    const EnsembleParams& a = loop.vertices[i];
    const EnsembleParams& b = loop.vertices[(i + 1) % n];
    const auto pts = discretize_leg(calc, a, b, loop.legs[i], refinement, opts);

    // T, P, mu at a midpoint are closed-form in the parameters, so the state
    // quantities are only needed at segment endpoints.
    std::vector<MeanReadout> vals(refinement + 1);
    for (int k = 0; k <= refinement; ++k) vals[k] = means_at(calc, pts[2 * k]);

    for (int seg = 0; seg < refinement; ++seg) {
      const MeanReadout& left = vals[seg];
      const MeanReadout& right = vals[seg + 1];
      const ConjugateReadout cj = conjugates(pts[2 * seg + 1]);
      heat.add(cj.temperature * (right.entropy - left.entropy));
      work.add(cj.pressure * (right.mean_V - left.mean_V));
      mu_flow.add(cj.potential * (right.mean_N - left.mean_N));
    }
  }

  CycleReport report;
  report.delta_q = heat.value();
  report.work_term = work.value();
  report.mu_term = mu_flow.value();
  report.closure_residual =
      std::abs(report.delta_q - (report.work_term - report.mu_term));
  return report;
}

LoopPath build_loop(const GibbsCalculator& calc, const EnsembleParams& start,
                    const std::vector<LegSpec>& legs, const IsolineOptions& opts_in) {
  if (legs.size() < 3) throw Error("build_loop: need at least 3 legs");
  // Corners must be pinned much tighter than any later quadrature; corner
  // drift shows up as a refinement-independent closure defect.
  IsolineOptions opts = opts_in;
  opts.tol = std::min(opts.tol, 1e-12);

  const double entropy0 = means_at(calc, start).entropy;
  LoopPath loop;
  loop.vertices.push_back(start);

  EnsembleParams cur = start;
  for (const LegSpec& spec : legs) {
    if (spec.kind == LegKind::Parametric)
      throw Error("build_loop: parametric legs are not loop-spec constructible");
    const int drive = (spec.kind == LegKind::IsoV) ? 0 : 1;
    if (spec.match_start_entropy) {
      if (spec.kind != LegKind::IsoV)
        throw Error("build_loop: MATCH_S only applies to ISO_V legs");
      cur = isoline_match_entropy(calc, cur, drive, entropy0, opts);
    } else {
      cur = trace_isoline(calc, spec.kind == LegKind::IsoV ? Quantity::V : Quantity::S,
                          cur, drive, spec.target, opts)
                .back();
    }
    loop.vertices.push_back(cur);
    loop.legs.push_back({spec.kind, drive});
  }

  // The last traced vertex must return to the start for the loop to close.
  const EnsembleParams& last = loop.vertices.back();
  for (int i = 0; i < 3; ++i) {
    const double scale = std::max(1.0, std::abs(start.coord(i)));
    if (std::abs(last.coord(i) - start.coord(i)) > 1e-5 * scale)
      throw Error("build_loop: loop does not close; final vertex " + point_str(last) +
                  " vs start " + point_str(start) +
                  " (adjust leg targets or add a MATCH_S leg)");
  }
  loop.vertices.pop_back();
  return loop;
}

}  // namespace algothermo
