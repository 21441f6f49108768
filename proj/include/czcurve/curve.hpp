// Sampled curves in a normed space: derivatives, Hoelder fitting, local
// bilipschitz windows, linear approximations, arc-length quadrature, the
// big-piece selection inside balls, and the ray-appending construction that
// turns a bounded curve measure into one with far-away unbounded support.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "czcurve/parallel.hpp"
#include "czcurve/rng.hpp"
#include "czcurve/space.hpp"

namespace czcurve {

// ---------------------------------------------------------------------------
// Curve samples
// ---------------------------------------------------------------------------

/// Parameter grid with positions and (optionally analytic) derivatives.
/// Closed curves carry a parameter period; grids wrap cyclically.
struct SampledCurve {
  std::vector<double> params;
  PointCloud positions;
  PointCloud derivs;  // empty until supplied or computed
  NormedSpace space;
  bool closed = false;
  double period = 0.0;

  std::size_t nodes() const { return params.size(); }
  bool has_derivs() const { return derivs.size() == params.size(); }

  void validate() const {
    if (params.size() < 2) throw std::invalid_argument("curve needs at least 2 samples");
    for (std::size_t i = 0; i + 1 < params.size(); ++i)
      if (!(params[i] < params[i + 1])) throw std::invalid_argument("params must be strictly increasing");
    if (positions.size() != params.size()) throw std::invalid_argument("positions/params size mismatch");
    if (derivs.size() != 0 && derivs.size() != params.size())
      throw std::invalid_argument("derivs/params size mismatch");
    if (closed && !(period > params.back() - params.front()))
      throw std::invalid_argument("closed curve needs period beyond the parameter span");
  }
};

struct CurveMetadata {
  double alpha = 1.0;  // Hoelder exponent of the derivative
  double c = 0.0;      // fitted Hoelder constant
  double m = 0.0;      // inf speed estimate
  double M = 0.0;      // sup speed estimate
  double delta = 0.0;  // bilipschitz window length

  void validate() const {
    if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in (0,1]");
    if (!(m > 0.0) || !(M >= m) || !std::isfinite(M)) throw std::invalid_argument("need 0 < m <= M < inf");
    if (c < 0.0 || !(delta > 0.0)) throw std::invalid_argument("need c >= 0 and delta > 0");
  }
};

namespace detail {

// Neighbor triple for node i; endpoint nodes reuse the one-sided triple,
// closed curves wrap with the parameter unwound by the period.
struct Stencil {
  double ta, tb, tc;
  std::size_t ia, ib, ic;
};

inline Stencil stencil_at(const SampledCurve& g, std::size_t i) {
  const std::size_t K = g.nodes();
  if (g.closed) {
    std::size_t prev = (i == 0) ? K - 1 : i - 1;
    std::size_t next = (i + 1 == K) ? 0 : i + 1;
    double tp = g.params[prev] - (i == 0 ? g.period : 0.0);
    double tn = g.params[next] + (i + 1 == K ? g.period : 0.0);
    return {tp, g.params[i], tn, prev, i, next};
  }
  if (i == 0) return {g.params[0], g.params[1], g.params[2], 0, 1, 2};
  if (i + 1 == K) return {g.params[K - 3], g.params[K - 2], g.params[K - 1], K - 3, K - 2, K - 1};
  return {g.params[i - 1], g.params[i], g.params[i + 1], i - 1, i, i + 1};
}

// Derivative of the quadratic through three nodes, evaluated at t. Reduces to
// the classical centered / one-sided second-order differences on uniform grids.
inline void lagrange3_deriv(const SampledCurve& g, const Stencil& s, double t, double* out) {
  double la = (2 * t - s.tb - s.tc) / ((s.ta - s.tb) * (s.ta - s.tc));
  double lb = (2 * t - s.ta - s.tc) / ((s.tb - s.ta) * (s.tb - s.tc));
  double lc = (2 * t - s.ta - s.tb) / ((s.tc - s.ta) * (s.tc - s.tb));
  auto pa = g.positions.pt(s.ia), pb = g.positions.pt(s.ib), pc = g.positions.pt(s.ic);
  for (int d = 0; d < g.positions.dim; ++d) out[d] = la * pa[d] + lb * pb[d] + lc * pc[d];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Derivatives
// ---------------------------------------------------------------------------

/// Coordinatewise finite-difference derivative: second-order centered at
/// interior nodes, one-sided three-point at the endpoints of open curves.
inline PointCloud wstar_derivative(const SampledCurve& curve) {
  curve.validate();
  if (curve.nodes() < 3) throw std::invalid_argument("need K >= 2 intervals for derivative stencils");
  PointCloud out;
  out.dim = curve.positions.dim;
  out.xs.assign(curve.positions.xs.size(), 0.0);
  parallel_for(curve.nodes(), [&](std::size_t i) {
    auto s = detail::stencil_at(curve, i);
    detail::lagrange3_deriv(curve, s, curve.params[i], out.xs.data() + i * out.dim);
  });
  return out;
}

inline SampledCurve with_fd_derivs(SampledCurve curve) {
  curve.derivs = wstar_derivative(curve);
  return curve;
}

/// Symmetric (one-sided at open endpoints) difference quotient of norms; the
/// discrete metric derivative |gamma-dot|(t_i).
inline double metric_derivative(const SampledCurve& curve, std::size_t i) {
  const std::size_t K = curve.nodes();
  if (i >= K) throw std::out_of_range("node index");
  if (curve.closed) {
    std::size_t prev = (i == 0) ? K - 1 : i - 1;
    std::size_t next = (i + 1 == K) ? 0 : i + 1;
    double tp = curve.params[prev] - (i == 0 ? curve.period : 0.0);
    double tn = curve.params[next] + (i + 1 == K ? curve.period : 0.0);
    return curve.space.dist(curve.positions.pt(next), curve.positions.pt(prev)) / (tn - tp);
  }
  if (i == 0)
    return curve.space.dist(curve.positions.pt(1), curve.positions.pt(0)) / (curve.params[1] - curve.params[0]);
  if (i + 1 == K)
    return curve.space.dist(curve.positions.pt(K - 1), curve.positions.pt(K - 2)) /
           (curve.params[K - 1] - curve.params[K - 2]);
  return curve.space.dist(curve.positions.pt(i + 1), curve.positions.pt(i - 1)) /
         (curve.params[i + 1] - curve.params[i - 1]);
}

inline double node_speed(const SampledCurve& curve, std::size_t i) {
  return curve.space.norm(curve.derivs.pt(i));
}

/// Max over nodes of | ||gamma'|| - metric derivative |; shrinks under grid
/// refinement for smooth curves.
inline double metric_vs_wstar_defect(const SampledCurve& curve) {
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  std::vector<double> err(curve.nodes());
  parallel_for(curve.nodes(), [&](std::size_t i) { err[i] = std::fabs(node_speed(curve, i) - metric_derivative(curve, i)); });
  double m = 0.0;
  for (double e : err) m = std::max(m, e);
  return m;
}

/// Max interior deviation between supplied derivatives and the FD stencil;
/// used to sanity-check analytically supplied derivatives.
inline double fd_consistency_defect(const SampledCurve& curve) {
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  PointCloud fd = wstar_derivative(curve);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < curve.nodes(); ++i)
    worst = std::max(worst, curve.space.dist(fd.pt(i), curve.derivs.pt(i)));
  return worst;
}

// ---------------------------------------------------------------------------
// Hoelder fit / bilipschitz window / flatness
// ---------------------------------------------------------------------------

struct HolderFit {
  double c = 0.0;
  bool exhaustive = true;  // false when the pair set was subsampled
  std::size_t pair_stride = 1;
};

/// c = max over sampled node pairs of ||g'(ti)-g'(tj)|| / |ti-tj|^alpha.
/// Exhaustive up to 4096 nodes, documented strided subsample beyond.
inline HolderFit holder_fit(const SampledCurve& curve, double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) throw std::invalid_argument("alpha must lie in (0,1]");
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  const std::size_t K = curve.nodes();
  HolderFit fit;
  fit.pair_stride = K <= 4096 ? 1 : (K + 4095) / 4096;
  fit.exhaustive = fit.pair_stride == 1;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < K; i += fit.pair_stride) idx.push_back(i);
  std::vector<double> best(idx.size(), 0.0);
  parallel_for(idx.size(), [&](std::size_t a) {
    std::size_t i = idx[a];
    double local = 0.0;
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      std::size_t j = idx[b];
      double dt = std::fabs(curve.params[j] - curve.params[i]);
      local = std::max(local, curve.space.dist(curve.derivs.pt(i), curve.derivs.pt(j)) / std::pow(dt, alpha));
    }
    // adjacent pairs always participate: they dominate the small-gap limit
    if (i + 1 < K) {
      double dt = curve.params[i + 1] - curve.params[i];
      local = std::max(local, curve.space.dist(curve.derivs.pt(i), curve.derivs.pt(i + 1)) / std::pow(dt, alpha));
    }
    best[a] = local;
  });
  for (double b : best) fit.c = std::max(fit.c, b);
  return fit;
}

/// Speed range estimated from node speeds and adjacent chord slopes; the
/// chord slopes make the upper bilipschitz bound exact over grid pairs.
inline std::pair<double, double> speed_range(const SampledCurve& curve) {
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t i = 0; i < curve.nodes(); ++i) {
    double s = node_speed(curve, i);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  for (std::size_t i = 0; i + 1 < curve.nodes(); ++i) {
    double slope = curve.space.dist(curve.positions.pt(i + 1), curve.positions.pt(i)) /
                   (curve.params[i + 1] - curve.params[i]);
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
  }
  return {lo, hi};
}

/// Largest grid-representable window delta such that every node pair closer
/// than delta in parameter satisfies ||g'(ti)-g'(tj)|| < m/2.
inline double bilipschitz_window(const SampledCurve& curve, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("degenerate speed: m must be positive");
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  const std::size_t K = curve.nodes();
  std::vector<double> worst(K, std::numeric_limits<double>::infinity());
  parallel_for(K, [&](std::size_t i) {
    double local = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < K; ++j) {
      if (curve.space.dist(curve.derivs.pt(i), curve.derivs.pt(j)) >= m / 2.0)
        local = std::min(local, curve.params[j] - curve.params[i]);
    }
    worst[i] = local;
  });
  double delta = std::numeric_limits<double>::infinity();
  for (double w : worst) delta = std::min(delta, w);
  if (!std::isfinite(delta)) delta = curve.params.back() - curve.params.front();
  return delta;
}

/// Hoelder constant, speed range and window in one pass.
inline CurveMetadata fit_metadata(const SampledCurve& curve, double alpha) {
  CurveMetadata meta;
  meta.alpha = alpha;
  meta.c = holder_fit(curve, alpha).c;
  auto [m, M] = speed_range(curve);
  meta.m = m;
  meta.M = M;
  meta.delta = bilipschitz_window(curve, m);
  meta.validate();
  return meta;
}

/// L_{t_i0}(t) = gamma(t_i0) + (t - t_i0) * gamma'(t_i0).
inline Vec linear_approx(const SampledCurve& curve, std::size_t i0, double t) {
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  Vec out(curve.positions.dim);
  auto p = curve.positions.pt(i0);
  auto d = curve.derivs.pt(i0);
  double dt = t - curve.params[i0];
  for (int k = 0; k < curve.positions.dim; ++k) out[k] = p[k] + dt * d[k];
  return out;
}

struct FlatnessResult {
  double ratio = 0.0;   // max ||gamma(t) - L_{t0}(t)|| / |t-t0|^{1+alpha}
  bool within_c = true;
  std::size_t argmax_i0 = 0, argmax_i = 0;
};

/// Exhaustive linear-approximation defect over grid pairs, compared against
/// the fitted Hoelder constant.
inline FlatnessResult flatness_check(const SampledCurve& curve, const CurveMetadata& meta) {
  meta.validate();
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  const std::size_t K = curve.nodes();
  struct Slot {
    double ratio = 0.0;
    std::size_t i = 0;
  };
  std::vector<Slot> rows(K);
  parallel_for(K, [&](std::size_t i0) {
    Slot slot;
    auto p0 = curve.positions.pt(i0);
    auto d0 = curve.derivs.pt(i0);
    Vec l(curve.positions.dim);
    for (std::size_t i = 0; i < K; ++i) {
      if (i == i0) continue;
      double dt = curve.params[i] - curve.params[i0];
      for (int k = 0; k < curve.positions.dim; ++k) l[k] = p0[k] + dt * d0[k];
      double r = curve.space.dist(curve.positions.pt(i), l) / std::pow(std::fabs(dt), 1.0 + meta.alpha);
      if (r > slot.ratio) {
        slot.ratio = r;
        slot.i = i;
      }
    }
    rows[i0] = slot;
  });
  FlatnessResult out;
  for (std::size_t i0 = 0; i0 < K; ++i0)
    if (rows[i0].ratio > out.ratio) {
      out.ratio = rows[i0].ratio;
      out.argmax_i0 = i0;
      out.argmax_i = rows[i0].i;
    }
  out.within_c = out.ratio <= meta.c;
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature and the H^1 measure
// ---------------------------------------------------------------------------

/// Composite-trapezoid node weights ||gamma'(t_i)|| * dt_i; nonnegative, so
/// they define a genuine measure. Closed curves use the cyclic rule.
inline std::vector<double> h1_weights(const SampledCurve& curve) {
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  const std::size_t K = curve.nodes();
  std::vector<double> w(K);
  if (curve.closed) {
    for (std::size_t i = 0; i < K; ++i) {
      double tp = (i == 0) ? curve.params[K - 1] - curve.period : curve.params[i - 1];
      double tn = (i + 1 == K) ? curve.params[0] + curve.period : curve.params[i + 1];
      w[i] = node_speed(curve, i) * (tn - tp) / 2.0;
    }
    return w;
  }
  w[0] = node_speed(curve, 0) * (curve.params[1] - curve.params[0]) / 2.0;
  w[K - 1] = node_speed(curve, K - 1) * (curve.params[K - 1] - curve.params[K - 2]) / 2.0;
  for (std::size_t i = 1; i + 1 < K; ++i)
    w[i] = node_speed(curve, i) * (curve.params[i + 1] - curve.params[i - 1]) / 2.0;
  return w;
}

struct InjectivityViolation {
  std::size_t i = 0, j = 0;
  double param_gap = 0.0;
  double position_gap = 0.0;
};

/// Distinct-parameter nodes must not coincide in space: positions within
/// 1e-12 at parameter distance beyond one grid step are rejected.
inline std::optional<InjectivityViolation> injectivity_violation(const SampledCurve& curve) {
  const std::size_t K = curve.nodes();
  double max_step = 0.0;
  for (std::size_t i = 0; i + 1 < K; ++i) max_step = std::max(max_step, curve.params[i + 1] - curve.params[i]);
  double span = curve.closed ? curve.period : 0.0;
  std::vector<InjectivityViolation> found(K);
  std::vector<char> hit(K, 0);
  parallel_for(K, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < K; ++j) {
      double gap = curve.params[j] - curve.params[i];
      if (curve.closed) gap = std::min(gap, span - gap);
      if (gap <= max_step) continue;
      if (curve.space.dist(curve.positions.pt(i), curve.positions.pt(j)) <= 1e-12) {
        found[i] = {i, j, gap, curve.space.dist(curve.positions.pt(i), curve.positions.pt(j))};
        hit[i] = 1;
        return;
      }
    }
  });
  for (std::size_t i = 0; i < K; ++i)
    if (hit[i]) return found[i];
  return std::nullopt;
}

inline void require_injective(const SampledCurve& curve) {
  if (auto v = injectivity_violation(curve))
    throw std::invalid_argument("curve is not injective: nodes " + std::to_string(v->i) + " and " +
                                std::to_string(v->j) + " coincide at parameter distance " +
                                std::to_string(v->param_gap));
}

/// Integral of f along the curve against arc length: sum f(gamma(t_i)) w_i
/// with the h1_weights, shared bit-for-bit with discretize_H1.
template <typename F>
double curve_integral(const SampledCurve& curve, F&& f) {
  require_injective(curve);
  auto w = h1_weights(curve);
  double s = 0.0;
  for (std::size_t i = 0; i < curve.nodes(); ++i) s += f(curve.positions.pt(i)) * w[i];
  return s;
}

inline double arc_length(const SampledCurve& curve) {
  return curve_integral(curve, [](std::span<const double>) { return 1.0; });
}

/// The discrete H^1|_Gamma measure: support = curve samples, weights = the
/// trapezoid arc-length weights.
inline DiscreteMeasure discretize_H1(const SampledCurve& curve) {
  require_injective(curve);
  return DiscreteMeasure::on_cloud(curve.positions, curve.space, h1_weights(curve));
}

/// Rescales positions/derivs so arc length is exactly the reported 1 and
/// translates gamma(t_0) to the origin.
inline SampledCurve normalize_curve(const SampledCurve& curve) {
  if (!curve.has_derivs()) throw std::invalid_argument("curve needs derivatives");
  double len = arc_length(curve);
  if (!(len > 0.0)) throw std::invalid_argument("degenerate curve length");
  SampledCurve out = curve;
  Vec base = curve.positions.point(0);
  for (std::size_t i = 0; i < curve.nodes(); ++i)
    for (int d = 0; d < curve.positions.dim; ++d)
      out.positions.xs[i * curve.positions.dim + d] = (curve.positions.xs[i * curve.positions.dim + d] - base[d]) / len;
  for (auto& v : out.derivs.xs) v /= len;
  return out;
}

// ---------------------------------------------------------------------------
// Big-piece selection (balls centered on the curve)
// ---------------------------------------------------------------------------

struct BigPieceResult {
  double a = 0.0, b = 0.0;          // selected parameter interval
  std::vector<std::size_t> nodes;   // indices inside [a,b]
  DiscreteMeasure G;                // H^1 restricted to the selected nodes
  double theta = 0.0;               // m*delta / (4*M*reg)
  double mass_ball = 0.0;           // nu(B cap Gamma)
  double mass_G = 0.0;
  bool contained = false;           // G inside the open ball
  bool mass_ok = false;             // nu(G) >= theta * nu(B cap Gamma)
  bool diam_ok = false;             // preimage diameters <= 4s/m over samples
  double worst_diam_ratio = 0.0;    // max diam / (4s/m)
  double literal_diam_ratio = 0.0;  // max diam / (2s/inf-speed), reported only
};

/// Selects gamma([a,b]) inside B(gamma(a), r) with |b-a| =
/// delta*nu(B)/(2M reg) snapped toward zero, and certifies the containment,
/// the theta mass bound, and the preimage-diameter bound. The asserted
/// diameter bound 4s/m follows from the verified two-sided bilipschitz
/// estimate; the tighter 2s/inf-speed ratio is reported alongside.
inline BigPieceResult choose_big_piece(const SampledCurve& curve, const CurveMetadata& meta, std::size_t a_index,
                                       double r, double reg) {
  meta.validate();
  if (a_index >= curve.nodes()) throw std::invalid_argument("ball center must be a grid node");
  if (!(r > 0.0) || !(reg >= 1.0)) throw std::invalid_argument("need r > 0 and reg >= 1");
  double len_total = arc_length(curve);
  if (len_total > 1.0 + 1e-9) throw std::invalid_argument("normalize the curve to arc length <= 1 first");

  DiscreteMeasure nu = discretize_H1(curve);
  const double a = curve.params[a_index];
  auto center = curve.positions.pt(a_index);

  BigPieceResult out;
  for (std::size_t i = 0; i < curve.nodes(); ++i)
    if (curve.space.dist(curve.positions.pt(i), center) < r) out.mass_ball += nu.weight(i);

  const double m_cl = std::min(1.0, meta.m);
  const double M_cl = std::max(1.0, meta.M);
  double len = meta.delta * out.mass_ball / (2.0 * M_cl * reg);
  out.theta = m_cl * meta.delta / (4.0 * M_cl * reg);

  // Snap toward zero to keep G strictly inside the ball; prefer the forward
  // direction, fall back to backward when the domain ends too early.
  double b = a;
  if (a + len <= curve.params.back()) {
    auto it = std::upper_bound(curve.params.begin(), curve.params.end(), a + len);
    b = *(it - 1);
  } else if (a - len >= curve.params.front()) {
    auto it = std::lower_bound(curve.params.begin(), curve.params.end(), a - len);
    b = *it;
  } else {
    b = curve.params.back();  // whole tail; interval still shorter than len
  }
  if (b == a) throw std::invalid_argument("resolution too coarse: selected interval collapsed to the center node");
  out.a = std::min(a, b);
  out.b = std::max(a, b);

  for (std::size_t i = 0; i < curve.nodes(); ++i)
    if (curve.params[i] >= out.a && curve.params[i] <= out.b) out.nodes.push_back(i);
  out.G = nu.restricted(out.nodes);
  out.mass_G = out.G.total_mass();

  out.contained = true;
  for (auto i : out.nodes)
    if (!(curve.space.dist(curve.positions.pt(i), center) < r)) out.contained = false;
  out.mass_ok = out.mass_G >= out.theta * out.mass_ball;

  // Preimage diameter sweep over sampled (y, s).
  const double inf_speed = meta.m;  // unclamped infimum
  out.diam_ok = true;
  std::size_t stride = std::max<std::size_t>(1, out.nodes.size() / 24);
  for (std::size_t yi = 0; yi < out.nodes.size(); yi += stride) {
    auto y = curve.positions.pt(out.nodes[yi]);
    for (int si = 0; si < 8; ++si) {
      double s = r * std::exp2(-si);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto i : out.nodes)
        if (curve.space.dist(curve.positions.pt(i), y) < s) {
          lo = std::min(lo, curve.params[i]);
          hi = std::max(hi, curve.params[i]);
        }
      if (!(hi >= lo)) continue;
      double diam = hi - lo;
      out.worst_diam_ratio = std::max(out.worst_diam_ratio, diam / (4.0 * s / m_cl));
      out.literal_diam_ratio = std::max(out.literal_diam_ratio, diam / (2.0 * s / inf_speed));
    }
  }
  out.diam_ok = out.worst_diam_ratio <= 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Ray appending
// ---------------------------------------------------------------------------

struct AppendRayResult {
  DiscreteMeasure nu;       // H^1 on Gamma union the truncated ray
  double ray_mass = 0.0;
  double spacing = 0.0;
  double min_separation = 0.0;  // distance between ray nodes and Gamma
  std::size_t ray_nodes = 0;
};

/// Appends the ray {s v0 : s in [3, S_max]} to a normalized curve measure
/// (total mass 1, support containing the origin), discretized at the curve's
/// median node weight.
inline AppendRayResult append_ray(const DiscreteMeasure& curve_measure, const Vec& v0, double s_max) {
  if (!curve_measure.has_points()) throw std::invalid_argument("ray appending needs a point-cloud measure");
  const NormedSpace& sp = curve_measure.space();
  if (std::fabs(sp.norm(v0) - 1.0) > 1e-12) throw std::invalid_argument("ray direction must be a unit vector");
  double mass = curve_measure.total_mass();
  if (std::fabs(mass - 1.0) > 1e-6)
    throw std::invalid_argument("normalize the curve measure to total mass 1 before appending the ray");
  double min_norm = std::numeric_limits<double>::infinity();
  for (auto i : curve_measure.support()) min_norm = std::min(min_norm, sp.norm(curve_measure.point(i)));
  if (min_norm > 1e-9) throw std::invalid_argument("support must contain the origin; translate first");

  AppendRayResult out{curve_measure, 0.0, 0.0, std::numeric_limits<double>::infinity(), 0};
  if (s_max <= 3.0) return out;  // empty ray

  std::vector<double> ws;
  for (auto i : curve_measure.support()) ws.push_back(curve_measure.weight(i));
  std::sort(ws.begin(), ws.end());
  double spacing = ws[ws.size() / 2];
  out.spacing = spacing;

  double length = s_max - 3.0;
  std::size_t n = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(length / spacing)) + 1);
  double h = length / static_cast<double>(n - 1);

  PointCloud cloud = curve_measure.cloud();
  std::vector<double> weights = curve_measure.weights();
  for (std::size_t k = 0; k < n; ++k) {
    double s = 3.0 + h * static_cast<double>(k);
    Vec p = scale(v0, s);
    cloud.push(p);
    double w = (k == 0 || k + 1 == n) ? h / 2.0 : h;
    weights.push_back(w);
    out.ray_mass += w;
  }
  out.ray_nodes = n;

  // Exact pairwise separation between the ray and the original support.
  for (std::size_t k = 0; k < n; ++k) {
    auto ray_pt = cloud.pt(curve_measure.size() + k);
    for (auto i : curve_measure.support())
      out.min_separation = std::min(out.min_separation, sp.dist(ray_pt, curve_measure.point(i)));
  }
  out.nu = DiscreteMeasure::on_cloud(std::move(cloud), sp, std::move(weights));
  return out;
}

// ---------------------------------------------------------------------------
// Built-in analytic test curves
// ---------------------------------------------------------------------------

inline SampledCurve make_line(const Vec& p0, const Vec& v, double t0, double t1, std::size_t K) {
  SampledCurve c;
  c.space = NormedSpace::euclidean(static_cast<int>(p0.size()));
  c.positions.dim = c.derivs.dim = static_cast<int>(p0.size());
  for (std::size_t i = 0; i <= K; ++i) {
    double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(K);
    c.params.push_back(t);
    for (std::size_t d = 0; d < p0.size(); ++d) c.positions.xs.push_back(p0[d] + t * v[d]);
    for (double vd : v) c.derivs.xs.push_back(vd);
  }
  c.validate();
  return c;
}

/// Unit circle sampled at K nodes on [0, 2pi); closed, analytic derivatives.
inline SampledCurve make_circle(std::size_t K) {
  SampledCurve c;
  c.space = NormedSpace::euclidean(2);
  c.positions.dim = c.derivs.dim = 2;
  c.closed = true;
  c.period = 2.0 * M_PI;
  for (std::size_t i = 0; i < K; ++i) {
    double t = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(K);
    c.params.push_back(t);
    c.positions.xs.insert(c.positions.xs.end(), {std::cos(t), std::sin(t)});
    c.derivs.xs.insert(c.derivs.xs.end(), {-std::sin(t), std::cos(t)});
  }
  c.validate();
  return c;
}

/// Open circular arc on [t0, t1] (useful where endpoint stencils matter).
inline SampledCurve make_arc(double t0, double t1, std::size_t K) {
  SampledCurve c;
  c.space = NormedSpace::euclidean(2);
  c.positions.dim = c.derivs.dim = 2;
  for (std::size_t i = 0; i <= K; ++i) {
    double t = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(K);
    c.params.push_back(t);
    c.positions.xs.insert(c.positions.xs.end(), {std::cos(t), std::sin(t)});
    c.derivs.xs.insert(c.derivs.xs.end(), {-std::sin(t), std::cos(t)});
  }
  c.validate();
  return c;
}

inline SampledCurve make_helix(std::size_t K, double pitch = 0.25) {
  SampledCurve c;
  c.space = NormedSpace::euclidean(3);
  c.positions.dim = c.derivs.dim = 3;
  for (std::size_t i = 0; i <= K; ++i) {
    double t = 4.0 * M_PI * static_cast<double>(i) / static_cast<double>(K);
    c.params.push_back(t);
    c.positions.xs.insert(c.positions.xs.end(), {std::cos(t), std::sin(t), pitch * t});
    c.derivs.xs.insert(c.derivs.xs.end(), {-std::sin(t), std::cos(t), pitch});
  }
  c.validate();
  return c;
}

/// Graph curve t -> (t, eps * w(t)) on [0,1], w a seeded trigonometric
/// polynomial; smooth, analytic derivatives, speed close to 1.
inline SampledCurve make_perturbed_graph(std::size_t K, double eps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> coef(6);
  for (auto& a : coef) a = rng.uniform(-1.0, 1.0);
  auto w = [&](double t) {
    double s = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      double f = M_PI * static_cast<double>(j + 1);
      s += coef[j] / static_cast<double>((j + 1) * (j + 1)) * std::sin(f * t);
    }
    return s;
  };
  auto wp = [&](double t) {
    double s = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      double f = M_PI * static_cast<double>(j + 1);
      s += coef[j] / static_cast<double>((j + 1) * (j + 1)) * f * std::cos(f * t);
    }
    return s;
  };
  SampledCurve c;
  c.space = NormedSpace::euclidean(2);
  c.positions.dim = c.derivs.dim = 2;
  for (std::size_t i = 0; i <= K; ++i) {
    double t = static_cast<double>(i) / static_cast<double>(K);
    c.params.push_back(t);
    c.positions.xs.insert(c.positions.xs.end(), {t, eps * w(t)});
    c.derivs.xs.insert(c.derivs.xs.end(), {1.0, eps * wp(t)});
  }
  c.validate();
  return c;
}

/// Generator registry used by configs and the CLI.
inline SampledCurve make_curve(const std::string& name, std::size_t K, std::uint64_t seed, double eps = 0.1) {
  if (name == "line") return make_line({0.0, 0.0}, {1.0, 0.0}, 0.0, 1.0, K);
  if (name == "circle") return make_circle(K);
  if (name == "arc") return make_arc(0.0, 1.0, K);
  if (name == "helix") return make_helix(K);
  if (name == "perturbed_graph") return make_perturbed_graph(K, eps, seed);
  throw std::invalid_argument("unknown curve generator: " + name);
}

}  // namespace czcurve
