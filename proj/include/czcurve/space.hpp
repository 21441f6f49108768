// Finite metric spaces, normed spaces, discrete measures, the Kuratowski
// embedding, and estimators for doubling / Ahlfors regularity constants.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "czcurve/parallel.hpp"

namespace czcurve {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Normed spaces
// ---------------------------------------------------------------------------

/// Finite-dimensional real space carrying either the sup-norm or a p-norm,
/// p in (1, inf). The sup-norm is the Kuratowski embedding target; p-norms
/// model spaces whose norm is C^1 away from 0.
struct NormedSpace {
  int dimension = 0;
  bool sup = false;   // sup-norm when true, otherwise p-norm
  double p = 2.0;

  static NormedSpace sup_norm(int dim) { return NormedSpace{dim, true, 0.0}; }
  static NormedSpace p_norm(int dim, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("p-norm requires p in (1, inf)");
    return NormedSpace{dim, false, p};
  }
  static NormedSpace euclidean(int dim) { return p_norm(dim, 2.0); }

  double norm(std::span<const double> x) const {
    if (sup) {
      double m = 0.0;
      for (double v : x) m = std::max(m, std::fabs(v));
      return m;
    }
    if (p == 2.0) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return std::sqrt(s);
    }
    double s = 0.0;
    for (double v : x) s += std::pow(std::fabs(v), p);
    return std::pow(s, 1.0 / p);
  }

  double norm(const Vec& x) const { return norm(std::span<const double>(x)); }

  double dist(std::span<const double> a, std::span<const double> b) const {
    if (sup) {
      double m = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
      return m;
    }
    if (p == 2.0) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(std::fabs(a[i] - b[i]), p);
    return std::pow(s, 1.0 / p);
  }

  /// Conjugate exponent; the predual of l^p is l^{p'}.
  double dual_exponent() const {
    if (sup) return 1.0;
    return p / (p - 1.0);
  }
};

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec scale(const Vec& a, double s) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

/// Flat storage for n points in R^dim.
struct PointCloud {
  int dim = 0;
  std::vector<double> xs;  // row-major, size() * dim entries

  std::size_t size() const { return dim ? xs.size() / static_cast<std::size_t>(dim) : 0; }
  std::span<const double> pt(std::size_t i) const {
    return std::span<const double>(xs.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
  }
  Vec point(std::size_t i) const {
    auto s = pt(i);
    return Vec(s.begin(), s.end());
  }
  void push(std::span<const double> x) { xs.insert(xs.end(), x.begin(), x.end()); }
  void push(const Vec& x) { xs.insert(xs.end(), x.begin(), x.end()); }
};

// ---------------------------------------------------------------------------
// Finite metric spaces
// ---------------------------------------------------------------------------

/// Points with an exact pairwise distance table. Construction validates the
/// metric axioms; the triangle inequality is allowed -1e-12 slack because
/// tables produced from floating-point geometry round.
class FiniteMetricSpace {
 public:
  FiniteMetricSpace(std::vector<std::string> ids, std::vector<double> dist_table)
      : ids_(std::move(ids)), dist_(std::move(dist_table)) {
    n_ = ids_.size();
    if (n_ == 0) throw std::invalid_argument("metric space needs at least one point");
    if (dist_.size() != n_ * n_) throw std::invalid_argument("distance table has wrong shape");
    validate();
  }

  static FiniteMetricSpace from_cloud(const PointCloud& cloud, const NormedSpace& norm) {
    std::size_t n = cloud.size();
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = std::to_string(i);
    std::vector<double> table(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double d = norm.dist(cloud.pt(i), cloud.pt(j));
        table[i * n + j] = d;
        table[j * n + i] = d;
      }
    return FiniteMetricSpace(std::move(ids), std::move(table));
  }

  std::size_t size() const { return n_; }
  const std::vector<std::string>& ids() const { return ids_; }
  double dist(std::size_t i, std::size_t j) const { return dist_[i * n_ + j]; }
  const std::vector<double>& table() const { return dist_; }

  double diameter() const {
    double m = 0.0;
    for (double d : dist_) m = std::max(m, d);
    return m;
  }

  double min_positive_distance() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) m = std::min(m, dist(i, j));
    return m;
  }

  /// Indices inside the open ball B(center, r).
  std::vector<std::size_t> ball(std::size_t center, double r) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_; ++j)
      if (dist(center, j) < r) out.push_back(j);
    return out;
  }

 private:
  void validate() const {
    constexpr double kSlack = 1e-12;
    for (std::size_t i = 0; i < n_; ++i) {
      if (dist(i, i) != 0.0) throw std::invalid_argument("dist(i,i) must be exactly 0 at point " + ids_[i]);
      for (std::size_t j = i + 1; j < n_; ++j) {
        double d = dist(i, j);
        if (!(d > 0.0) || !std::isfinite(d))
          throw std::invalid_argument("off-diagonal distance must be positive and finite: (" + ids_[i] + "," + ids_[j] + ")");
        if (dist(i, j) != dist(j, i))
          throw std::invalid_argument("distance table not symmetric at (" + ids_[i] + "," + ids_[j] + ")");
      }
    }
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        for (std::size_t k = 0; k < n_; ++k)
          if (dist(i, k) > dist(i, j) + dist(j, k) + kSlack)
            throw std::invalid_argument("triangle inequality fails on (" + ids_[i] + "," + ids_[j] + "," + ids_[k] + ")");
  }

  std::vector<std::string> ids_;
  std::vector<double> dist_;
  std::size_t n_ = 0;
};

// ---------------------------------------------------------------------------
// Discrete measures
// ---------------------------------------------------------------------------

/// Weighted point masses over either a finite metric space (distances read
/// from the exact table) or a point cloud in a normed space.
class DiscreteMeasure {
 public:
  static DiscreteMeasure on_cloud(PointCloud cloud, NormedSpace space, std::vector<double> weights) {
    DiscreteMeasure m;
    if (weights.size() != cloud.size()) throw std::invalid_argument("one weight per support point required");
    m.cloud_ = std::move(cloud);
    m.space_ = space;
    m.weights_ = std::move(weights);
    m.check_weights();
    return m;
  }

  static DiscreteMeasure on_metric(std::shared_ptr<const FiniteMetricSpace> space, std::vector<double> weights) {
    DiscreteMeasure m;
    if (!space) throw std::invalid_argument("null metric space");
    if (weights.size() != space->size()) throw std::invalid_argument("one weight per point required");
    m.metric_ = std::move(space);
    m.weights_ = std::move(weights);
    m.check_weights();
    return m;
  }

  std::size_t size() const { return weights_.size(); }
  bool has_points() const { return metric_ == nullptr; }
  const PointCloud& cloud() const { return cloud_; }
  const NormedSpace& space() const { return space_; }
  const std::shared_ptr<const FiniteMetricSpace>& metric() const { return metric_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> point(std::size_t i) const { return cloud_.pt(i); }

  double dist(std::size_t i, std::size_t j) const {
    return metric_ ? metric_->dist(i, j) : space_.dist(cloud_.pt(i), cloud_.pt(j));
  }

  double dist_to(std::size_t i, std::span<const double> x) const {
    if (metric_) throw std::logic_error("metric-space measure has no coordinates");
    return space_.dist(cloud_.pt(i), x);
  }

  double total_mass() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
  }

  /// Support = points carrying positive mass.
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (weights_[i] > 0.0) out.push_back(i);
    return out;
  }

  /// Mass of the open ball B(point i, r).
  double ball_mass(std::size_t i, double r) const {
    double s = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j)
      if (dist(i, j) < r) s += weights_[j];
    return s;
  }

  double diameter() const {
    double m = 0.0;
    auto sup = support();
    for (std::size_t a = 0; a < sup.size(); ++a)
      for (std::size_t b = a + 1; b < sup.size(); ++b) m = std::max(m, dist(sup[a], sup[b]));
    return m;
  }

  /// New measure with weights zeroed outside `keep` (same point set).
  DiscreteMeasure restricted(const std::vector<std::size_t>& keep) const {
    DiscreteMeasure out = *this;
    std::vector<char> mark(weights_.size(), 0);
    for (auto i : keep) mark[i] = 1;
    for (std::size_t i = 0; i < out.weights_.size(); ++i)
      if (!mark[i]) out.weights_[i] = 0.0;
    return out;
  }

 private:
  void check_weights() const {
    for (double w : weights_) {
      if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("weights must be nonnegative and finite");
    }
  }

  std::shared_ptr<const FiniteMetricSpace> metric_;
  PointCloud cloud_;
  NormedSpace space_;
  std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// Kuratowski embedding
// ---------------------------------------------------------------------------

/// Isometric embedding i |-> (dist(i, j))_j into sup-norm R^{|M|}. Coordinate
/// j attains the distance between images of i and j; the triangle inequality
/// keeps every other coordinate below it.
inline PointCloud kuratowski_embed(const FiniteMetricSpace& M) {
  PointCloud cloud;
  cloud.dim = static_cast<int>(M.size());
  cloud.xs.reserve(M.size() * M.size());
  for (std::size_t i = 0; i < M.size(); ++i)
    for (std::size_t j = 0; j < M.size(); ++j) cloud.xs.push_back(M.dist(i, j));
  return cloud;
}

/// Max over pairs of | sup-dist(embed i, embed j) - dist(i, j) |.
inline double kuratowski_isometry_defect(const FiniteMetricSpace& M, const PointCloud& embedded) {
  NormedSpace target = NormedSpace::sup_norm(static_cast<int>(M.size()));
  std::vector<double> row_defect(M.size(), 0.0);
  parallel_for(M.size(), [&](std::size_t i) {
    double worst = 0.0;
    for (std::size_t j = i + 1; j < M.size(); ++j)
      worst = std::max(worst, std::fabs(target.dist(embedded.pt(i), embedded.pt(j)) - M.dist(i, j)));
    row_defect[i] = worst;
  });
  double worst = 0.0;
  for (double d : row_defect) worst = std::max(worst, d);
  return worst;
}

// ---------------------------------------------------------------------------
// Doubling constant
// ---------------------------------------------------------------------------

struct DoublingResult {
  int value = 1;
  bool exact = true;            // false when any ball fell back to the greedy bound
  std::size_t worst_center = 0;
  double worst_radius = 0.0;
};

namespace detail {

// Minimum number of closed balls of radius r/2 centered at points of M that
// cover the open ball B(center, r). Greedy first; exhaustive branch-and-bound
// refinement when the ball holds at most `exact_limit` points.
inline std::pair<int, bool> covering_number(const FiniteMetricSpace& M, std::size_t center, double r,
                                            std::size_t exact_limit) {
  std::vector<std::size_t> target = M.ball(center, r);
  if (target.size() <= 1) return {1, true};

  const std::size_t m = target.size();
  // Candidate sets: which target points a closed ball of radius r/2 at each
  // candidate center captures. Deduplicate identical masks.
  std::vector<std::vector<std::uint64_t>> masks;
  const std::size_t words = (m + 63) / 64;
  for (std::size_t c = 0; c < M.size(); ++c) {
    std::vector<std::uint64_t> mask(words, 0);
    bool nonempty = false;
    for (std::size_t t = 0; t < m; ++t)
      if (M.dist(c, target[t]) <= r / 2.0) {
        mask[t / 64] |= (std::uint64_t{1} << (t % 64));
        nonempty = true;
      }
    if (!nonempty) continue;
    bool dup = false;
    for (auto& other : masks)
      if (other == mask) {
        dup = true;
        break;
      }
    if (!dup) masks.push_back(std::move(mask));
  }

  auto count_uncovered = [&](const std::vector<std::uint64_t>& covered) {
    std::size_t cnt = 0;
    for (std::size_t w = 0; w < words; ++w) cnt += static_cast<std::size_t>(__builtin_popcountll(~covered[w]));
    // ~ sets bits beyond m in the last word; subtract them.
    std::size_t spare = words * 64 - m;
    return cnt - spare;
  };

  // Greedy cover.
  std::vector<std::uint64_t> covered(words, 0);
  int greedy = 0;
  while (count_uncovered(covered) > 0) {
    std::size_t best = masks.size();
    std::size_t best_gain = 0;
    for (std::size_t s = 0; s < masks.size(); ++s) {
      std::size_t gain = 0;
      for (std::size_t w = 0; w < words; ++w)
        gain += static_cast<std::size_t>(__builtin_popcountll(masks[s][w] & ~covered[w]));
      if (gain > best_gain) {
        best_gain = gain;
        best = s;
      }
    }
    if (best == masks.size()) break;  // cannot happen: every target point is within r/2 of itself
    for (std::size_t w = 0; w < words; ++w) covered[w] |= masks[best][w];
    ++greedy;
  }

  if (m > exact_limit) return {greedy, false};

  // Branch and bound: pick the lowest uncovered point, branch over the sets
  // containing it.
  int best_size = greedy;
  std::vector<std::uint64_t> work(words, 0);
  auto first_uncovered = [&](const std::vector<std::uint64_t>& cov) -> std::size_t {
    for (std::size_t t = 0; t < m; ++t)
      if (!(cov[t / 64] & (std::uint64_t{1} << (t % 64)))) return t;
    return m;
  };
  auto dfs = [&](auto&& self, std::vector<std::uint64_t>& cov, int used) -> void {
    if (used >= best_size) return;
    std::size_t t = first_uncovered(cov);
    if (t == m) {
      best_size = used;
      return;
    }
    for (std::size_t s = 0; s < masks.size(); ++s) {
      if (!(masks[s][t / 64] & (std::uint64_t{1} << (t % 64)))) continue;
      std::vector<std::uint64_t> saved = cov;
      for (std::size_t w = 0; w < words; ++w) cov[w] |= masks[s][w];
      self(self, cov, used + 1);
      cov = saved;
    }
  };
  dfs(dfs, work, 0);
  return {best_size, true};
}

}  // namespace detail

/// Doubling constant of a finite metric space over the given radii: the worst
/// number of half-radius balls needed to cover any B(center, r). Covering
/// balls are closed (radius exactly r/2); covered balls are open.
inline DoublingResult doubling_constant(const FiniteMetricSpace& M, const std::vector<double>& radius_grid,
                                        std::size_t exact_limit = 20) {
  if (M.size() == 0) throw std::invalid_argument("empty space");
  if (radius_grid.empty()) throw std::invalid_argument("radius grid must be nonempty");
  for (double r : radius_grid)
    if (!(r > 0.0)) throw std::invalid_argument("radii must be positive");

  struct Slot {
    int value = 1;
    bool exact = true;
    double radius = 0.0;
  };
  std::vector<Slot> per_center(M.size());
  parallel_for(M.size(), [&](std::size_t c) {
    Slot& slot = per_center[c];
    for (double r : radius_grid) {
      auto [cnt, exact] = detail::covering_number(M, c, r, exact_limit);
      if (cnt > slot.value) {
        slot.value = cnt;
        slot.radius = r;
      }
      slot.exact = slot.exact && exact;
    }
  });

  DoublingResult out;
  for (std::size_t c = 0; c < per_center.size(); ++c) {
    if (per_center[c].value > out.value) {
      out.value = per_center[c].value;
      out.worst_center = c;
      out.worst_radius = per_center[c].radius;
    }
    out.exact = out.exact && per_center[c].exact;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regularity constants
// ---------------------------------------------------------------------------

struct RegularityGrid {
  double r_min = 0.0, r_max = 0.0;
  int radii_per_octave = 16;
  std::vector<double> radii;
};

inline RegularityGrid log_radius_grid(double r_min, double r_max, int per_octave = 16) {
  if (!(r_min > 0.0) || !(r_max >= r_min)) throw std::invalid_argument("need 0 < r_min <= r_max");
  RegularityGrid g;
  g.r_min = r_min;
  g.r_max = r_max;
  g.radii_per_octave = per_octave;
  double log2span = std::log2(r_max / r_min);
  int steps = static_cast<int>(std::ceil(log2span * per_octave));
  for (int j = 0; j <= steps; ++j) g.radii.push_back(r_min * std::exp2(static_cast<double>(j) / per_octave));
  if (g.radii.back() > r_max) g.radii.back() = r_max;
  return g;
}

struct UpperRegularityResult {
  double c_nu = 0.0;
  std::size_t argmax_point = 0;
  double argmax_radius = 0.0;
  RegularityGrid grid;  // recorded so reports are reproducible
};

/// sup of nu(B(x,r)) / r^n over support points and a 16-per-octave log grid.
inline UpperRegularityResult upper_regularity_constant(const DiscreteMeasure& mu, int n, double r_min, double r_max) {
  auto sup = mu.support();
  if (sup.empty()) throw std::invalid_argument("measure has empty support");
  UpperRegularityResult out;
  out.grid = log_radius_grid(r_min, r_max);
  for (auto i : sup) {
    for (double r : out.grid.radii) {
      double ratio = mu.ball_mass(i, r) / std::pow(r, n);
      if (ratio > out.c_nu) {
        out.c_nu = ratio;
        out.argmax_point = i;
        out.argmax_radius = r;
      }
    }
  }
  return out;
}

/// Exact sup of nu(B(x,r)) / r^n over all r >= r_min: the supremum over any
/// half-open distance shell is its left limit nu({d <= d_k}) / d_k^n, so the
/// grid can be replaced by the distance values themselves.
inline double upper_regularity_exact(const DiscreteMeasure& mu, int n, double r_min) {
  auto sup = mu.support();
  if (sup.empty()) throw std::invalid_argument("measure has empty support");
  if (!(r_min > 0.0)) throw std::invalid_argument("r_min must be positive");
  std::vector<double> best(sup.size(), 0.0);
  parallel_for(sup.size(), [&](std::size_t a) {
    std::size_t i = sup[a];
    std::vector<std::pair<double, double>> shells;  // (distance, weight)
    shells.reserve(mu.size());
    for (std::size_t j = 0; j < mu.size(); ++j) shells.emplace_back(mu.dist(i, j), mu.weight(j));
    std::sort(shells.begin(), shells.end());
    double mass = 0.0, local = 0.0;
    // mass({d <= r_min-}) first: candidate at r = r_min uses the open ball.
    double open_at_rmin = 0.0;
    for (auto& [d, w] : shells)
      if (d < r_min) open_at_rmin += w;
    local = open_at_rmin / std::pow(r_min, n);
    for (auto& [d, w] : shells) {
      mass += w;
      if (d >= r_min) local = std::max(local, mass / std::pow(d, n));
    }
    best[a] = local;
  });
  double out = 0.0;
  for (double b : best) out = std::max(out, b);
  return out;
}

struct RegularityResult {
  double c_upper = 0.0;
  double c_lower = std::numeric_limits<double>::infinity();
  double reg = 0.0;  // max(c_upper, 1/c_lower)
  bool regular = true;
  RegularityGrid grid;
};

/// Two-sided 1-regularity estimate on a documented radius grid. Flags
/// non-regular supports when the lower ratio collapses below `lower_threshold`.
inline RegularityResult regularity_constants(const DiscreteMeasure& mu, double r_min, double r_max,
                                             double lower_threshold = 1e-6) {
  if (!(mu.total_mass() > 0.0)) throw std::invalid_argument("measure has zero total mass");
  auto sup = mu.support();
  RegularityResult out;
  out.grid = log_radius_grid(r_min, r_max);
  for (auto i : sup) {
    for (double r : out.grid.radii) {
      double ratio = mu.ball_mass(i, r) / r;
      out.c_upper = std::max(out.c_upper, ratio);
      out.c_lower = std::min(out.c_lower, ratio);
    }
  }
  out.reg = std::max(out.c_upper, out.c_lower > 0.0 ? 1.0 / out.c_lower : std::numeric_limits<double>::infinity());
  out.regular = out.c_lower >= lower_threshold;
  return out;
}

}  // namespace czcurve
