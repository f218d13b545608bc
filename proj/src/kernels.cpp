#include "coretri/kernels.hpp"

#include <cmath>

#include "coretri/errors.hpp"
#include "coretri/geometry.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coretri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kChunk = 512;  // cones per reduction chunk

inline double cone_residual(const ConeForm& cf, const Vec3& x) {
  const double g = cf.depth(x);
  if (!(g > 0.0)) return kInf;
  return cf.numerator(x) / g;
}

inline bool better(double value, int pos, const WorstDatum& best) {
  return value > best.value || (value == best.value && pos < best.pos);
}

// Per-cone smoothed terms h and their gradients. L-inf cones split into one
// term per image axis; the hard max over those terms equals the hard
// max-over-cones objective.
template <typename TermFn>
inline void smooth_terms(const ConeForm& cf, double gamma, const Vec3& x, double mu,
                         TermFn&& term) {
  const Vec2 v = cf.A * x + cf.b;
  const double g = cf.depth(x);
  const double mu2 = mu * mu;
  switch (cf.norm_p) {
    case Norm::L2: {
      const double s = std::sqrt(v.squaredNorm() + mu2);
      term(s - gamma * g, Vec3(cf.A.transpose() * (v / s) - gamma * cf.c));
      break;
    }
    case Norm::L1: {
      const double s0 = std::sqrt(v[0] * v[0] + mu2);
      const double s1 = std::sqrt(v[1] * v[1] + mu2);
      term(s0 + s1 - gamma * g,
           Vec3((v[0] / s0) * cf.A.row(0).transpose() + (v[1] / s1) * cf.A.row(1).transpose() -
                gamma * cf.c));
      break;
    }
    case Norm::LInf: {
      for (int k = 0; k < 2; ++k) {
        const double s = std::sqrt(v[k] * v[k] + mu2);
        term(s - gamma * g, Vec3((v[k] / s) * cf.A.row(k).transpose() - gamma * cf.c));
      }
      break;
    }
  }
}

inline void smooth_terms_values(const ConeForm& cf, double gamma, const Vec3& x, double mu,
                                double& hmax) {
  const Vec2 v = cf.A * x + cf.b;
  const double g = cf.depth(x);
  const double mu2 = mu * mu;
  switch (cf.norm_p) {
    case Norm::L2:
      hmax = std::max(hmax, std::sqrt(v.squaredNorm() + mu2) - gamma * g);
      break;
    case Norm::L1:
      hmax = std::max(hmax, std::sqrt(v[0] * v[0] + mu2) + std::sqrt(v[1] * v[1] + mu2) -
                                gamma * g);
      break;
    case Norm::LInf:
      hmax = std::max(hmax, std::sqrt(v[0] * v[0] + mu2) - gamma * g);
      hmax = std::max(hmax, std::sqrt(v[1] * v[1] + mu2) - gamma * g);
      break;
  }
}

// Per-cone smoothed terms with curvature. The second derivative of
// sqrt(s^2 + mu^2) in a single coordinate is mu^2 / (.)^(3/2); the L2 branch
// keeps the full projected form.
template <typename TermFn>
inline void smooth_terms_hess(const ConeForm& cf, double gamma, const Vec3& x, double mu,
                              TermFn&& term) {
  const Vec2 v = cf.A * x + cf.b;
  const double g = cf.depth(x);
  const double mu2 = mu * mu;
  switch (cf.norm_p) {
    case Norm::L2: {
      const double s = std::sqrt(v.squaredNorm() + mu2);
      const Vec3 q = cf.A.transpose() * (v / s);
      term(s - gamma * g, Vec3(q - gamma * cf.c),
           Mat3((cf.A.transpose() * cf.A) / s - q * q.transpose() / s));
      break;
    }
    case Norm::L1: {
      const double s0 = std::sqrt(v[0] * v[0] + mu2);
      const double s1 = std::sqrt(v[1] * v[1] + mu2);
      const Vec3 a0 = cf.A.row(0).transpose();
      const Vec3 a1 = cf.A.row(1).transpose();
      term(s0 + s1 - gamma * g, Vec3((v[0] / s0) * a0 + (v[1] / s1) * a1 - gamma * cf.c),
           Mat3((mu2 / (s0 * s0 * s0)) * a0 * a0.transpose() +
                (mu2 / (s1 * s1 * s1)) * a1 * a1.transpose()));
      break;
    }
    case Norm::LInf: {
      for (int k = 0; k < 2; ++k) {
        const double s = std::sqrt(v[k] * v[k] + mu2);
        const Vec3 a = cf.A.row(k).transpose();
        term(s - gamma * g, Vec3((v[k] / s) * a - gamma * cf.c),
             Mat3((mu2 / (s * s * s)) * a * a.transpose()));
      }
      break;
    }
  }
}

struct Partial {
  double sum = 0.0;
  Vec3 grad = Vec3::Zero();
};

struct PartialH {
  double sum = 0.0;
  Vec3 grad = Vec3::Zero();
  Mat3 gsq = Mat3::Zero();   // sum of w * dh dh'
  Mat3 curv = Mat3::Zero();  // sum of w * d2h
};

inline Partial chunk_accumulate(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                double mu, double m, int begin, int end) {
  Partial p;
  for (int i = begin; i < end; ++i) {
    smooth_terms(cs.cones[i], gamma, x, mu, [&](double h, const Vec3& dh) {
      const double w = std::exp((h - m) / tau);
      p.sum += w;
      p.grad += w * dh;
    });
  }
  return p;
}

inline PartialH chunk_accumulate_hess(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                      double mu, double m, int begin, int end) {
  PartialH p;
  for (int i = begin; i < end; ++i) {
    smooth_terms_hess(cs.cones[i], gamma, x, mu,
                      [&](double h, const Vec3& dh, const Mat3& d2h) {
                        const double w = std::exp((h - m) / tau);
                        p.sum += w;
                        p.grad += w * dh;
                        p.gsq += w * dh * dh.transpose();
                        p.curv += w * d2h;
                      });
  }
  return p;
}

inline SmoothEvalH assemble_hess(const PartialH& p, double m, double tau) {
  SmoothEvalH out;
  out.value = m + tau * std::log(p.sum);
  out.grad = p.grad / p.sum;
  out.hess = p.curv / p.sum +
             (p.gsq / p.sum - out.grad * out.grad.transpose()) / tau;
  return out;
}

}  // namespace

ConeSet make_cone_set(const TriangulationInstance& instance, Norm p) {
  ConeSet cs;
  cs.p = p;
  const int n = instance.n();
  cs.cones.reserve(n);
  cs.source_index.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Observation& o = instance.observations[i];
    cs.cones.push_back(to_cone_form(instance.cameras[o.camera_index], o, p));
    cs.source_index.push_back(i);
  }
  return cs;
}

ConeSet make_cone_set(const TriangulationInstance& instance, const std::vector<int>& subset,
                      Norm p) {
  ConeSet cs;
  cs.p = p;
  cs.cones.reserve(subset.size());
  cs.source_index.reserve(subset.size());
  for (int i : subset) {
    const Observation& o = instance.observations[i];
    cs.cones.push_back(to_cone_form(instance.cameras[o.camera_index], o, p));
    cs.source_index.push_back(i);
  }
  return cs;
}

WorstDatum worst_residual_serial(const ConeSet& cs, const Vec3& x) {
  WorstDatum best{-1, -kInf};
  for (int i = 0; i < cs.size(); ++i) {
    const double r = cone_residual(cs.cones[i], x);
    if (better(r, i, best)) best = {i, r};
  }
  return best;
}

WorstDatum worst_residual_parallel(const ConeSet& cs, const Vec3& x) {
  WorstDatum best{-1, -kInf};
#ifdef _OPENMP
#pragma omp parallel
  {
    WorstDatum local{-1, -kInf};
#pragma omp for nowait schedule(static)
    for (int i = 0; i < cs.size(); ++i) {
      const double r = cone_residual(cs.cones[i], x);
      if (better(r, i, local)) local = {i, r};
    }
#pragma omp critical(coretri_worst_merge)
    {
      if (local.pos >= 0 && better(local.value, local.pos, best)) best = local;
    }
  }
#else
  best = worst_residual_serial(cs, x);
#endif
  return best;
}

WorstDatum worst_residual(const ConeSet& cs, const Vec3& x, Exec exec) {
  const bool parallel =
      exec == Exec::Parallel || (exec == Exec::Auto && cs.size() >= kParallelCutoff);
  return parallel ? worst_residual_parallel(cs, x) : worst_residual_serial(cs, x);
}

double min_depth(const ConeSet& cs, const Vec3& x) {
  double d = kInf;
  for (const ConeForm& cf : cs.cones) d = std::min(d, cf.depth(x));
  return d;
}

double hard_maxcone(const ConeSet& cs, double gamma, const Vec3& x) {
  double m = -kInf;
  for (const ConeForm& cf : cs.cones)
    m = std::max(m, cf.numerator(x) - gamma * cf.depth(x));
  return m;
}

SmoothEval smooth_maxcone_serial(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                 double mu) {
  double m = -kInf;
  for (const ConeForm& cf : cs.cones) smooth_terms_values(cf, gamma, x, mu, m);
  const Partial p = chunk_accumulate(cs, gamma, x, tau, mu, m, 0, cs.size());
  SmoothEval out;
  out.value = m + tau * std::log(p.sum);
  out.grad = p.grad / p.sum;
  return out;
}

SmoothEval smooth_maxcone_parallel(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                   double mu) {
  const int n = cs.size();
  const int nchunks = (n + kChunk - 1) / kChunk;
  double m = -kInf;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : m)
#endif
  for (int c = 0; c < nchunks; ++c) {
    double local = -kInf;
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i)
      smooth_terms_values(cs.cones[i], gamma, x, mu, local);
    m = std::max(m, local);
  }

  std::vector<Partial> partials(nchunks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int c = 0; c < nchunks; ++c) {
    const int end = std::min(n, (c + 1) * kChunk);
    partials[c] = chunk_accumulate(cs, gamma, x, tau, mu, m, c * kChunk, end);
  }

  // Combine in chunk order: the result is independent of the thread count.
  Partial total;
  for (const Partial& p : partials) {
    total.sum += p.sum;
    total.grad += p.grad;
  }
  SmoothEval out;
  out.value = m + tau * std::log(total.sum);
  out.grad = total.grad / total.sum;
  return out;
}

SmoothEval smooth_maxcone(const ConeSet& cs, double gamma, const Vec3& x, double tau, double mu,
                          Exec exec) {
  const bool parallel =
      exec == Exec::Parallel || (exec == Exec::Auto && cs.size() >= kParallelCutoff);
  return parallel ? smooth_maxcone_parallel(cs, gamma, x, tau, mu)
                  : smooth_maxcone_serial(cs, gamma, x, tau, mu);
}

SmoothEvalH smooth_maxcone_hess_serial(const ConeSet& cs, double gamma, const Vec3& x,
                                       double tau, double mu) {
  double m = -kInf;
  for (const ConeForm& cf : cs.cones) smooth_terms_values(cf, gamma, x, mu, m);
  return assemble_hess(chunk_accumulate_hess(cs, gamma, x, tau, mu, m, 0, cs.size()), m, tau);
}

SmoothEvalH smooth_maxcone_hess_parallel(const ConeSet& cs, double gamma, const Vec3& x,
                                         double tau, double mu) {
  const int n = cs.size();
  const int nchunks = (n + kChunk - 1) / kChunk;
  double m = -kInf;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : m)
#endif
  for (int c = 0; c < nchunks; ++c) {
    double local = -kInf;
    const int end = std::min(n, (c + 1) * kChunk);
    for (int i = c * kChunk; i < end; ++i)
      smooth_terms_values(cs.cones[i], gamma, x, mu, local);
    m = std::max(m, local);
  }

  std::vector<PartialH> partials(nchunks);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int c = 0; c < nchunks; ++c) {
    const int end = std::min(n, (c + 1) * kChunk);
    partials[c] = chunk_accumulate_hess(cs, gamma, x, tau, mu, m, c * kChunk, end);
  }

  PartialH total;
  for (const PartialH& p : partials) {
    total.sum += p.sum;
    total.grad += p.grad;
    total.gsq += p.gsq;
    total.curv += p.curv;
  }
  return assemble_hess(total, m, tau);
}

SmoothEvalH smooth_maxcone_hess(const ConeSet& cs, double gamma, const Vec3& x, double tau,
                                double mu, Exec exec) {
  const bool parallel =
      exec == Exec::Parallel || (exec == Exec::Auto && cs.size() >= kParallelCutoff);
  return parallel ? smooth_maxcone_hess_parallel(cs, gamma, x, tau, mu)
                  : smooth_maxcone_hess_serial(cs, gamma, x, tau, mu);
}

}  // namespace coretri
