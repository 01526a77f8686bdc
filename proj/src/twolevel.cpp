#include "shakenwell/twolevel.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "shakenwell/errors.hpp"
#include "shakenwell/numerics.hpp"

namespace shakenwell::twolevel {

namespace {

constexpr cdouble I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kScalarTolerance = 1e-8;

struct AmplitudeRhs {
  DriveSpec d;
  Vec2 operator()(double t, const Vec2& a) const {
    const cdouble ef = d.eps * d.modulation(t);
    const double h = 0.5 * d.omega0;
    return Vec2(-I * (-h * a[0] + ef * a[1]), -I * (h * a[1] + ef * a[0]));
  }
};

// Both columns of U(t) stacked: (U00, U10, U01, U11).
struct PropagatorRhs {
  DriveSpec d;
  CVector<4> operator()(double t, const CVector<4>& u) const {
    const cdouble ef = d.eps * d.modulation(t);
    const double h = 0.5 * d.omega0;
    CVector<4> out;
    out[0] = -I * (-h * u[0] + ef * u[1]);
    out[1] = -I * (h * u[1] + ef * u[0]);
    out[2] = -I * (-h * u[2] + ef * u[3]);
    out[3] = -I * (h * u[3] + ef * u[2]);
    return out;
  }
};

void check_drive(const DriveSpec& drive) {
  if (!(drive.eps > 0.0) || !std::isfinite(drive.eps)) {
    throw ContractError("drive frequency eps must be positive");
  }
  if (!std::isfinite(drive.omega0)) throw ContractError("omega0 must be finite");
}

double level1_weight(const Vec2& q) {
  const double n = q.squaredNorm();
  return n > 0.0 ? std::norm(q[0]) / n : 0.5;
}

Vec2 eigenvector_for(const Mat2& M, cdouble lambda) {
  const Vec2 va(M(0, 1), lambda - M(0, 0));
  const Vec2 vb(lambda - M(1, 1), M(1, 0));
  const Vec2 v = va.squaredNorm() >= vb.squaredNorm() ? va : vb;
  return v.normalized();
}

// Reference unfolded mu1 used to pick the branch: the WKB average where it is
// defined, otherwise the small-eps series.
double reference_mu1(const DriveSpec& drive) {
  try {
    return wkb_quasi_energies(drive).mu1.real();
  } catch (const DomainError&) {
    const double w = drive.omega0;
    return -(0.5 * w) * (1.0 + 4.0 * (drive.V1 * drive.V2).real() * drive.eps * drive.eps / (w * w));
  }
}

double unfold_near(double folded, double reference, double eps) {
  return folded + eps * std::round((reference - folded) / eps);
}

// log(1 + z) / z's cousin: atanh(d)/d as a function of d^2.
cdouble atanh_ratio(cdouble d2) {
  if (std::abs(d2) < 1e-6) return 1.0 + d2 / 3.0 + d2 * d2 / 5.0 + d2 * d2 * d2 / 7.0;
  const cdouble d = std::sqrt(d2);
  return std::atanh(d) / d;
}

// Matrix logarithm of a 2x2 matrix written as lambda_bar (I + E) with traceless E.
// Well-conditioned when the two eigenvalues nearly coincide.
Mat2 log_near_scalar(const Mat2& M) {
  const cdouble lam = 0.5 * M.trace();
  Mat2 E = M / lam - Mat2::Identity();
  const cdouble shift = 0.5 * E.trace();
  E -= shift * Mat2::Identity();
  const cdouble d2 = -E.determinant();
  const cdouble scalar = std::log(lam) + std::log(1.0 + shift) + 0.5 * std::log(1.0 - d2);
  return scalar * Mat2::Identity() + atanh_ratio(d2) * E;
}

}  // namespace

TrajectoryRecord propagate(const DriveSpec& drive, const Vec2& a0, double t_final,
                           double record_every, const IntegratorOptions& options) {
  check_drive(drive);
  if (!(t_final > 0.0)) throw ContractError("t_final must be positive");
  if (!(record_every > 0.0)) throw ContractError("record_every must be positive");

  std::vector<double> times{0.0};
  const auto n_records = static_cast<std::size_t>(std::floor(t_final / record_every * (1 + 1e-12)));
  for (std::size_t k = 1; k <= n_records; ++k) {
    times.push_back(std::min(static_cast<double>(k) * record_every, t_final));
  }
  if (times.back() < t_final) times.push_back(t_final);

  // a(t) = U(tau) M^k a0 with t = k T + tau.
  const double T = drive.period();
  std::vector<long> periods(times.size());
  std::vector<double> phases(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    long k = static_cast<long>(std::floor(times[i] / T));
    double tau = times[i] - static_cast<double>(k) * T;
    // Snap phases within rounding of a period boundary onto it.
    if (tau < 1e-12 * T) tau = 0.0;
    if (tau > T * (1.0 - 1e-12)) tau = 0.0, ++k;
    periods[i] = k;
    phases[i] = tau;
  }
  std::vector<double> grid = phases;
  if (periods.back() > 0) grid.push_back(T);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  IntegratorOptions opt = options;
  opt.rtol = std::min(opt.rtol, kPeriodTolerances.rtol);
  opt.atol = std::min(opt.atol, kPeriodTolerances.atol);
  auto U = fundamental_matrices(drive, grid, opt);
  if (drive.is_hermitian()) {
    for (auto& u : U) {
      Eigen::JacobiSVD<Mat2> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
      u = svd.matrixU() * svd.matrixV().adjoint();
    }
  }
  auto at_phase = [&](double tau) -> const Mat2& {
    return U[static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), tau) - grid.begin())];
  };
  const Mat2 M = periods.back() > 0 ? at_phase(T) : Mat2::Identity();

  TrajectoryRecord rec;
  rec.times = times;
  const std::size_t n = times.size();
  rec.a1.resize(n);
  rec.a2.resize(n);
  rec.a1_sq.resize(n);
  rec.a2_sq.resize(n);
  rec.norm.resize(n);
  Vec2 strobe = a0;
  long k_now = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (; k_now < periods[i]; ++k_now) strobe = M * strobe;
    const Vec2 a = i == 0 ? a0 : Vec2(at_phase(phases[i]) * strobe);
    rec.a1[i] = a[0];
    rec.a2[i] = a[1];
    rec.a1_sq[i] = std::norm(a[0]);
    rec.a2_sq[i] = std::norm(a[1]);
    rec.norm[i] = rec.a1_sq[i] + rec.a2_sq[i];
  }
  return rec;
}

std::vector<Mat2> fundamental_matrices(const DriveSpec& drive, std::span<const double> times,
                                       const IntegratorOptions& options) {
  check_drive(drive);
  CVector<4> u0;
  u0 << 1.0, 0.0, 0.0, 1.0;
  auto stepper = make_stepper<4>(PropagatorRhs{drive}, 0.0, u0, options);
  std::vector<Mat2> out;
  out.reserve(times.size());
  for (double t : times) {
    if (t < stepper.time()) throw ContractError("fundamental_matrices: times must ascend from 0");
    stepper.advance_to(t);
    const auto& u = stepper.state();
    Mat2 U;
    U << u[0], u[2], u[1], u[3];
    out.push_back(U);
  }
  return out;
}

MonodromyResult analyse_monodromy(const Mat2& M, const DriveSpec& drive) {
  check_drive(drive);
  MonodromyResult r;
  r.M = M;
  r.eps = drive.eps;
  r.omega0 = drive.omega0;
  const double eps = drive.eps;
  const double T = drive.period();

  const cdouble half = 0.5 * M.trace();
  const Mat2 dev = M - half * Mat2::Identity();
  cdouble la, lb;
  Vec2 qa, qb;
  // Below the propagator accuracy the eigenvectors carry no information.
  if (dev.norm() <= kScalarTolerance * std::max(1.0, M.norm())) {
    r.degenerate_scalar = true;
    la = lb = half;
    qa = Vec2::UnitX();
    qb = Vec2::UnitY();
  } else {
    const cdouble disc = std::sqrt(half * half - M.determinant());
    la = half + disc;
    lb = half - disc;
    qa = eigenvector_for(M, la);
    qb = eigenvector_for(M, lb);
  }

  auto exponent = [&](cdouble lambda) { return I * std::log(lambda) / T; };
  cdouble mua = exponent(la);
  cdouble mub = exponent(lb);

  const double ref1 = reference_mu1(drive);
  const double ref2 = -ref1;
  const double wa = level1_weight(qa);
  const double wb = level1_weight(qb);
  bool swap = false;
  if (std::abs(wa - wb) > 0.2) {
    swap = wb > wa;
  } else {
    const double cost_direct = circular_distance(mua.real(), ref1, eps) +
                               circular_distance(mub.real(), ref2, eps);
    const double cost_swapped = circular_distance(mub.real(), ref1, eps) +
                                circular_distance(mua.real(), ref2, eps);
    swap = cost_swapped < cost_direct;
  }
  if (swap) {
    std::swap(la, lb);
    std::swap(mua, mub);
    std::swap(qa, qb);
  }

  r.lambda1 = la;
  r.lambda2 = lb;
  r.q1 = qa;
  r.q2 = qb;
  r.mu1 = cdouble(fold(mua.real(), eps), mua.imag());
  r.mu2 = cdouble(fold(mub.real(), eps), mub.imag());
  r.mu1_unfolded = cdouble(unfold_near(r.mu1.real(), ref1, eps), mua.imag());
  r.mu2_unfolded = cdouble(unfold_near(r.mu2.real(), ref2, eps), mub.imag());
  r.gap = circular_distance(r.mu1.real(), r.mu2.real(), eps);
  r.defect = r.degenerate_scalar ? 0.0 : std::min(1.0, std::abs(qa.dot(qb)));
  r.complex_quasi_energies = std::max(std::abs(mua.imag()), std::abs(mub.imag())) > 1e-7 * eps;
  if (r.is_coalescent()) {
    // Both computed eigenvectors are within sqrt(noise) of the Jordan eigenvector,
    // which spans the range of the (nilpotent) deviation from the mean eigenvalue.
    Eigen::JacobiSVD<Mat2> svd(dev, Eigen::ComputeFullU);
    Vec2 q = svd.matrixU().col(0);
    const cdouble overlap = q.dot(r.q2);
    if (std::abs(overlap) > 0.0) q *= overlap / std::abs(overlap);
    r.q1 = q;
    r.q2 = q;
    r.defect = 1.0;
  }
  return r;
}

MonodromyResult monodromy(const DriveSpec& drive, const IntegratorOptions& options) {
  check_drive(drive);
  const double T = drive.period();
  const auto U = fundamental_matrices(drive, std::span<const double>(&T, 1), options);
  return analyse_monodromy(U.front(), drive);
}

Mat2 floquet_generator(const MonodromyResult& mono) {
  const double T = 2.0 * kPi / mono.eps;
  if (mono.defect >= kDefectThreshold || mono.degenerate_scalar) {
    // Coalescing spectrum: a single branch, placed at mu2's unfolded value.
    Mat2 R = (I / T) * log_near_scalar(mono.M);
    const double centre = (0.5 * R.trace()).real();
    const double k = std::round((mono.mu2_unfolded.real() - centre) / mono.eps);
    if (mono.degenerate_scalar) {
      Mat2 D = Mat2::Zero();
      D(0, 0) = mono.mu1_unfolded;
      D(1, 1) = mono.mu2_unfolded;
      return D;
    }
    return R + (k * mono.eps) * Mat2::Identity();
  }
  Mat2 V;
  V.col(0) = mono.q1;
  V.col(1) = mono.q2;
  Mat2 D = Mat2::Zero();
  D(0, 0) = mono.mu1_unfolded;
  D(1, 1) = mono.mu2_unfolded;
  return V * D * V.inverse();
}

std::pair<FloquetState, FloquetState> floquet_states(const DriveSpec& drive,
                                                     const MonodromyResult& mono, int n_samples,
                                                     const IntegratorOptions& options) {
  check_drive(drive);
  if (n_samples < 4) throw ContractError("floquet_states needs at least 4 samples");
  if (mono.is_coalescent()) {
    throw CoalescenceError(
        "Floquet eigenvectors coalesce (exceptional point); use generalized_eigenvector");
  }
  const int K = n_samples;
  const double T = drive.period();
  std::vector<double> times(K + 1);
  for (int k = 0; k <= K; ++k) times[k] = T * k / K;
  times[K] = T;
  const auto U = fundamental_matrices(drive, times, options);

  auto build = [&](const Vec2& q_raw, cdouble mu) {
    const Vec2 q = q_raw.normalized();
    FloquetState s;
    s.mu = mu;
    s.times.assign(times.begin(), times.end() - 1);
    s.samples.reserve(K);
    for (int k = 0; k < K; ++k) s.samples.push_back(U[k] * q * std::exp(I * mu * times[k]));
    s.endpoint = U[K] * q * std::exp(I * mu * T);

    s.first_harmonic = -K / 2;
    s.fourier_A.assign(K, 0.0);
    s.fourier_B.assign(K, 0.0);
    for (int i = 0; i < K; ++i) {
      const int n = s.first_harmonic + i;
      cdouble acc_a = 0.0, acc_b = 0.0;
      for (int k = 0; k < K; ++k) {
        const cdouble tw = std::polar(1.0, 2.0 * kPi * static_cast<double>((static_cast<long>(n) * k) % K) / K);
        acc_a += s.samples[k][0] * tw;
        acc_b += s.samples[k][1] * tw;
      }
      s.fourier_A[i] = acc_a / static_cast<double>(K);
      s.fourier_B[i] = acc_b / static_cast<double>(K);
    }
    return s;
  };
  return {build(mono.q1, mono.mu1_unfolded), build(mono.q2, mono.mu2_unfolded)};
}

double unbalance_factor(std::span<const cdouble> A, std::span<const cdouble> B) {
  double ma = 0.0, mb = 0.0;
  for (auto a : A) ma = std::max(ma, std::abs(a));
  for (auto b : B) mb = std::max(mb, std::abs(b));
  const double m = std::max(ma, mb);
  if (!(m > 0.0) || !std::isfinite(m)) throw InvalidStateError("state has no nonzero Fourier coefficient");
  return std::abs(ma - mb) / m;
}

double unbalance_factor(const FloquetState& state) {
  return unbalance_factor(state.fourier_A, state.fourier_B);
}

WkbQuasiEnergies wkb_quasi_energies(const DriveSpec& drive) {
  check_drive(drive);
  const double h2 = 0.25 * drive.omega0 * drive.omega0;
  const double T = drive.period();
  auto mean_splitting = [&](int K) {
    cdouble sum = 0.0;
    for (int k = 0; k < K; ++k) {
      const cdouble f = drive.modulation(T * k / K);
      const cdouble rad = h2 + drive.eps * drive.eps * f * f;
      if (!(rad.real() > 0.0)) {
        throw DomainError(
            "WKB radicand leaves the principal branch on this drive; use the monodromy route");
      }
      sum += std::sqrt(rad);
    }
    return sum / static_cast<double>(K);
  };
  int K = 64;
  cdouble prev = mean_splitting(K);
  for (; K < (1 << 18); K *= 2) {
    const cdouble next = mean_splitting(2 * K);
    const bool done = std::abs(next - prev) <= 1e-15 * std::max(1.0, std::abs(next));
    prev = next;
    if (done) break;
  }
  WkbQuasiEnergies out;
  out.mu1 = -prev;
  out.mu2 = prev;
  const double w = drive.omega0;
  const cdouble corr = 1.0 + 4.0 * drive.V1 * drive.V2 * drive.eps * drive.eps / (w * w);
  out.series_mu1 = -0.5 * w * corr;
  out.series_mu2 = 0.5 * w * corr;
  return out;
}

std::pair<Vec2, Vec2> wkb_states(const DriveSpec& drive, double t) {
  const auto mu = wkb_quasi_energies(drive);  // also validates the branch
  const double h2 = 0.25 * drive.omega0 * drive.omega0;
  auto splitting = [&](double s) { return std::sqrt(h2 + drive.eps * drive.eps * std::pow(drive.modulation(s), 2)); };

  const double T = drive.period();
  const double cycles = std::floor(t / T);
  const double tau = t - cycles * T;
  using boost::math::quadrature::gauss_kronrod;
  const double re = gauss_kronrod<double, 61>::integrate([&](double s) { return splitting(s).real(); }, 0.0, tau, 10, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate([&](double s) { return splitting(s).imag(); }, 0.0, tau, 10, 1e-14);
  const cdouble phase = cycles * T * mu.mu2 + cdouble(re, im);

  const cdouble lam = splitting(t);
  const cdouble ef = drive.eps * drive.modulation(t);
  const double w = drive.omega0;
  const Vec2 w1 = Vec2(0.5 * w + lam, -ef) / w * std::exp(I * (phase + mu.mu1 * t));
  const Vec2 w2 = Vec2(ef, 0.5 * w + lam) / w * std::exp(-I * phase + I * mu.mu2 * t);
  return {w1, w2};
}

double resonance_estimate(cdouble V1, cdouble V2, double omega0, int N) {
  if (N < 1) throw ContractError("resonance order must be >= 1");
  const cdouble p = V1 * V2;
  if (std::abs(p.imag()) > 1e-12 * std::max(1.0, std::abs(p))) {
    throw DomainError("resonance estimate requires a real V1*V2");
  }
  if (p.real() == 0.0) return omega0 / N;
  return omega0 / N * (1.0 + 4.0 * p.real() / (static_cast<double>(N) * N));
}

double resonance_wkb(const DriveSpec& drive, int N) {
  if (N < 1) throw ContractError("resonance order must be >= 1");
  double guess;
  try {
    guess = resonance_estimate(drive.V1, drive.V2, drive.omega0, N);
  } catch (const DomainError&) {
    guess = drive.omega0 / N;
  }
  if (!(guess > 0.0)) guess = drive.omega0 / N;
  try {
    auto g = [&](double eps) {
      DriveSpec d = drive;
      d.eps = eps;
      return 2.0 * wkb_quasi_energies(d).mu2.real() / eps - N;
    };
    double lo = guess, hi = guess;
    double glo = g(lo), ghi = glo;
    for (int k = 0; k < 60 && glo * ghi > 0.0; ++k) {
      if (glo > 0.0) {
        hi *= 1.2;
        ghi = g(hi);
        if (glo * ghi > 0.0) { lo = hi; glo = ghi; }
      } else {
        lo /= 1.2;
        glo = g(lo);
        if (glo * ghi > 0.0) { hi = lo; ghi = glo; }
      }
    }
    if (glo * ghi > 0.0) return guess;
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    boost::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(50);
    const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iters);
    return 0.5 * (a + b);
  } catch (const DomainError&) {
    return guess;
  }
}

int resonance_order(const DriveSpec& drive) {
  try {
    const double mu = wkb_quasi_energies(drive).mu2.real();
    return static_cast<int>(std::lround(2.0 * mu / drive.eps));
  } catch (const DomainError&) {
    return static_cast<int>(std::lround(drive.omega0 / drive.eps));
  }
}

const char* to_string(CrossingKind kind) {
  switch (kind) {
    case CrossingKind::exact:
      return "exact-crossing";
    case CrossingKind::avoided:
      return "avoided-crossing";
    case CrossingKind::exceptional:
      return "ep-crossing";
  }
  return "unknown";
}

double ResonanceClassification::rabi_period() const {
  return gap > 0.0 ? 2.0 * kPi / gap : std::numeric_limits<double>::infinity();
}

ResonanceClassification classify_resonance(const DriveSpec& drive, int N, double scan_width,
                                           const ClassifyOptions& options) {
  check_drive(drive);
  if (N < 1) throw ContractError("resonance order must be >= 1");
  if (!(scan_width > 0.0)) throw ContractError("scan_width must be positive");
  const double centre = resonance_wkb(drive, N);
  const double lo = std::max(centre - scan_width, 1e-6 * centre);
  const double hi = centre + scan_width;
  for (int other : {N - 1, N + 1}) {
    if (other < 1) continue;
    const double c = resonance_wkb(drive, other);
    if (c >= lo && c <= hi) {
      throw AmbiguityError("scan window around N=" + std::to_string(N) +
                           " also contains resonance N=" + std::to_string(other));
    }
  }

  auto gap_at = [&](double eps) {
    DriveSpec d = drive;
    d.eps = eps;
    return monodromy(d, options.integrator).gap;
  };
  const int n = std::max(options.scan_points, 5);
  std::vector<double> grid(n), gaps(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * i / (n - 1);
    gaps[i] = gap_at(grid[i]);
  }
  const auto imin = static_cast<int>(std::min_element(gaps.begin(), gaps.end()) - gaps.begin());
  const double a = grid[std::max(imin - 1, 0)];
  const double b = grid[std::min(imin + 1, n - 1)];
  auto [eps_min, gap_min] = golden_section_minimize(gap_at, a, b, 1e-14 * centre);

  DriveSpec d = drive;
  d.eps = eps_min;
  const auto mono = monodromy(d, options.integrator);
  ResonanceClassification out;
  out.order = N;
  out.eps = eps_min;
  out.gap = mono.gap;
  out.defect = mono.defect;
  if (mono.defect >= kDefectThreshold) {
    out.kind = CrossingKind::exceptional;
  } else if (mono.gap <= options.exact_gap_tol * drive.omega0) {
    out.kind = CrossingKind::exact;
  } else {
    out.kind = CrossingKind::avoided;
  }
  return out;
}

Vec2 generalized_eigenvector(const MonodromyResult& mono) {
  if (mono.defect < kDefectThreshold || mono.degenerate_scalar) {
    throw ContractError("generalized_eigenvector needs a defective monodromy (defect=" +
                        std::to_string(mono.defect) + ")");
  }
  const Mat2 R = floquet_generator(mono);
  const Vec2 q2 = mono.q2.normalized();
  const Mat2 A = R - mono.mu2_unfolded.real() * Mat2::Identity();
  Eigen::JacobiSVD<Mat2> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  svd.setThreshold(1e-7);
  Vec2 Q = svd.solve(q2);
  // The Jordan partner is defined up to multiples of q2; keep the minimal-norm one.
  Q -= q2.dot(Q) * q2;
  return Q;
}

ExceptionalPointSearch find_exceptional_point(const DriveSpec& base, double lo, double hi,
                                              int scan_points, double xtol,
                                              const IntegratorOptions& options) {
  if (!(lo > 0.0) || !(hi > lo)) throw ContractError("EP search needs 0 < lo < hi");
  if (scan_points < 3) throw ContractError("EP search needs at least 3 scan points");
  ExceptionalPointSearch out;
  auto at = [&](double eps) {
    DriveSpec d = base;
    d.eps = eps;
    ++out.iterations;
    return monodromy(d, options);
  };
  auto splitting = [&](double eps) {
    const auto m = at(eps);
    return std::abs(m.lambda1 - m.lambda2);
  };

  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  const double h = (hi - lo) / (scan_points - 1);
  for (int k = 0; k < scan_points; ++k) {
    const double v = splitting(lo + k * h);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  const double a = lo + std::max(best - 1, 0) * h;
  const double b = lo + std::min(best + 1, scan_points - 1) * h;
  const auto [eps_star, split] = golden_section_minimize(splitting, a, b, xtol);

  out.eps_star = eps_star;
  out.splitting = split;
  out.mono = at(eps_star);
  out.defect = out.mono.defect;
  out.gap = out.mono.gap;
  out.found = out.mono.is_coalescent() && !out.mono.degenerate_scalar;
  out.residual = kNaN;
  if (out.found) {
    const Vec2 Q = generalized_eigenvector(out.mono);
    const Mat2 A = floquet_generator(out.mono) - out.mono.mu2_unfolded.real() * Mat2::Identity();
    out.residual = (A * Q - out.mono.q2.normalized()).norm();
  }
  return out;
}

Vec2 map_c_to_a(cdouble c1, cdouble c2, double omega0, double t) {
  return Vec2(c1 * std::polar(1.0, 0.5 * omega0 * t), -I * c2 * std::polar(1.0, -0.5 * omega0 * t));
}

Vec2 map_a_to_c(cdouble a1, cdouble a2, double omega0, double t) {
  return Vec2(a1 * std::polar(1.0, -0.5 * omega0 * t), I * a2 * std::polar(1.0, 0.5 * omega0 * t));
}

std::vector<SweepPoint> sweep(const DriveSpec& base, std::span<const double> eps_values,
                              const SweepOptions& options) {
  const std::size_t n = eps_values.size();
  std::vector<SweepPoint> pts(n);
  std::vector<double> theta1(n, kNaN), theta2(n, kNaN);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        DriveSpec d = base;
        d.eps = eps_values[i];
        pts[i].eps = d.eps;
        pts[i].mono = monodromy(d, options.integrator);
        if (options.compute_theta && !pts[i].mono.is_coalescent()) {
          const auto [w1, w2] = floquet_states(d, pts[i].mono, options.n_samples, options.integrator);
          theta1[i] = unbalance_factor(w1);
          theta2[i] = unbalance_factor(w2);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  Vec2 prev1, prev2;
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = pts[i];
    const auto& m = p.mono;
    bool swapped = false;
    if (i > 0 && !m.degenerate_scalar) {
      const double direct = std::abs(prev1.dot(m.q1)) + std::abs(prev2.dot(m.q2));
      const double crossed = std::abs(prev1.dot(m.q2)) + std::abs(prev2.dot(m.q1));
      swapped = crossed > direct;
    }
    p.mu1_folded = swapped ? m.mu2 : m.mu1;
    p.mu2_folded = swapped ? m.mu1 : m.mu2;
    p.theta = swapped ? theta2[i] : theta1[i];
    if (i == 0) {
      p.mu1_unfolded = m.mu1_unfolded;
      p.mu2_unfolded = m.mu2_unfolded;
    } else {
      const auto& q = pts[i - 1];
      p.mu1_unfolded = cdouble(unfold_near(p.mu1_folded.real(), q.mu1_unfolded.real(), p.eps), p.mu1_folded.imag());
      p.mu2_unfolded = cdouble(unfold_near(p.mu2_folded.real(), q.mu2_unfolded.real(), p.eps), p.mu2_folded.imag());
    }
    if (!m.degenerate_scalar) {
      prev1 = swapped ? m.q2 : m.q1;
      prev2 = swapped ? m.q1 : m.q2;
    } else if (i == 0) {
      prev1 = m.q1;
      prev2 = m.q2;
    }
  }
  return pts;
}

std::vector<GapMinimum> locate_gap_minima(const DriveSpec& base, std::span<const SweepPoint> points,
                                          const IntegratorOptions& options) {
  std::vector<GapMinimum> out;
  auto gap_at = [&](double eps) {
    DriveSpec d = base;
    d.eps = eps;
    return monodromy(d, options).gap;
  };
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    const double g = points[i].mono.gap;
    if (!(g < points[i - 1].mono.gap && g <= points[i + 1].mono.gap)) continue;
    auto [eps, gap] = golden_section_minimize(gap_at, points[i - 1].eps, points[i + 1].eps,
                                              1e-14 * points[i].eps);
    DriveSpec d = base;
    d.eps = eps;
    const auto mono = monodromy(d, options);
    out.push_back({eps, mono.gap, mono.defect, resonance_order(d)});
  }
  return out;
}

double oscillation_period(std::span<const double> times, std::span<const double> values) {
  if (times.size() != values.size() || values.size() < 3) return kNaN;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn + 0.25 * (*mx - *mn);
  const double hi = *mn + 0.75 * (*mx - *mn);
  const double mid = 0.5 * (*mn + *mx);
  // Upward mid-level crossings, counted only after the signal has dropped below lo,
  // so fast ripple around the mid level is ignored.
  std::vector<double> crossings;
  bool armed = values[0] < lo;
  double candidate = kNaN;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double a = values[i - 1], b = values[i];
    if (b < lo) {
      armed = true;
      candidate = kNaN;
    }
    if (armed && a < mid && b >= mid) candidate = times[i - 1] + (mid - a) / (b - a) * (times[i] - times[i - 1]);
    if (armed && b >= hi && !std::isnan(candidate)) {
      crossings.push_back(candidate);
      armed = false;
      candidate = kNaN;
    }
  }
  if (crossings.size() < 2) return kNaN;
  return (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

}  // namespace shakenwell::twolevel
