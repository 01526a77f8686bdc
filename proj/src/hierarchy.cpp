#include "shakenwell/hierarchy.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "shakenwell/errors.hpp"
#include "shakenwell/numerics.hpp"
#include "shakenwell/twolevel.hpp"

namespace shakenwell::hierarchy {

namespace {

constexpr double kEdgeWeight = 1e-20;
constexpr double kClassTolerance = 1e-8;
constexpr double kResidualTolerance = 1e-8;

void check_drive(const DriveSpec& drive) {
  if (!(drive.eps > 0.0)) throw ContractError("drive frequency eps must be positive");
}

double reference_mu1(const DriveSpec& drive) {
  try {
    return twolevel::wkb_quasi_energies(drive).mu1.real();
  } catch (const DomainError&) {
    return twolevel::wkb_quasi_energies(DriveSpec{0.0, 0.0, drive.omega0, drive.eps}).mu1.real();
  }
}

struct Eigenpair {
  cdouble mu;
  Eigen::VectorXcd v;
  double folded = 0.0;
  double a_weight = 0.0;  // fraction of the norm on the A components
  double edge = 0.0;      // fraction of the norm near the truncation edge
};

}  // namespace

int minimum_truncation(const DriveSpec& drive) {
  check_drive(drive);
  return static_cast<int>(std::ceil(drive.omega0 / drive.eps)) + 8;
}

int default_truncation(const DriveSpec& drive) {
  check_drive(drive);
  return 2 * static_cast<int>(std::ceil(drive.omega0 / drive.eps)) + 16;
}

HierarchyMatrix build_matrix(const DriveSpec& drive, int n_trunc) {
  check_drive(drive);
  const int need = minimum_truncation(drive);
  if (n_trunc < need) {
    throw TruncationError("hierarchy cutoff " + std::to_string(n_trunc) + " below minimum " +
                          std::to_string(need));
  }
  HierarchyMatrix H;
  H.n_trunc = n_trunc;
  H.dim = 2 * (2 * n_trunc + 1);
  H.drive = drive;
  H.entries = Eigen::MatrixXcd::Zero(H.dim, H.dim);
  const double eps = drive.eps;
  const double h = 0.5 * drive.omega0;
  for (int n = -n_trunc; n <= n_trunc; ++n) {
    const int a = H.index(n, 0);
    const int b = H.index(n, 1);
    H.entries(a, a) = -(n * eps + h);
    H.entries(b, b) = -(n * eps - h);
    if (n + 1 <= n_trunc) {
      H.entries(a, H.index(n + 1, 1)) = eps * drive.V1;
      H.entries(b, H.index(n + 1, 0)) = eps * drive.V1;
    }
    if (n - 1 >= -n_trunc) {
      H.entries(a, H.index(n - 1, 1)) = eps * drive.V2;
      H.entries(b, H.index(n - 1, 0)) = eps * drive.V2;
    }
  }
  return H;
}

QuasiEnergySpectrum solve_quasi_energies(const HierarchyMatrix& H) {
  const double eps = H.drive.eps;
  const int N = H.n_trunc;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(H.entries, true);
  if (solver.info() != Eigen::Success) throw ConvergenceError("hierarchy eigensolver failed");

  QuasiEnergySpectrum out;
  out.matrix_norm = H.entries.cwiseAbs().rowwise().sum().maxCoeff();

  std::vector<Eigenpair> pairs;
  for (int k = 0; k < H.dim; ++k) {
    Eigenpair p;
    p.mu = solver.eigenvalues()[k];
    p.v = solver.eigenvectors().col(k).normalized();
    double wa = 0.0, edge = 0.0;
    for (int n = -N; n <= N; ++n) {
      const double w = std::norm(p.v[H.index(n, 0)]) + std::norm(p.v[H.index(n, 1)]);
      wa += std::norm(p.v[H.index(n, 0)]);
      if (std::abs(n) >= N - 2) edge += w;
    }
    p.a_weight = wa;
    p.edge = edge;
    p.folded = fold(p.mu.real(), eps);
    if (edge <= kEdgeWeight) pairs.push_back(std::move(p));
  }
  out.contained = static_cast<int>(pairs.size());
  if (pairs.empty()) throw TruncationError("no eigenvector is contained within the cutoff");

  // Group folded eigenvalues; the imaginary part separates complex-conjugate pairs.
  std::vector<std::vector<int>> groups;
  std::vector<double> centres, centres_im;
  for (int i = 0; i < static_cast<int>(pairs.size()); ++i) {
    bool placed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (circular_distance(pairs[i].folded, centres[g], eps) <= kClassTolerance * eps &&
          std::abs(pairs[i].mu.imag() - centres_im[g]) <= kClassTolerance * eps) {
        groups[g].push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      groups.push_back({i});
      centres.push_back(pairs[i].folded);
      centres_im.push_back(pairs[i].mu.imag());
    }
  }
  out.classes_found = static_cast<int>(groups.size());
  if (groups.size() > 2) {
    throw ConvergenceError("hierarchy produced " + std::to_string(groups.size()) +
                           " quasi-energy classes");
  }
  if (groups.size() == 1) {
    // Exact crossing: both branches fold onto one value; separate by level dominance.
    std::vector<int> a_side, b_side;
    for (int i : groups[0]) (pairs[i].a_weight > 0.5 ? a_side : b_side).push_back(i);
    if (a_side.empty() || b_side.empty()) {
      throw ConvergenceError("degenerate hierarchy spectrum could not be split into two branches");
    }
    groups = {a_side, b_side};
    centres = {centres[0], centres[0]};
  }

  const double ref1 = reference_mu1(H.drive);
  const double ref2 = -ref1;
  auto representative = [&](const std::vector<int>& g, double reference) {
    const double f = pairs[g.front()].folded;
    const double target = f + eps * std::round((reference - f) / eps);
    int best = g.front();
    for (int i : g) {
      if (std::abs(pairs[i].mu.real() - target) < std::abs(pairs[best].mu.real() - target)) best = i;
    }
    return best;
  };

  int r0a = representative(groups[0], ref1), r1b = representative(groups[1], ref2);
  int r0b = representative(groups[0], ref2), r1a = representative(groups[1], ref1);
  bool swap;
  const double wa = pairs[r0a].a_weight, wb = pairs[r1b].a_weight;
  if (std::abs(wa - wb) > 0.2) {
    swap = wb > wa;
  } else {
    const double direct = circular_distance(centres[0], ref1, eps) + circular_distance(centres[1], ref2, eps);
    const double crossed = circular_distance(centres[1], ref1, eps) + circular_distance(centres[0], ref2, eps);
    swap = crossed < direct;
  }
  const int rep1 = swap ? r1a : r0a;
  const int rep2 = swap ? r0b : r1b;
  const std::vector<int>& g1 = swap ? groups[1] : groups[0];
  const std::vector<int>& g2 = swap ? groups[0] : groups[1];

  for (auto [rep, members] : {std::pair{rep1, &g1}, std::pair{rep2, &g2}}) {
    const auto& p = pairs[rep];
    QuasiEnergyClass c;
    c.mu = p.mu;
    c.mu_folded = p.folded;
    c.members = static_cast<int>(members->size());
    c.residual = (H.entries * p.v - p.mu * p.v).norm();
    if (c.residual > kResidualTolerance * out.matrix_norm) {
      throw ConvergenceError("hierarchy eigenpair residual " + std::to_string(c.residual) +
                             " exceeds tolerance");
    }
    c.A.resize(2 * N + 1);
    c.B.resize(2 * N + 1);
    for (int n = -N; n <= N; ++n) {
      c.A[n + N] = p.v[H.index(n, 0)];
      c.B[n + N] = p.v[H.index(n, 1)];
    }
    out.classes.push_back(std::move(c));
  }
  return out;
}

double hierarchy_residual(const DriveSpec& drive, cdouble mu, std::span<const cdouble> A,
                          std::span<const cdouble> B, int first_harmonic) {
  if (A.size() != B.size()) throw ContractError("A and B must have equal length");
  const int count = static_cast<int>(A.size());
  auto get = [&](std::span<const cdouble> x, int n) -> cdouble {
    const int i = n - first_harmonic;
    return (i >= 0 && i < count) ? x[i] : cdouble(0.0);
  };
  const double eps = drive.eps;
  const double h = 0.5 * drive.omega0;
  double worst = 0.0;
  for (int i = 0; i + 1 < count; ++i) {
    const int n = first_harmonic + i;
    const cdouble ra = (mu + n * eps + h) * get(A, n) - eps * (drive.V1 * get(B, n + 1) + drive.V2 * get(B, n - 1));
    const cdouble rb = (mu + n * eps - h) * get(B, n) - eps * (drive.V1 * get(A, n + 1) + drive.V2 * get(A, n - 1));
    worst = std::max({worst, std::abs(ra), std::abs(rb)});
  }
  return worst;
}

GaugeResult gauge_transform(const DriveSpec& drive) {
  const cdouble p = drive.V1 * drive.V2;
  if (p == 0.0) {
    throw ContractError("gauge map needs V1 V2 != 0; use closed_form_v1_zero for one-sided drives");
  }
  if (std::abs(p.imag()) > 1e-12 * std::abs(p)) throw DomainError("gauge map requires real V1 V2");

  GaugeResult g;
  cdouble s = std::sqrt(drive.V2 / drive.V1);
  cdouble gamma = drive.V1 * s;
  if (p.real() > 0.0) {
    if (gamma.real() < 0.0) {
      s = -s;
      gamma = -gamma;
    }
    gamma = gamma.real();
    g.hermitian_equivalent = true;
  } else {
    if (gamma.imag() < 0.0) {
      s = -s;
      gamma = -gamma;
    }
    gamma = cdouble(0.0, gamma.imag());
    g.hermitian_equivalent = false;
  }
  g.gamma = gamma;
  g.phase = s;
  g.theta = -cdouble(0.0, 1.0) * std::log(s);
  g.equivalent = DriveSpec{gamma, gamma, drive.omega0, drive.eps};
  return g;
}

std::pair<ClosedFormCoefficients, ClosedFormCoefficients> closed_form_v1_zero(const DriveSpec& drive,
                                                                              int n_max) {
  check_drive(drive);
  if (drive.V1 != 0.0) throw ContractError("closed form requires V1 = 0");
  if (drive.V2 == 0.0) throw ContractError("closed form requires V2 != 0");
  if (n_max < 1) throw ContractError("n_max must be >= 1");
  const double eps = drive.eps;
  const double w = drive.omega0;
  const cdouble V2 = drive.V2;

  // sign = -1: mu1 branch (A_0 = 1); sign = +1: mu2 branch (B_0 = 1).
  auto branch = [&](double sign) {
    ClosedFormCoefficients c;
    c.branch = sign < 0 ? Branch::mu1 : Branch::mu2;
    c.mu = 0.5 * w * sign;
    std::vector<cdouble> even(n_max + 2, 0.0), odd(n_max + 2, 0.0);
    even[0] = 1.0;
    for (int n = 2; n <= n_max + 1; n += 2) {
      const double den = n * (sign * w + (n - 1) * eps);
      if (std::abs(den) < 1e-12) {
        throw SingularityError("closed-form recurrence is singular at n=" + std::to_string(n) +
                                   " (exceptional point)",
                               n);
      }
      even[n] = eps * V2 * V2 * even[n - 2] / den;
    }
    for (int n = 1; n <= n_max; n += 2) odd[n] = static_cast<double>(n + 1) * even[n + 1] / V2;

    // The level carrying the unit seed holds the even harmonics.
    auto& primary = sign < 0 ? c.A : c.B;
    auto& partner = sign < 0 ? c.B : c.A;
    primary.assign(n_max + 1, 0.0);
    partner.assign(n_max + 1, 0.0);
    double big = 0.0;
    for (int n = 0; n <= n_max; ++n) {
      primary[n] = (n % 2 == 0) ? even[n] : 0.0;
      partner[n] = (n % 2 == 1) ? odd[n] : 0.0;
      big = std::max({big, std::abs(primary[n]), std::abs(partner[n])});
    }
    c.normalization = 1.0 / big;
    for (auto& x : c.A) x *= c.normalization;
    for (auto& x : c.B) x *= c.normalization;
    return c;
  };
  return {branch(-1.0), branch(+1.0)};
}

}  // namespace shakenwell::hierarchy
