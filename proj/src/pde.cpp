#include "shakenwell/pde.hpp"

#include <Eigen/LU>
#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "shakenwell/errors.hpp"
#include "shakenwell/numerics.hpp"

namespace shakenwell::pde {

namespace {

constexpr cdouble I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  os.write(reinterpret_cast<const char*>(&bits), 8);
}

template <class T>
T get_le(std::istream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 8);
  if (!is) throw InvalidStateError("truncated snapshot file");
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

double WaveField::norm() const {
  double s = 0.0;
  for (const auto& v : psi) s += std::norm(v);
  return s * grid.dx();
}

void check_resolution(const WellSpec& spec, const GridSpec& grid) {
  if (grid.n_points < 128) throw ResolutionError("grid needs at least 128 points");
  if (!(grid.x_max > grid.x_min)) throw ContractError("grid requires x_max > x_min");
  if (!(grid.dt > 0.0)) throw ContractError("time step must be positive");
  if (grid.dx() > 0.2 / spec.sigma1) {
    throw ResolutionError("grid spacing " + std::to_string(grid.dx()) +
                          " does not resolve the well (need dx <= 0.2/sigma1)");
  }
}

WaveField init_ground_state(const WellSpec& spec, const GridSpec& grid) {
  check_resolution(spec, grid);
  WaveField f;
  f.grid = grid;
  f.psi.resize(grid.n_points);
  for (int j = 0; j < grid.n_points; ++j) f.psi[j] = well::eigenfunction(spec, 1, grid.x(j));
  const double scale = 1.0 / std::sqrt(f.norm());
  for (auto& v : f.psi) v *= scale;
  return f;
}

struct Propagator::Impl {
  WellSpec spec;
  ShakingPath path;
  GridSpec grid;
  PropagatorOptions options;
  int n = 0;
  double dx = 0.0;
  fftw_complex* raw = nullptr;
  cdouble* buf = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<cdouble> kinetic;  // e^{-i k^2 dt} / n
  std::vector<double> mask;
  // e^{+-sigma x_j} for the fast potential evaluation; empty when it would overflow.
  std::vector<double> p1, q1, p2, q2;

  cdouble potential_at(int j, cdouble c1, cdouble ic1, cdouble c2, cdouble ic2, cdouble x0) const {
    if (p1.empty()) return well::potential(spec, grid.x(j) - x0);
    const cdouble e1 = p1[j] * c1, f1 = q1[j] * ic1;
    const cdouble e2 = p2[j] * c2, f2 = q2[j] * ic2;
    const cdouble ch1 = 0.5 * (e1 + f1), sh1 = 0.5 * (e1 - f1);
    const cdouble ch2 = 0.5 * (e2 + f2), sh2 = 0.5 * (e2 - f2);
    const double s1 = spec.sigma1, s2 = spec.sigma2;
    const cdouble D = s2 * sh1 * sh2 - s1 * ch1 * ch2;
    const cdouble num = s1 * s1 * ch2 * ch2 + s2 * s2 * sh1 * sh1;
    return -2.0 * spec.omega0 * num / (D * D);
  }
};

Propagator::Propagator(const WellSpec& spec, const ShakingPath& path, const GridSpec& grid,
                       PropagatorOptions options)
    : impl_(std::make_unique<Impl>()) {
  check_resolution(spec, grid);
  auto& m = *impl_;
  m.spec = spec;
  m.path = path;
  m.grid = grid;
  m.options = options;
  m.n = grid.n_points;
  m.dx = grid.dx();
  {
    std::lock_guard lock(planner_mutex());
    m.raw = fftw_alloc_complex(m.n);
    m.forward = fftw_plan_dft_1d(m.n, m.raw, m.raw, FFTW_FORWARD, FFTW_ESTIMATE);
    m.backward = fftw_plan_dft_1d(m.n, m.raw, m.raw, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  m.buf = reinterpret_cast<cdouble*>(m.raw);

  const double L = grid.x_max - grid.x_min;
  m.kinetic.resize(m.n);
  for (int j = 0; j < m.n; ++j) {
    const int kn = j <= m.n / 2 ? j : j - m.n;
    const double k = 2.0 * kPi * kn / L;
    m.kinetic[j] = std::polar(1.0 / m.n, -k * k * grid.dt);
  }

  const double reach = std::max(std::abs(grid.x_min), std::abs(grid.x_max)) +
                       2.0 * (std::abs(path.A1) + std::abs(path.A2));
  if (spec.sigma1 * reach < 150.0) {
    for (int j = 0; j < m.n; ++j) {
      const double x = grid.x(j);
      m.p1.push_back(std::exp(spec.sigma1 * x));
      m.q1.push_back(std::exp(-spec.sigma1 * x));
      m.p2.push_back(std::exp(spec.sigma2 * x));
      m.q2.push_back(std::exp(-spec.sigma2 * x));
    }
  }

  if (options.absorber.enabled) {
    m.mask.assign(m.n, 1.0);
    const double w = options.absorber.width;
    for (int j = 0; j < m.n; ++j) {
      const double x = grid.x(j);
      const double depth = std::max(grid.x_min + w - x, x - (grid.x_max - m.dx - w));
      if (depth > 0.0) {
        const double c = std::cos(0.5 * kPi * std::min(depth / w, 1.0));
        m.mask[j] = std::pow(std::max(c, 0.0), options.absorber.exponent);
      }
    }
  }
}

Propagator::~Propagator() {
  if (!impl_) return;
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->forward);
  fftw_destroy_plan(impl_->backward);
  fftw_free(impl_->raw);
}

void Propagator::potential_phase(double t, double fraction) {
  auto& m = *impl_;
  const cdouble x0 = m.path(t);
  const cdouble c1 = std::exp(-m.spec.sigma1 * x0), c2 = std::exp(-m.spec.sigma2 * x0);
  const cdouble ic1 = 1.0 / c1, ic2 = 1.0 / c2;
  const double h = fraction * m.grid.dt;
  for (int j = 0; j < m.n; ++j) {
    const cdouble V = m.potential_at(j, c1, ic1, c2, ic2, x0);
    // e^{-i V h} = e^{Im V h} e^{-i Re V h}
    m.buf[j] *= std::polar(std::exp(V.imag() * h), -V.real() * h);
  }
}

void Propagator::kinetic() {
  auto& m = *impl_;
  fftw_execute(m.forward);
  for (int j = 0; j < m.n; ++j) m.buf[j] *= m.kinetic[j];
  fftw_execute(m.backward);
}

void Propagator::apply_absorber() {
  auto& m = *impl_;
  if (m.mask.empty()) return;
  for (int j = 0; j < m.n; ++j) m.buf[j] *= m.mask[j];
}

void Propagator::check_norm(const WaveField& field) const {
  const auto& m = *impl_;
  double s = 0.0;
  for (int j = 0; j < m.n; ++j) s += std::norm(m.buf[j]);
  s *= m.dx;
  if (!(s <= m.options.divergence_norm)) {
    throw DivergenceError("wavefunction norm diverged (" + std::to_string(s) + ")", field.t);
  }
}

void Propagator::step(WaveField& field) { advance(field, 1); }

void Propagator::advance(WaveField& field, long n_steps) {
  auto& m = *impl_;
  if (static_cast<int>(field.psi.size()) != m.n) throw ContractError("field does not match the grid");
  if (n_steps <= 0) return;
  std::copy(field.psi.begin(), field.psi.end(), m.buf);
  const double t0 = field.t;
  const double dt = m.grid.dt;
  potential_phase(t0, 0.5);
  for (long k = 0; k < n_steps; ++k) {
    kinetic();
    const double t = t0 + static_cast<double>(k + 1) * dt;
    potential_phase(t, k + 1 < n_steps ? 1.0 : 0.5);
    apply_absorber();
    if ((k & 63) == 63) {
      field.t = t;
      check_norm(field);
    }
  }
  field.t = t0 + static_cast<double>(n_steps) * dt;
  check_norm(field);
  std::copy(m.buf, m.buf + m.n, field.psi.begin());
}

std::pair<cdouble, cdouble> Propagator::project(const WaveField& field) const {
  return pde::project(field, impl_->spec, impl_->path);
}

WaveField step(WaveField field, const WellSpec& spec, const ShakingPath& path) {
  Propagator p(spec, path, field.grid);
  p.step(field);
  return field;
}

std::pair<cdouble, cdouble> project(const WaveField& field, const WellSpec& spec,
                                    const ShakingPath& path) {
  const cdouble x0 = path(field.t);
  const double dx = field.grid.dx();
  cdouble a1 = 0.0, a2 = 0.0;
  for (int j = 0; j < static_cast<int>(field.psi.size()); ++j) {
    const cdouble z = field.grid.x(j) - x0;
    a1 += well::eigenfunction(spec, 1, z) * field.psi[j];
    a2 += well::eigenfunction(spec, 2, z) * field.psi[j];
  }
  return {a1 * dx, a2 * dx};
}

ProjectionSeries run_experiment(const WellSpec& spec, const ShakingPath& path, const GridSpec& grid,
                                double t_final, double sample_every, const RunOptions& options) {
  if (!(t_final > 0.0)) throw ContractError("t_final must be positive");
  if (!(sample_every > 0.0)) throw ContractError("sample_every must be positive");
  const auto stripe = well::validate_stripe(spec, path);
  if (!stripe.ok) throw DomainError("shaking path leaves the analyticity stripe");

  WaveField field = init_ground_state(spec, grid);
  Propagator prop(spec, path, grid, options.propagator);
  const bool hermitian = path.is_hermitian();

  ProjectionSeries s;
  auto record = [&] {
    const auto [a1, a2] = prop.project(field);
    s.times.push_back(field.t);
    s.a1.push_back(a1);
    s.a2.push_back(a2);
    s.pop1.push_back(std::norm(a1));
    s.pop2.push_back(std::norm(a2));
    s.leakage.push_back(hermitian ? 1.0 - std::norm(a1) - std::norm(a2)
                                  : std::numeric_limits<double>::quiet_NaN());
    s.norm.push_back(field.norm());
  };

  const long total = std::lround(t_final / grid.dt);
  const long stride = std::max(1L, std::lround(sample_every / grid.dt));
  const long snap_stride =
      options.snapshot_every > 0.0 ? std::max(1L, std::lround(options.snapshot_every / grid.dt)) : 0;
  auto snapshot = [&](long index) {
    std::ostringstream name;
    name << options.snapshot_prefix << std::setw(8) << std::setfill('0') << index << ".bin";
    write_snapshot(field, name.str());
  };

  record();
  if (snap_stride) snapshot(0);
  long done = 0;
  while (done < total) {
    long chunk = std::min(stride, total - done);
    if (snap_stride) chunk = std::min(chunk, snap_stride - done % snap_stride);
    prop.advance(field, chunk);
    done += chunk;
    field.t = static_cast<double>(done) * grid.dt;
    if (done % stride == 0 || done == total) record();
    if (snap_stride && done % snap_stride == 0) snapshot(done / snap_stride);
  }
  return s;
}

void write_snapshot(const WaveField& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidStateError("cannot open snapshot file " + path);
  put_le<std::uint64_t>(os, field.psi.size());
  put_le<double>(os, field.grid.x_min);
  put_le<double>(os, field.grid.x_max);
  put_le<double>(os, field.t);
  for (const auto& v : field.psi) {
    put_le<double>(os, v.real());
    put_le<double>(os, v.imag());
  }
  if (!os) throw InvalidStateError("failed writing snapshot " + path);
}

WaveField read_snapshot(const std::string& path, double dt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidStateError("cannot open snapshot file " + path);
  WaveField f;
  const auto n = get_le<std::uint64_t>(is);
  f.grid.n_points = static_cast<int>(n);
  f.grid.x_min = get_le<double>(is);
  f.grid.x_max = get_le<double>(is);
  f.grid.dt = dt;
  f.t = get_le<double>(is);
  f.psi.resize(n);
  for (auto& v : f.psi) {
    const double re = get_le<double>(is);
    const double im = get_le<double>(is);
    v = {re, im};
  }
  return f;
}

GrowthMetrics growth_metrics(const ProjectionSeries& series, double period) {
  GrowthMetrics g;
  const std::size_t n = series.times.size();
  if (n < 2) return g;
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double acc = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) acc += series.pop2[i] / series.pop1[i];
  g.final_ratio = acc / static_cast<double>(tail);
  g.max_pop2 = *std::max_element(series.pop2.begin(), series.pop2.end());

  // Per-period maxima of |a2| over the second half of the run.
  const double t_end = series.times.back();
  const double t_start = 0.5 * t_end;
  std::vector<double> xs, ys;
  double window_start = t_start, best = -1.0, best_t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = series.times[i];
    if (t < t_start) continue;
    if (t >= window_start + period) {
      if (best >= 0.0) {
        xs.push_back(best_t);
        ys.push_back(best);
      }
      window_start += period * std::floor((t - window_start) / period);
      best = -1.0;
    }
    const double v = std::abs(series.a2[i]);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  if (xs.size() < 3) {
    g.envelope_r2 = std::numeric_limits<double>::quiet_NaN();
    return g;
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double cxx = sxx - sx * sx / m, cxy = sxy - sx * sy / m, cyy = syy - sy * sy / m;
  g.envelope_slope = cxx > 0 ? cxy / cxx : 0.0;
  g.envelope_r2 = (cxx > 0 && cyy > 0) ? cxy * cxy / (cxx * cyy) : 0.0;
  return g;
}

std::vector<ScanPoint> secular_growth_scan(const WellSpec& spec, double amplitude,
                                           std::span<const double> eps_values, const GridSpec& grid,
                                           double t_final, double sample_every, unsigned threads) {
  const std::size_t n = eps_values.size();
  std::vector<ScanPoint> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const auto path = ShakingPath::one_sided(amplitude, eps_values[i]);
        const auto series = run_experiment(spec, path, grid, t_final, sample_every);
        out[i].eps = eps_values[i];
        out[i].metrics = growth_metrics(series, path.period());
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned nt = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, std::max<std::size_t>(n, 1)));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < nt; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

ProjectedMonodromy projected_monodromy(const WellSpec& spec, const ShakingPath& path,
                                       const GridSpec& grid, int periods) {
  if (periods < 1) throw ContractError("projected monodromy needs at least one period");
  const double T = path.period();
  const long steps = static_cast<long>(std::ceil(T / grid.dt - 1e-9));
  GridSpec g = grid;
  g.dt = T / static_cast<double>(steps);
  check_resolution(spec, g);
  Propagator prop(spec, path, g);

  // X[n] holds the stroboscopic projections of both runs after n periods.
  std::vector<twolevel::Mat2> X(periods + 1, twolevel::Mat2::Identity());
  for (int which = 1; which <= 2; ++which) {
    WaveField f;
    f.grid = g;
    f.psi.resize(g.n_points);
    for (int j = 0; j < g.n_points; ++j) f.psi[j] = well::eigenfunction(spec, which, g.x(j));
    X[0].col(which - 1) = twolevel::Vec2::Zero();
    X[0](which - 1, which - 1) = 1.0;
    for (int n = 1; n <= periods; ++n) {
      prop.advance(f, steps);
      f.t = n * T;
      const auto [a1, a2] = prop.project(f);
      X[n](0, which - 1) = a1;
      X[n](1, which - 1) = a2;
    }
  }
  // Least-squares fit of X[n+1] = M X[n].
  twolevel::Mat2 num = twolevel::Mat2::Zero(), den = twolevel::Mat2::Zero();
  for (int n = 0; n < periods; ++n) {
    num += X[n + 1] * X[n].adjoint();
    den += X[n] * X[n].adjoint();
  }
  ProjectedMonodromy out;
  out.dt_used = g.dt;
  out.periods = periods;
  out.M = num * den.inverse();
  const cdouble half = 0.5 * out.M.trace();
  out.splitting = 2.0 * std::abs(std::sqrt(half * half - out.M.determinant()));
  const DriveSpec drive{spec.kappa * path.A1, spec.kappa * path.A2, spec.omega0, path.eps};
  // Remove the mean dynamic phase.
  const cdouble phase = std::polar(1.0, 0.5 * (spec.E1 + spec.E2) * T);
  out.analysis = twolevel::analyse_monodromy(out.M * phase, drive);
  return out;
}

ShakingPath make_path(PathKind kind, double amplitude, double eps) {
  return kind == PathKind::sinusoidal ? ShakingPath::sinusoidal(amplitude, eps)
                                      : ShakingPath::one_sided(amplitude, eps);
}

DegeneracySearch find_degeneracy(const WellSpec& spec, PathKind kind, double amplitude, double lo,
                                 double hi, const GridSpec& grid, int scan_points, double xtol,
                                 int periods) {
  if (!(hi > lo) || !(lo > 0.0)) throw ContractError("degeneracy search needs 0 < lo < hi");
  if (scan_points < 3) throw ContractError("degeneracy search needs at least 3 scan points");
  DegeneracySearch out;
  auto splitting = [&](double eps) {
    ++out.iterations;
    return projected_monodromy(spec, make_path(kind, amplitude, eps), grid, periods).splitting;
  };
  for (int i = 0; i < scan_points; ++i) {
    const double eps = lo + (hi - lo) * i / (scan_points - 1);
    out.scan.emplace_back(eps, splitting(eps));
  }
  const auto best = std::min_element(out.scan.begin(), out.scan.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  const auto i = static_cast<int>(best - out.scan.begin());
  const double a = out.scan[std::max(i - 1, 0)].first;
  const double b = out.scan[std::min(i + 1, scan_points - 1)].first;
  const auto [eps_star, split] = golden_section_minimize(splitting, a, b, xtol);
  const auto pm = projected_monodromy(spec, make_path(kind, amplitude, eps_star), grid, periods);
  out.eps_star = eps_star;
  out.splitting = split;
  out.defect = pm.analysis.defect;
  out.gap = pm.analysis.gap;
  return out;
}

}  // namespace shakenwell::pde
