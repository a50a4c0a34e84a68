#include "tunnel/uncertainty.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

using Vec = Eigen::VectorXcd;

Vec as_vector(const WaveFunction& psi) {
  const auto a = psi.amplitudes();
  return Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
}

void require_normalized(const WaveFunction& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-8) throw ValidationError("state is not normalized");
}

void require_grid(const WaveFunction& psi, const Observable& o) {
  if (!(psi.grid() == o.grid)) throw ValidationError("observable '" + o.label + "' is on a different grid");
}

struct BornDistribution {
  std::vector<double> values;
  std::vector<double> weights;
};

enum class Band { diagonal, tridiagonal, dense };

Band band_of(const SparseMatrix& m) {
  Band band = Band::diagonal;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      if (it.value() == cplx{0.0}) continue;
      const auto off = std::abs(it.row() - it.col());
      if (off > 1) return Band::dense;
      if (off == 1) band = Band::tridiagonal;
    }
  }
  return band;
}

BornDistribution born_distribution(const WaveFunction& psi, const Observable& o) {
  const auto n = static_cast<Eigen::Index>(o.grid.size());
  const double dx = o.grid.dx();
  const Vec v = as_vector(psi);
  BornDistribution out;
  const Band band = band_of(o.matrix);
  if (band == Band::diagonal) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out.values.push_back(o.matrix.coeff(i, i).real());
      out.weights.push_back(std::norm(v[i]) * dx);
    }
    return out;
  }
  if (o.grid.size() > ensemble_max_grid) {
    throw ValidationError("eigendecomposition is limited to grids of at most 2048 points");
  }
  if (band == Band::tridiagonal) {
    // Diagonal phase change to a real symmetric tridiagonal matrix:
    // M = D T D^dagger with T_{i+1,i} = |M_{i+1,i}|.
    Eigen::VectorXd diag(n), sub(n - 1);
    Vec d(n);
    d[0] = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) diag[i] = o.matrix.coeff(i, i).real();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const cplx m = o.matrix.coeff(i + 1, i);
      sub[i] = std::abs(m);
      d[i + 1] = sub[i] > 0.0 ? d[i] * (m / sub[i]) : d[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
    const Vec w = d.conjugate().cwiseProduct(v);
    const Eigen::VectorXd cr = es.eigenvectors().transpose() * w.real();
    const Eigen::VectorXd ci = es.eigenvectors().transpose() * w.imag();
    for (Eigen::Index j = 0; j < n; ++j) {
      out.values.push_back(es.eigenvalues()[j]);
      out.weights.push_back((cr[j] * cr[j] + ci[j] * ci[j]) * dx);
    }
    return out;
  }
  const Eigen::MatrixXcd dense = Eigen::MatrixXcd(o.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  const Vec c = es.eigenvectors().adjoint() * v;
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values.push_back(es.eigenvalues()[j]);
    out.weights.push_back(std::norm(c[j]) * dx);
  }
  return out;
}

double sample_sd(const std::vector<double>& s) {
  double mean = 0.0;
  for (double x : s) mean += x;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double x : s) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(s.size() - 1));
}

}  // namespace

UncertaintyReport paper_estimate(double delta_x, EffectiveMass mass) {
  if (!(delta_x > 0.0) || !std::isfinite(delta_x)) throw ValidationError("delta_x must be positive");
  UncertaintyReport r;
  r.mass = mass;
  r.delta_x = delta_x;
  r.delta_p = codata::hbar / delta_x;
  r.p_assumed = r.delta_p;
  r.delta_e = r.p_assumed * r.delta_p / mass.absolute();
  r.delta_t = codata::hbar / r.delta_e;
  r.delta_p_si = momentum_to_si(r.delta_p);
  r.delta_t_si = r.delta_t * codata::fs_to_s;
  return r;
}

double Observable::hermiticity_residual() const {
  const SparseMatrix diff = matrix - SparseMatrix(matrix.adjoint());
  double worst = 0.0;
  for (Eigen::Index r = 0; r < diff.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(diff, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

cplx Observable::expectation(const WaveFunction& psi) const {
  require_grid(psi, *this);
  const Vec v = as_vector(psi);
  return v.dot(matrix * v) * grid.dx();
}

Observable position_observable(const SpatialGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  SparseMatrix m(n, n);
  m.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) m.insert(i, i) = grid.x(static_cast<std::size_t>(i));
  m.makeCompressed();
  return {grid, std::move(m), "x"};
}

Observable momentum_observable(const SpatialGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  const cplx c{0.0, codata::hbar / (2.0 * grid.dx())};
  std::vector<Eigen::Triplet<cplx>> entries;
  entries.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    entries.emplace_back(i, i + 1, -c);
    entries.emplace_back(i + 1, i, c);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(entries.begin(), entries.end());
  return {grid, std::move(m), "p"};
}

RobertsonResult robertson_check(const WaveFunction& psi, const Observable& a, const Observable& b) {
  require_grid(psi, a);
  require_grid(psi, b);
  require_normalized(psi);
  const double dx = psi.grid().dx();
  const Vec v = as_vector(psi);
  RobertsonResult r;
  const Vec av = a.matrix * v;
  const Vec bv = b.matrix * v;
  r.mean_a = v.dot(av).real() * dx;
  r.mean_b = v.dot(bv).real() * dx;
  // Centred vectors (A - <A>) psi and (B - <B>) psi.
  const Vec ac = av - r.mean_a * v;
  const Vec bc = bv - r.mean_b * v;
  r.delta_a = std::sqrt(ac.squaredNorm() * dx);
  r.delta_b = std::sqrt(bc.squaredNorm() * dx);
  r.lhs = r.delta_a * r.delta_b;
  // <[A, B]> = 2i Im <(A - a) psi, (B - b) psi> for Hermitian A, B.
  r.rhs = std::abs(ac.dot(bc).imag()) * dx;
  r.holds = r.lhs >= r.rhs - 1e-10;

  const double mu = mean_position(psi);
  const double sigma = position_spread(psi);
  if (mu - 8.0 * sigma < psi.grid().x_min() || mu + 8.0 * sigma > psi.grid().x_max()) {
    r.warnings.push_back("state is within 8 sigma of a wall; boundary terms may affect the commutator");
  }
  return r;
}

WaveFunction random_state(const SpatialGrid& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  std::vector<cplx> a(grid.size());
  for (auto& v : a) {
    const double re = n01(rng);
    v = {re, n01(rng)};
  }
  WaveFunction psi(grid, std::move(a));
  psi.normalize();
  return psi;
}

EnsembleResult ensemble_demo(const WaveFunction& psi, const Observable& a, const Observable& b,
                             std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < ensemble_min_samples) throw ValidationError("ensemble_demo needs at least 100 samples");
  require_grid(psi, a);
  require_grid(psi, b);
  require_normalized(psi);
  const auto da = born_distribution(psi, a);
  const auto db = born_distribution(psi, b);

  EnsembleResult r;
  r.seed = seed;
  r.n_samples = n_samples;
  std::mt19937_64 rng(seed);
  auto draw = [&](const BornDistribution& d, std::vector<double>& out) {
    std::discrete_distribution<std::size_t> pick(d.weights.begin(), d.weights.end());
    out.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) out.push_back(d.values[pick(rng)]);
  };
  draw(da, r.samples_a);
  draw(db, r.samples_b);
  r.delta_a = sample_sd(r.samples_a);
  r.delta_b = sample_sd(r.samples_b);
  r.product = r.delta_a * r.delta_b;
  return r;
}

}  // namespace tunnel
