#include "tunnel/transfer_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tunnel/errors.hpp"

namespace tunnel {
namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kInf = std::numeric_limits<double>::infinity();

// Two-port scattering matrix for scalar amplitudes:
//   out_left  = r  * in_left + tp * in_right
//   out_right = t  * in_left + rp * in_right
struct SMatrix {
  cplx r{0.0};
  cplx t{1.0};
  cplx rp{0.0};
  cplx tp{1.0};
};

// Redheffer star product: a on the left, b on the right.
SMatrix star(const SMatrix& a, const SMatrix& b) {
  const cplx inv = 1.0 / (1.0 - a.rp * b.r);
  SMatrix s;
  s.t = b.t * inv * a.t;
  s.r = a.r + a.tp * b.r * inv * a.t;
  s.tp = a.tp * inv * b.tp;
  s.rp = b.rp + b.t * a.rp * inv * b.tp;
  return s;
}

// Continuity of psi and psi' between plane-wave bases with wavenumbers q1, q2.
SMatrix interface_matrix(cplx q1, cplx q2) {
  const cplx sum = q1 + q2;
  SMatrix s;
  s.r = (q1 - q2) / sum;
  s.t = 2.0 * q1 / sum;
  s.rp = (q2 - q1) / sum;
  s.tp = 2.0 * q2 / sum;
  return s;
}

// Amplitudes referenced at the two faces of a uniform slab; |exp(iqw)| <= 1.
SMatrix propagation_matrix(cplx q, double w) {
  const cplx phase = std::exp(I * q * w);
  return SMatrix{0.0, phase, 0.0, phase};
}

cplx local_wavenumber(double kappa) {
  return kappa >= 0.0 ? cplx{std::sqrt(kappa), 0.0} : cplx{0.0, std::sqrt(-kappa)};
}

// Raw composition result for one set of local wavenumbers.
struct Amplitudes {
  cplx t_edge;                  // transmitted amplitude referenced at x = L
  cplx r;                       // reflected amplitude referenced at x = 0
  std::vector<cplx> fwd_left;   // forward amplitude at each segment's left face
  std::vector<cplx> bwd_left;   // backward amplitude at the left face
  std::vector<cplx> bwd_right;  // backward amplitude at the right face
};

Amplitudes compose(const std::vector<cplx>& q, const std::vector<double>& widths) {
  // q has one entry per region: left lead, segments, right lead.
  const std::size_t n_seg = widths.size();
  const std::size_t n_reg = n_seg + 2;

  // before[j]: everything left of region j's left face (j = 1..n_reg-1).
  // after[j]:  everything right of segment j's right face.
  std::vector<SMatrix> before(n_reg);
  before[1] = interface_matrix(q[0], q[1]);
  for (std::size_t j = 2; j < n_reg; ++j) {
    const SMatrix slab = star(propagation_matrix(q[j - 1], widths[j - 2]),
                              interface_matrix(q[j - 1], q[j]));
    before[j] = star(before[j - 1], slab);
  }
  std::vector<SMatrix> after(n_reg);  // identity for the right lead
  for (std::size_t j = n_seg; j >= 1; --j) {
    after[j] = star(interface_matrix(q[j], q[j + 1]),
                    j + 1 <= n_seg ? star(propagation_matrix(q[j + 1], widths[j]), after[j + 1])
                                   : SMatrix{});
  }

  Amplitudes a;
  a.t_edge = before[n_reg - 1].t;
  a.r = before[n_reg - 1].r;
  a.fwd_left.resize(n_seg);
  a.bwd_left.resize(n_seg);
  a.bwd_right.resize(n_seg);
  for (std::size_t j = 1; j <= n_seg; ++j) {
    const cplx phase = std::exp(I * q[j] * widths[j - 1]);
    const cplx r_right = after[j].r * phase * phase;  // seen from the left face
    const cplx f = before[j].t / (1.0 - before[j].rp * r_right);
    a.fwd_left[j - 1] = f;
    a.bwd_left[j - 1] = r_right * f;
    a.bwd_right[j - 1] = after[j].r * f * phase;
  }
  return a;
}

bool is_seam(double energy, double height) {
  const double scale = std::max({std::abs(energy), std::abs(height), 1e-300});
  return std::abs(energy - height) <= seam_tolerance * scale;
}

}  // namespace

PotentialProfile PotentialProfile::barrier(double v0, double d, EffectiveMass mass) {
  PotentialProfile p;
  p.mass = mass;
  if (d > 0.0) p.segments.push_back({d, v0});
  return p;
}

double PotentialProfile::total_width() const noexcept {
  double w = 0.0;
  for (const auto& s : segments) w += s.width;
  return w;
}

double PotentialProfile::max_height() const noexcept {
  if (segments.empty()) return lead_height;
  double h = segments.front().height;
  for (const auto& s : segments) h = std::max(h, s.height);
  return h;
}

double PotentialProfile::potential_at(double x) const noexcept {
  if (x < 0.0) return lead_height;
  double edge = 0.0;
  for (const auto& s : segments) {
    edge += s.width;
    if (x < edge) return s.height;
  }
  return lead_height;
}

double PotentialProfile::cell_average(double a, double b) const noexcept {
  if (!(b > a)) return potential_at(a);
  // Integrate the step function over [a, b].
  double integral = 0.0;
  double left = 0.0;
  auto overlap = [&](double lo, double hi) {
    return std::max(0.0, std::min(hi, b) - std::max(lo, a));
  };
  integral += lead_height * overlap(-kInf, 0.0);
  for (const auto& s : segments) {
    integral += s.height * overlap(left, left + s.width);
    left += s.width;
  }
  integral += lead_height * overlap(left, kInf);
  return integral / (b - a);
}

void validate_profile(const PotentialProfile& profile) {
  if (!std::isfinite(profile.lead_height)) throw ValidationError("lead height must be finite");
  if (!(profile.mass.ratio > 0.0) || !std::isfinite(profile.mass.ratio)) {
    throw ValidationError("effective mass ratio must be finite and > 0");
  }
  for (std::size_t i = 0; i < profile.segments.size(); ++i) {
    const auto& s = profile.segments[i];
    if (!std::isfinite(s.width) || !std::isfinite(s.height)) {
      throw ValidationError("segment " + std::to_string(i) + " has non-finite values");
    }
    if (s.width <= 0.0) {
      throw ValidationError("segment " + std::to_string(i) + " width must be > 0");
    }
  }
}

cplx RegionCoefficients::psi(double x) const {
  const double xi = x - x_ref;
  switch (basis) {
    case RegionBasis::propagating:
      return first * std::exp(I * (wavenumber * xi)) + second * std::exp(-I * (wavenumber * xi));
    case RegionBasis::evanescent: {
      const cplx growing = growing_at_end * std::exp(-wavenumber * (x_end - x));
      return growing + second * std::exp(-wavenumber * xi);
    }
    case RegionBasis::linear:
      return first + second * xi;
  }
  return {};
}

cplx RegionCoefficients::dpsi(double x) const {
  const double xi = x - x_ref;
  switch (basis) {
    case RegionBasis::propagating:
      return I * wavenumber *
             (first * std::exp(I * (wavenumber * xi)) - second * std::exp(-I * (wavenumber * xi)));
    case RegionBasis::evanescent: {
      const cplx growing = growing_at_end * std::exp(-wavenumber * (x_end - x));
      return wavenumber * (growing - second * std::exp(-wavenumber * xi));
    }
    case RegionBasis::linear:
      return second;
  }
  return {};
}

cplx ScatteringCoefficients::psi(double x) const {
  for (const auto& reg : regions) {
    if (x < reg.x_end) return reg.psi(x);
  }
  return regions.empty() ? cplx{} : regions.back().psi(x);
}

SolveResult solve(const PotentialProfile& profile, double energy) {
  validate_profile(profile);
  if (!std::isfinite(energy)) throw ValidationError("energy must be finite");
  if (energy <= profile.lead_height) {
    throw ValidationError("energy must exceed the lead height (no propagating incident wave)");
  }

  const double c = profile.mass.ratio / codata::hbar2_over_2me;
  const std::size_t n_seg = profile.segments.size();
  std::vector<double> widths(n_seg);
  std::vector<double> kappa(n_seg + 2);
  std::vector<bool> seam(n_seg + 2, false);
  kappa.front() = kappa.back() = c * (energy - profile.lead_height);
  bool any_seam = false;
  for (std::size_t j = 0; j < n_seg; ++j) {
    widths[j] = profile.segments[j].width;
    kappa[j + 1] = c * (energy - profile.segments[j].height);
    if (is_seam(energy, profile.segments[j].height)) {
      seam[j + 1] = true;
      any_seam = true;
    }
  }
  const double k = std::sqrt(kappa.front());

  // A segment whose height equals E has q = 0 and a singular interface. The
  // energy offset is nudged by +/- delta and the two solutions averaged,
  // which removes the first-order perturbation error.
  auto build_q = [&](double sign) {
    std::vector<cplx> q(n_seg + 2);
    for (std::size_t j = 0; j < q.size(); ++j) {
      double kap = kappa[j];
      if (seam[j]) {
        const double scale = std::max(std::abs(energy), std::abs(profile.segments[j - 1].height));
        kap = sign * c * 1e-8 * std::max(scale, 1e-6);
      }
      q[j] = local_wavenumber(kap);
    }
    return q;
  };

  const std::vector<cplx> q_plus = build_q(+1.0);
  const Amplitudes amp_plus = compose(q_plus, widths);
  std::vector<cplx> q_minus;
  Amplitudes amp_minus;
  if (any_seam) {
    q_minus = build_q(-1.0);
    amp_minus = compose(q_minus, widths);
  }

  const double length = profile.total_width();
  SolveResult out;
  auto& tr = out.transmission;
  tr.energy = energy;
  const cplx t_edge = any_seam ? 0.5 * (amp_plus.t_edge + amp_minus.t_edge) : amp_plus.t_edge;
  const cplx r = any_seam ? 0.5 * (amp_plus.r + amp_minus.r) : amp_plus.r;
  tr.t_amp = t_edge * std::exp(-I * (k * length));
  tr.r_amp = r;
  tr.t_prob = std::norm(t_edge);
  tr.r_prob = std::norm(r);
  const double top = profile.max_height();
  if (n_seg == 0) {
    tr.regime = Regime::above;
  } else if (is_seam(energy, top)) {
    tr.regime = Regime::at;
  } else {
    tr.regime = energy < top ? Regime::below : Regime::above;
  }

  auto& regions = out.coefficients.regions;
  regions.reserve(n_seg + 2);
  regions.push_back(RegionCoefficients{-kInf, 0.0, 0.0, profile.lead_height,
                                       RegionBasis::propagating, k, 1.0, r});
  double x = 0.0;
  for (std::size_t j = 0; j < n_seg; ++j) {
    const double w = widths[j];
    RegionCoefficients reg;
    reg.x_start = x;
    reg.x_end = x + w;
    reg.x_ref = x;
    reg.height = profile.segments[j].height;
    if (seam[j + 1]) {
      // psi = a + b*xi from the averaged face values.
      auto face = [&](const Amplitudes& a, const std::vector<cplx>& q) {
        const cplx f = a.fwd_left[j];
        const cplx b = a.bwd_left[j];
        return std::pair<cplx, cplx>{f + b, I * q[j + 1] * (f - b)};
      };
      const auto [p1, d1] = face(amp_plus, q_plus);
      const auto [p2, d2] = face(amp_minus, q_minus);
      reg.basis = RegionBasis::linear;
      reg.wavenumber = 0.0;
      reg.first = 0.5 * (p1 + p2);
      reg.second = 0.5 * (d1 + d2);
    } else {
      auto avg = [&](const std::vector<cplx>& v_plus, const std::vector<cplx>& v_minus) {
        return any_seam ? 0.5 * (v_plus[j] + v_minus[j]) : v_plus[j];
      };
      const cplx f = avg(amp_plus.fwd_left, amp_minus.fwd_left);
      const cplx b_left = avg(amp_plus.bwd_left, amp_minus.bwd_left);
      const cplx b_right = avg(amp_plus.bwd_right, amp_minus.bwd_right);
      if (kappa[j + 1] > 0.0) {
        reg.basis = RegionBasis::propagating;
        reg.wavenumber = std::sqrt(kappa[j + 1]);
        reg.first = f;
        reg.second = b_left;
      } else {
        // exp(iq xi) with q = i*alpha decays: forward amplitude is D, the
        // backward amplitude is C (coefficient of the growing exponential).
        const double alpha = std::sqrt(-kappa[j + 1]);
        reg.basis = RegionBasis::evanescent;
        reg.wavenumber = alpha;
        reg.first = b_right * std::exp(-alpha * w);
        reg.growing_at_end = b_right;
        reg.second = f;
      }
    }
    regions.push_back(reg);
    x += w;
  }
  regions.push_back(RegionCoefficients{length, kInf, 0.0, profile.lead_height,
                                       RegionBasis::propagating, k, tr.t_amp, 0.0});

  // Substitute back: psi and psi' must be continuous at every interface.
  double residual = 0.0;
  for (std::size_t j = 0; j + 1 < regions.size(); ++j) {
    const double xb = regions[j].x_end;
    const cplx pl = regions[j].psi(xb);
    const cplx pr = regions[j + 1].psi(xb);
    const cplx dl = regions[j].dpsi(xb);
    const cplx dr = regions[j + 1].dpsi(xb);
    const double s_psi = std::max(std::abs(pl), std::abs(pr));
    if (s_psi == 0.0) continue;
    const double s_dpsi = std::max({std::abs(dl), std::abs(dr), k * s_psi});
    const double res = std::abs(pl - pr) / s_psi + std::abs(dl - dr) / s_dpsi;
    residual = std::max(residual, res);
  }
  out.residual = residual;
  return out;
}

std::vector<SweepRow> sweep(const PotentialProfile& profile, double e_min, double e_max,
                            std::size_t n) {
  validate_profile(profile);
  if (!std::isfinite(e_min) || !std::isfinite(e_max)) {
    throw ValidationError("sweep bounds must be finite");
  }
  if (!(e_min > profile.lead_height)) throw ValidationError("sweep requires e_min > lead height");
  if (!(e_max > e_min)) throw ValidationError("sweep requires e_max > e_min");
  if (n < 2) throw ValidationError("sweep requires n >= 2");

  std::vector<SweepRow> rows(n);
  const double step = (e_max - e_min) / static_cast<double>(n - 1);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) {
    auto& row = rows[static_cast<std::size_t>(i)];
    row.energy = (i + 1 == count) ? e_max : e_min + static_cast<double>(i) * step;
    try {
      SolveResult s = solve(profile, row.energy);
      row.result = s.transmission;
      row.residual = s.residual;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  return rows;
}

}  // namespace tunnel
