#pragma once

#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "scrub/types.hpp"

namespace scrub {

enum class FilterKind { none, butterworth10, chebyshev2_20db };

inline const char* to_string(FilterKind k) {
  switch (k) {
    case FilterKind::none: return "none";
    case FilterKind::butterworth10: return "butterworth10";
    case FilterKind::chebyshev2_20db: return "chebyshev2";
  }
  return "?";
}

/// Digital band-stop filter in transfer-function form.
struct NotchFilter {
  FilterKind kind = FilterKind::none;
  std::array<double, 2> band_hz{0.0, 0.0};
  std::vector<double> b{1.0};
  std::vector<double> a{1.0};

  bool is_identity() const { return b.size() == 1 && a.size() == 1; }

  /// |H(e^{j 2 pi f tr})| for frequency f in Hz.
  double gain_at(double freq_hz, double tr_seconds) const {
    const double w = 2.0 * M_PI * freq_hz * tr_seconds;
    const std::complex<double> zinv = std::exp(std::complex<double>(0, -w));
    std::complex<double> num = 0, den = 0;
    for (auto it = b.rbegin(); it != b.rend(); ++it) num = num * zinv + *it;
    for (auto it = a.rbegin(); it != a.rend(); ++it) den = den * zinv + *it;
    return std::abs(num / den);
  }

  /// All poles strictly inside the unit circle.
  bool stable() const {
    const auto n = a.size() - 1;
    if (n == 0) return true;
    Matrix companion = Matrix::Zero(static_cast<Eigen::Index>(n),
                                    static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      companion(0, static_cast<Eigen::Index>(i)) = -a[i + 1] / a[0];
    for (std::size_t i = 1; i < n; ++i)
      companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    Eigen::EigenSolver<Matrix> es(companion, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()[i]) >= 1.0) return false;
    return true;
  }
};

namespace detail {

using Cplx = std::complex<double>;
using CVec = std::vector<Cplx>;

struct Zpk {
  CVec z, p;
  double k = 1.0;
};

inline Cplx cprod_neg(const CVec& v) {
  Cplx acc(1.0, 0.0);
  for (const auto& x : v) acc *= -x;
  return acc;
}

/// Analog Butterworth lowpass prototype.
inline Zpk buttap(int n) {
  Zpk out;
  for (int m = -n + 1; m < n; m += 2) {
    const double theta = M_PI * m / (2.0 * n);
    out.p.push_back(-std::exp(Cplx(0, theta)));
  }
  out.k = 1.0;
  return out;
}

/// Analog Chebyshev type-II lowpass prototype with rs dB stopband ripple.
inline Zpk cheb2ap(int n, double rs) {
  Zpk out;
  const double de = 1.0 / std::sqrt(std::pow(10.0, 0.1 * rs) - 1.0);
  const double mu = std::asinh(1.0 / de) / n;
  std::vector<int> m;
  if (n % 2) {
    for (int i = -n + 1; i < 0; i += 2) m.push_back(i);
    for (int i = 2; i < n; i += 2) m.push_back(i);
  } else {
    for (int i = -n + 1; i < n; i += 2) m.push_back(i);
  }
  for (int mi : m)
    out.z.push_back(Cplx(0, 1.0 / std::sin(mi * M_PI / (2.0 * n))));
  // poles
  for (int i = -n + 1; i < n; i += 2) {
    Cplx p = -std::exp(Cplx(0, M_PI * i / (2.0 * n)));
    p = Cplx(std::sinh(mu) * p.real(), std::cosh(mu) * p.imag());
    out.p.push_back(1.0 / p);
  }
  out.k = (cprod_neg(out.p) / cprod_neg(out.z)).real();
  return out;
}

/// Lowpass prototype -> band-stop, analog domain.
inline Zpk lp2bs(const Zpk& in, double wo, double bw) {
  const auto degree = in.p.size() - in.z.size();
  CVec z_hp, p_hp;
  for (const auto& z : in.z) z_hp.push_back((bw / 2.0) / z);
  for (const auto& p : in.p) p_hp.push_back((bw / 2.0) / p);
  Zpk out;
  const Cplx wo2(wo * wo, 0.0);
  for (const auto& z : z_hp) {
    const Cplx s = std::sqrt(z * z - wo2);
    out.z.push_back(z + s);
  }
  for (const auto& z : z_hp) {
    const Cplx s = std::sqrt(z * z - wo2);
    out.z.push_back(z - s);
  }
  for (const auto& p : p_hp) {
    const Cplx s = std::sqrt(p * p - wo2);
    out.p.push_back(p + s);
  }
  for (const auto& p : p_hp) {
    const Cplx s = std::sqrt(p * p - wo2);
    out.p.push_back(p - s);
  }
  for (std::size_t i = 0; i < degree; ++i) {
    out.z.push_back(Cplx(0, wo));
    out.z.push_back(Cplx(0, -wo));
  }
  out.k = in.k * (cprod_neg(in.z) / cprod_neg(in.p)).real();
  return out;
}

/// Bilinear transform with sampling rate fs.
inline Zpk bilinear(const Zpk& in, double fs) {
  const double fs2 = 2.0 * fs;
  Zpk out;
  Cplx num(1.0, 0.0), den(1.0, 0.0);
  for (const auto& z : in.z) {
    out.z.push_back((fs2 + z) / (fs2 - z));
    num *= fs2 - z;
  }
  for (const auto& p : in.p) {
    out.p.push_back((fs2 + p) / (fs2 - p));
    den *= fs2 - p;
  }
  const auto degree = in.p.size() - in.z.size();
  for (std::size_t i = 0; i < degree; ++i) out.z.push_back(Cplx(-1.0, 0.0));
  out.k = in.k * (num / den).real();
  return out;
}

inline std::vector<double> poly_from_roots(const CVec& roots) {
  CVec c{Cplx(1.0, 0.0)};
  for (const auto& r : roots) {
    CVec next(c.size() + 1, Cplx(0.0, 0.0));
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i] * r;
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

}  // namespace detail

/// Design a digital band-stop filter via analog prototype, lowpass-to-
/// bandstop transform, and bilinear transform with band-edge prewarping.
/// band_hz must lie strictly inside (0, Nyquist).
inline NotchFilter design_notch(FilterKind kind, std::array<double, 2> band_hz,
                                double tr_seconds) {
  NotchFilter f;
  f.kind = kind;
  f.band_hz = band_hz;
  if (kind == FilterKind::none) return f;

  const double nyquist = 0.5 / tr_seconds;
  if (!(band_hz[0] > 0 && band_hz[0] < band_hz[1] && band_hz[1] < nyquist))
    throw ScrubError("design_notch: band outside (0, Nyquist)");

  // Chebyshev II order 4 with 20 dB stopband ripple; the narrow notch band
  // keeps the transition sharp enough at this order.
  detail::Zpk proto = kind == FilterKind::butterworth10
                          ? detail::buttap(10)
                          : detail::cheb2ap(4, 20.0);

  // Prewarp normalized band edges (relative to Nyquist) onto the analog axis.
  const double fs = 2.0;
  const double w1 = 2.0 * fs * std::tan(M_PI * (band_hz[0] / nyquist) / fs);
  const double w2 = 2.0 * fs * std::tan(M_PI * (band_hz[1] / nyquist) / fs);
  const double wo = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  detail::Zpk analog = detail::lp2bs(proto, wo, bw);
  detail::Zpk digital = detail::bilinear(analog, fs);

  f.b = detail::poly_from_roots(digital.z);
  for (auto& c : f.b) c *= digital.k;
  f.a = detail::poly_from_roots(digital.p);
  return f;
}

// ---------------------------------------------------------------------------
// Zero-phase application

namespace detail {

/// Direct form II transposed filtering with initial state zi.
inline Vector lfilter(const std::vector<double>& b, const std::vector<double>& a,
                      const Vector& x, const std::vector<double>& zi) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> bb(b), aa(a);
  bb.resize(n, 0.0);
  aa.resize(n, 0.0);
  std::vector<double> z(zi);
  z.resize(n - 1, 0.0);
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = bb[0] * xi + (n > 1 ? z[0] : 0.0);
    for (std::size_t j = 0; j + 1 < n - 1; ++j)
      z[j] = bb[j + 1] * xi + z[j + 1] - aa[j + 1] * yi;
    if (n > 1) z[n - 2] = bb[n - 1] * xi - aa[n - 1] * yi;
    y[i] = yi;
  }
  return y;
}

/// Steady-state initial conditions for a unit step (lfilter_zi style):
/// solves (I - A^T) zi = B for the companion-form state transition.
inline std::vector<double> lfilter_zi(const std::vector<double>& b,
                                      const std::vector<double>& a) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> bb(b), aa(a);
  bb.resize(n, 0.0);
  aa.resize(n, 0.0);
  const auto m = static_cast<Eigen::Index>(n - 1);
  if (m == 0) return {};
  Matrix IminusA = Matrix::Zero(m, m);
  Vector B(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    B[i] = bb[static_cast<std::size_t>(i) + 1] -
           aa[static_cast<std::size_t>(i) + 1] * bb[0];
    IminusA(i, i) += 1.0;
    IminusA(i, 0) += aa[static_cast<std::size_t>(i) + 1];
    if (i + 1 < m) IminusA(i, i + 1) -= 1.0;
  }
  Vector zi = IminusA.partialPivLu().solve(B);
  return std::vector<double>(zi.data(), zi.data() + zi.size());
}

}  // namespace detail

/// Forward-backward (zero-phase) filtering with odd-reflective edge padding
/// of length 3 * max(len(a), len(b)).
inline Vector filtfilt(const NotchFilter& f, const Vector& x) {
  if (f.is_identity()) return x;
  const auto padlen = static_cast<Eigen::Index>(3 * std::max(f.a.size(), f.b.size()));
  if (x.size() <= padlen)
    throw ScrubError("filtfilt: input shorter than filter padding");

  Vector ext(x.size() + 2 * padlen);
  for (Eigen::Index i = 0; i < padlen; ++i)
    ext[i] = 2.0 * x[0] - x[padlen - i];
  ext.segment(padlen, x.size()) = x;
  for (Eigen::Index i = 0; i < padlen; ++i)
    ext[padlen + x.size() + i] = 2.0 * x[x.size() - 1] - x[x.size() - 2 - i];

  const auto zi = detail::lfilter_zi(f.b, f.a);
  auto scale_zi = [&](double x0) {
    std::vector<double> z(zi);
    for (auto& v : z) v *= x0;
    return z;
  };
  Vector fwd = detail::lfilter(f.b, f.a, ext, scale_zi(ext[0]));
  Vector rev = fwd.reverse();
  Vector bwd = detail::lfilter(f.b, f.a, rev, scale_zi(rev[0]));
  Vector bwd_rev = bwd.reverse();
  return bwd_rev.segment(padlen, x.size());
}

}  // namespace scrub
