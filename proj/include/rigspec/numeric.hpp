#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#ifdef RIGSPEC_USE_LAPACKE
#include <lapacke.h>
#endif

namespace rigspec {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Behaviour of an estimate along a doubling schedule.
enum class Trend { open, converged, diverged };

inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::converged: return "converged";
    case Trend::diverged: return "diverged";
    default: return "open";
  }
}

/// Classifies a nonnegative estimate sampled at successive doublings.
///
/// Converged: the last two relative changes are both below rel_tol.
/// Diverged: not converged, and the estimate grew by at least `growth`
/// across the last three doublings (or became infinite).
inline Trend classify_growth(std::span<const double> v, double rel_tol, double growth) {
  const std::size_t L = v.size();
  if (L == 0) return Trend::open;
  if (std::isinf(v[L - 1])) return Trend::diverged;
  auto close = [&](double a, double b) { return std::abs(a - b) <= rel_tol * std::abs(a); };
  if (L >= 3 && close(v[L - 1], v[L - 2]) && close(v[L - 2], v[L - 3])) return Trend::converged;
  if (L >= 4 && v[L - 4] > 0 && v[L - 1] >= growth * v[L - 4] && v[L - 1] > v[L - 2]) return Trend::diverged;
  return Trend::open;
}

/// Shortest round-trip decimal representation; deterministic across runs.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_complex(cplx z) {
  std::string s = format_double(z.real());
  if (z.imag() < 0 || (z.imag() == 0 && std::signbit(z.imag())))
    s += "-" + format_double(-z.imag()) + "i";
  else
    s += "+" + format_double(z.imag()) + "i";
  return s;
}

/// Singular values (descending) of a matrix given in tall orientation.
///
/// Callers that need exact agreement between a matrix and its adjoint pass
/// the same tall matrix in both cases; the decomposition is deterministic.
inline RVector singular_values_tall(const CMatrix& tall) {
  if (tall.size() == 0) return RVector();
#ifdef RIGSPEC_USE_LAPACKE
  {
    CMatrix a = tall;
    RVector s(std::min(a.rows(), a.cols()));
    const auto m = static_cast<lapack_int>(a.rows()), n = static_cast<lapack_int>(a.cols());
    if (LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n, reinterpret_cast<lapack_complex_double*>(a.data()), m, s.data(), nullptr, 1,
                       nullptr, 1) == 0)
      return s;
  }
#endif
  Eigen::BDCSVD<CMatrix> svd(tall);
  return svd.singularValues();
}

inline RVector singular_values(const CMatrix& m) {
  if (m.rows() >= m.cols()) return singular_values_tall(m);
  CMatrix t = m.adjoint();
  return singular_values_tall(t);
}

inline double spectral_norm(const CMatrix& m) {
  const RVector s = singular_values(m);
  return s.size() ? s(0) : 0.0;
}

/// Doubling schedule n0, 2 n0, ... capped at nmax (nmax always included).
inline std::vector<std::size_t> doubling_schedule(std::size_t n0, std::size_t nmax) {
  std::vector<std::size_t> out;
  for (std::size_t n = n0; n < nmax; n *= 2) out.push_back(n);
  out.push_back(nmax);
  return out;
}

}  // namespace rigspec
