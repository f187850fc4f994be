#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace spherefeat {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

/// Packed index of coefficient (l, m) in band-major order.
inline int lm_index(int l, int m) { return l * l + l + m; }

inline int coeff_count(int b_max) { return (b_max + 1) * (b_max + 1); }

inline double deg(double rad) { return rad * 180.0 / kPi; }
inline double rad(double d) { return d * kPi / 180.0; }

}  // namespace spherefeat
