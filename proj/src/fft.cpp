#include "spherefeat/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace spherefeat {

namespace {

// FFTW's planner is not re-entrant; execution with the new-array interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

using PlanKey = std::tuple<int, int, int, int, int>;  // rank, n0, n1, n2, sign

fftw_plan cached_plan(int rank, int n0, int n1, int n2, FftSign sign) {
  static std::map<PlanKey, fftw_plan> plans;
  PlanKey key{rank, n0, n1, n2, static_cast<int>(sign)};
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  std::size_t total = static_cast<std::size_t>(n0) * (rank > 1 ? n1 : 1) * (rank > 2 ? n2 : 1);
  fftw_complex* buf = fftw_alloc_complex(total);
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  int fsign = sign == FftSign::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan p = rank == 1 ? fftw_plan_dft_1d(n0, buf, buf, fsign, flags)
                          : fftw_plan_dft_3d(n0, n1, n2, buf, buf, fsign, flags);
  fftw_free(buf);
  if (!p) throw Error("fft: planner failed");
  plans.emplace(key, p);
  return p;
}

}  // namespace

int next_fast_size(int n) {
  require(n >= 1, "fft: size must be positive");
  for (int m = n;; ++m) {
    int r = m;
    for (int f : {2, 3, 5, 7, 11, 13})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

void fft1d(cplx* data, int n, FftSign sign) {
  fftw_plan p = cached_plan(1, n, 0, 0, sign);
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, d, d);
}

void fft3d(std::vector<cplx>& data, int n0, int n1, int n2, FftSign sign) {
  require(data.size() == static_cast<std::size_t>(n0) * n1 * n2, "fft3d: size mismatch");
  fftw_plan p = cached_plan(3, n0, n1, n2, sign);
  auto* d = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, d, d);
}

}  // namespace spherefeat
