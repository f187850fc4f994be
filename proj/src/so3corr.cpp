#include "spherefeat/so3corr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "spherefeat/fft.hpp"

namespace spherefeat {

namespace {

cplx i_pow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

double wrap_pm_pi(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

enum class Pairing { Correlate, Convolve };

CorrelationSpectrum assemble(const SphericalExpansion& f, const SphericalExpansion& g, int pad,
                             Pairing mode) {
  require(f.b_max == g.b_max, "correlation: mismatched b_max");
  require(pad >= 0, "correlation: pad must be >= 0");
  const int b = f.b_max;
  CorrelationSpectrum s;
  s.b_max = b;
  s.pad = pad;
  s.side = correlation_side(b, pad);
  int w = s.width();
  s.block.assign(static_cast<std::size_t>(w) * w * w, cplx(0.0));
  auto d = wigner_d_half_pi(b);
  for (int l = 0; l <= b; ++l) {
    const auto& dl = (*d)[l];
    int wl = 2 * l + 1;
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        cplx gn = mode == Pairing::Correlate ? std::conj(g.at(l, n)) : g.at(l, n);
        cplx fg = f.at(l, m) * gn;
        if (fg == cplx(0.0)) continue;
        for (int h = -l; h <= l; ++h)
          s.at(m, h, n) += dl[(m + l) * wl + (h + l)] * dl[(h + l) * wl + (n + l)] * fg;
      }
  }
  for (int m = -b; m <= b; ++m)
    for (int h = -b; h <= b; ++h)
      for (int n = -b; n <= b; ++n) s.at(m, h, n) *= i_pow(m + 2 * h + n);
  return s;
}

// Three passes of 1D transforms over the padded grid, touching only lines that
// can be non-zero. emit(x, y, line) receives the final z-line for every (x, y)
// in increasing linear order.
void transform_lines(const CorrelationSpectrum& s, int ny,
                     const std::function<void(int, int, const cplx*)>& emit) {
  const int b = s.b_max, w = s.width(), S = s.side;
  std::vector<cplx> line(S);
  auto slot = [S](int k) { return (k + S) % S; };
  // pass 1: h -> y, stored A[m][y][n]
  std::vector<cplx> A(static_cast<std::size_t>(w) * ny * w);
  for (int m = -b; m <= b; ++m)
    for (int n = -b; n <= b; ++n) {
      std::fill(line.begin(), line.end(), cplx(0.0));
      bool any = false;
      for (int h = -b; h <= b; ++h) {
        line[slot(h)] = s.at(m, h, n);
        any = any || line[slot(h)] != cplx(0.0);
      }
      if (any) fft1d(line.data(), S, FftSign::Forward);
      for (int y = 0; y < ny; ++y) A[(static_cast<std::size_t>(m + b) * ny + y) * w + (n + b)] = line[y];
    }
  // pass 2: m -> x, stored B[x][y][n]
  std::vector<cplx> B(static_cast<std::size_t>(S) * ny * w);
  for (int y = 0; y < ny; ++y)
    for (int n = -b; n <= b; ++n) {
      std::fill(line.begin(), line.end(), cplx(0.0));
      bool any = false;
      for (int m = -b; m <= b; ++m) {
        line[slot(m)] = A[(static_cast<std::size_t>(m + b) * ny + y) * w + (n + b)];
        any = any || line[slot(m)] != cplx(0.0);
      }
      if (any) fft1d(line.data(), S, FftSign::Forward);
      for (int x = 0; x < S; ++x) B[(static_cast<std::size_t>(x) * ny + y) * w + (n + b)] = line[x];
    }
  // pass 3: n -> z
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < ny; ++y) {
      std::fill(line.begin(), line.end(), cplx(0.0));
      const cplx* src = &B[(static_cast<std::size_t>(x) * ny + y) * w];
      for (int n = -b; n <= b; ++n) line[slot(n)] = src[n + b];
      fft1d(line.data(), S, FftSign::Forward);
      emit(x, y, line.data());
    }
}

int theta_rows(int side) { return (side + 1) / 2; }

}  // namespace

int correlation_side(int b_max, int pad) {
  require(b_max >= 0 && pad >= 0, "correlation_side: negative argument");
  require(2 * b_max + 1 + pad <= 4096, "correlation: FFT size overflow");
  return next_fast_size(2 * b_max + 1 + pad);
}

cplx CorrelationSpectrum::grid_entry(int a, int b, int c) const {
  auto order = [this](int idx) {
    int k = idx <= side / 2 ? idx : idx - side;
    return k;
  };
  int m = order(a), h = order(b), n = order(c);
  if (std::abs(m) > b_max || std::abs(h) > b_max || std::abs(n) > b_max) return cplx(0.0);
  return at(m, h, n);
}

CorrelationSpectrum correlation_spectrum(const SphericalExpansion& f, const SphericalExpansion& g,
                                         int pad) {
  return assemble(f, g, pad, Pairing::Correlate);
}

CorrelationSpectrum convolution_spectrum(const SphericalExpansion& f, const SphericalExpansion& g,
                                         int pad) {
  return assemble(f, g, pad, Pairing::Convolve);
}

CorrelationSpectrum correlation_spectrum_normalized(const SphericalExpansion& f,
                                                    const SphericalExpansion& g, int pad) {
  auto centered = [](const SphericalExpansion& e) {
    SphericalExpansion c = e;
    c.at(0, 0) = 0.0;
    double energy = 0.0;
    for (int l = 1; l <= c.b_max; ++l) energy += c.band_energy(l);
    require(energy > 1e-24, "correlate_normalized: zero-variance signal");
    return std::make_pair(c, std::sqrt(energy));
  };
  auto [fc, sf] = centered(f);
  auto [gc, sg] = centered(g);
  CorrelationSpectrum s = assemble(fc, gc, pad, Pairing::Correlate);
  double inv = 1.0 / (sf * sg);
  for (auto& v : s.block) v *= inv;
  return s;
}

CorrelationSpectrum combine_multiradius(const std::vector<CorrelationSpectrum>& spectra) {
  require(!spectra.empty(), "combine_multiradius: empty input");
  CorrelationSpectrum out = spectra.front();
  for (std::size_t i = 1; i < spectra.size(); ++i) {
    const auto& s = spectra[i];
    require(s.b_max == out.b_max && s.pad == out.pad && s.side == out.side,
            "combine_multiradius: shape mismatch");
    for (std::size_t k = 0; k < out.block.size(); ++k) out.block[k] += s.block[k];
  }
  return out;
}

CorrelationGrid spectrum_to_grid(const CorrelationSpectrum& s, bool theta_half) {
  CorrelationGrid g;
  g.side = s.side;
  const int S = s.side;
  g.values.assign(static_cast<std::size_t>(S) * S * S, 0.0);
  double max_imag = 0.0;
  transform_lines(s, theta_half ? theta_rows(S) : S, [&](int x, int y, const cplx* line) {
    double* dst = &g.values[g.index(x, y, 0)];
    for (int z = 0; z < S; ++z) {
      dst[z] = line[z].real();
      max_imag = std::max(max_imag, std::abs(line[z].imag()));
    }
  });
  g.max_imag = max_imag;
  return g;
}

CorrelationGrid correlate(const SphericalExpansion& f, const SphericalExpansion& g, int pad) {
  return spectrum_to_grid(correlation_spectrum(f, g, pad));
}

CorrelationGrid correlate_normalized(const SphericalExpansion& f, const SphericalExpansion& g, int pad) {
  return spectrum_to_grid(correlation_spectrum_normalized(f, g, pad));
}

CorrelationGrid convolve_full(const SphericalExpansion& f, const SphericalExpansion& g, int pad) {
  return spectrum_to_grid(convolution_spectrum(f, g, pad));
}

EulerZYZ cell_rotation(int x, int y, int z, int side) {
  const double delta = 2.0 * kPi / side;
  auto outer = [&](int i) {
    double a = i * delta;
    return a > kPi ? kPi + (2.0 * kPi - a) : kPi - a;
  };
  double t = y * delta;
  if (t < kPi) return {outer(x), t, outer(z)};
  // lower half of the eta axis: the same rotation written with theta in [0, pi]
  return canonical({outer(x), t, outer(z)});
}

RotationEstimate recover_rotation(const CorrelationGrid& grid) {
  const int S = grid.side, ny = theta_rows(S);
  double best = -std::numeric_limits<double>::infinity(), worst = -best;
  std::array<int, 3> cell{0, 0, 0};
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < ny; ++y)
      for (int z = 0; z < S; ++z) {
        double v = grid.at(x, y, z);
        require(std::isfinite(v), "recover_rotation: non-finite grid value");
        if (v > best) {
          best = v;
          cell = {x, y, z};
        }
        worst = std::min(worst, v);
      }
  require(best > worst, "recover_rotation: constant grid has no unique peak");
  return {cell_rotation(cell[0], cell[1], cell[2], S), best, cell};
}

RotationEstimate find_peak(const CorrelationSpectrum& s) {
  const int S = s.side;
  double best = -std::numeric_limits<double>::infinity(), worst = -best;
  std::array<int, 3> cell{0, 0, 0};
  transform_lines(s, theta_rows(S), [&](int x, int y, const cplx* line) {
    for (int z = 0; z < S; ++z) {
      double v = line[z].real();
      if (v > best) {
        best = v;
        cell = {x, y, z};
      }
      worst = std::min(worst, v);
    }
  });
  require(std::isfinite(best), "find_peak: non-finite grid value");
  require(best > worst, "find_peak: constant grid has no unique peak");
  return {cell_rotation(cell[0], cell[1], cell[2], S), best, cell};
}

RotationEstimate estimate_rotation(const SphericalExpansion& f, const SphericalExpansion& g, int pad) {
  return find_peak(correlation_spectrum(f, g, pad));
}

SphericalExpansion convolve_left(const SphericalExpansion& f, const SphericalExpansion& g) {
  require(f.b_max == g.b_max, "convolve_left: mismatched b_max");
  SphericalExpansion out(f.b_max);
  for (int l = 0; l <= f.b_max; ++l) {
    cplx k = 2.0 * kPi * std::sqrt(4.0 * kPi / (2.0 * l + 1.0)) * g.at(l, 0);
    for (int m = -l; m <= l; ++m) out.at(l, m) = f.at(l, m) * k;
  }
  return out;
}

double error_bound_deg(int b_max, int pad) {
  double n = 2.0 * b_max + pad;
  require(n > 0, "error_bound_deg: degenerate grid");
  return 2.0 * 180.0 / n + 90.0 / n;
}

double summed_angular_error_deg(const EulerZYZ& truth, const EulerZYZ& estimate) {
  const double tol = 1e-9;
  EulerZYZ t = canonical(truth), e = canonical(estimate);
  double err = std::abs(t.theta - e.theta);
  if (t.theta < tol || e.theta < tol) {
    err += std::abs(wrap_pm_pi((t.phi + t.psi) - (e.phi + e.psi)));
  } else if (kPi - t.theta < tol || kPi - e.theta < tol) {
    err += std::abs(wrap_pm_pi((t.phi - t.psi) - (e.phi - e.psi)));
  } else {
    err += std::abs(wrap_pm_pi(t.phi - e.phi)) + std::abs(wrap_pm_pi(t.psi - e.psi));
  }
  return deg(err);
}

std::vector<double> haar_row_weights(int side) {
  const int K = (side - 1) / 2;
  std::vector<double> w(side, 0.0);
  for (int y = 0; y < side; ++y) {
    double theta = 2.0 * kPi * y / side;
    double acc = 4.0;  // integral of |sin| over one period
    for (int k = 2; k <= K; k += 2) acc += 2.0 * (4.0 / (1.0 - static_cast<double>(k) * k)) * std::cos(k * theta);
    w[y] = acc / 4.0;  // (1/s) * acc * (s/4)
  }
  return w;
}

double haar_grid_sum(const CorrelationGrid& grid) {
  const int S = grid.side;
  auto w = haar_row_weights(S);
  double total = 0.0;
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y) {
      double row = 0.0;
      for (int z = 0; z < S; ++z) row += grid.at(x, y, z);
      total += w[y] * row;
    }
  return total;
}

}  // namespace spherefeat
