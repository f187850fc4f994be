#pragma once

#include <array>
#include <vector>

#include "spherefeat/common.hpp"
#include "spherefeat/harmonics.hpp"
#include "spherefeat/wigner.hpp"

namespace spherefeat {

/// Grid side for (b_max, pad): 2*b_max+1+pad rounded up to a size with prime
/// factors in {2, 3, 5, 7, 11, 13}.
int correlation_side(int b_max, int pad);

/// Correlation spectrum C(m, h, m') with the phase shift already applied.
/// Only the (2b+1)^3 block that can be non-zero is stored; on the padded
/// grid of side s an order k lives at index (k + s) mod s.
struct CorrelationSpectrum {
  int b_max = 0;
  int pad = 0;
  int side = 1;
  std::vector<cplx> block;  // [(m+b)*(2b+1)^2 + (h+b)*(2b+1) + (m'+b)]

  int width() const { return 2 * b_max + 1; }
  cplx& at(int m, int h, int mp) {
    int w = width();
    return block[(static_cast<std::size_t>(m + b_max) * w + (h + b_max)) * w + (mp + b_max)];
  }
  const cplx& at(int m, int h, int mp) const {
    int w = width();
    return block[(static_cast<std::size_t>(m + b_max) * w + (h + b_max)) * w + (mp + b_max)];
  }
  /// Entry at padded-grid index (a, b, c).
  cplx grid_entry(int a, int b, int c) const;
};

/// Real grid over (xi, eta, omega), side s, x slowest; step 2 pi / s.
struct CorrelationGrid {
  int side = 1;
  std::vector<double> values;
  double max_imag = 0.0;  // largest discarded imaginary part

  double delta() const { return 2.0 * kPi / side; }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(x) * side + y) * side + z;
  }
  double at(int x, int y, int z) const { return values[index(x, y, z)]; }
};

struct RotationEstimate {
  EulerZYZ rot;
  double peak = 0.0;
  std::array<int, 3> cell{0, 0, 0};
};

CorrelationSpectrum correlation_spectrum(const SphericalExpansion& f, const SphericalExpansion& g,
                                         int pad);

/// Spectrum with both DC terms removed and divided by sigma_f * sigma_g.
CorrelationSpectrum correlation_spectrum_normalized(const SphericalExpansion& f,
                                                    const SphericalExpansion& g, int pad);

/// Full-convolution spectrum: g enters unconjugated.
CorrelationSpectrum convolution_spectrum(const SphericalExpansion& f, const SphericalExpansion& g,
                                         int pad);

CorrelationSpectrum combine_multiradius(const std::vector<CorrelationSpectrum>& spectra);

/// Materialized grid of a spectrum. When theta_half is set only rows with
/// y * delta < pi are filled (the rest stay zero).
CorrelationGrid spectrum_to_grid(const CorrelationSpectrum& s, bool theta_half = false);

CorrelationGrid correlate(const SphericalExpansion& f, const SphericalExpansion& g, int pad);
CorrelationGrid correlate_normalized(const SphericalExpansion& f, const SphericalExpansion& g, int pad);
CorrelationGrid convolve_full(const SphericalExpansion& f, const SphericalExpansion& g, int pad);

/// Rotation for a grid cell.
EulerZYZ cell_rotation(int x, int y, int z, int side);

/// Argmax over the theta in [0, pi) half, smallest linear index on ties.
RotationEstimate recover_rotation(const CorrelationGrid& grid);

/// Same result as recover_rotation(spectrum_to_grid(s)) without storing the grid.
RotationEstimate find_peak(const CorrelationSpectrum& s);

/// R with f close to R g.
RotationEstimate estimate_rotation(const SphericalExpansion& f, const SphericalExpansion& g, int pad);

/// (f * g)^l_m = 2 pi sqrt(4 pi / (2l+1)) f^l_m g^l_0.
SphericalExpansion convolve_left(const SphericalExpansion& f, const SphericalExpansion& g);

/// Worst-case summed angular error in degrees: 2*180/(2b+p) + 90/(2b+p).
double error_bound_deg(int b_max, int pad);

/// Summed absolute per-angle difference in degrees. When either rotation sits
/// on the theta = 0 or theta = pi singularity only phi + psi (resp. phi - psi)
/// is defined, so the split is compared through that sum.
double summed_angular_error_deg(const EulerZYZ& truth, const EulerZYZ& estimate);

/// Quadrature weights over grid rows y for integrating over SO(3) with the
/// sin(theta) Haar density, scaled so that they sum to s. Exact for grids
/// that are trigonometric polynomials of degree < s/2 in theta.
std::vector<double> haar_row_weights(int side);

/// sum_{x,y,z} w_y g(x,y,z).
double haar_grid_sum(const CorrelationGrid& grid);

}  // namespace spherefeat
