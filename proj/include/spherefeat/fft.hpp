#pragma once

#include <vector>

#include "spherefeat/common.hpp"

namespace spherefeat {

/// Smallest n' >= n whose prime factors are all in {2,3,5,7}.
int next_fast_size(int n);

enum class FftSign { Forward = -1, Backward = +1 };

/// Unnormalized in-place 1D DFT of length n: out[k] = sum_j in[j] e^{sign 2 pi i jk/n}.
void fft1d(cplx* data, int n, FftSign sign);

/// Unnormalized in-place 3D DFT, row-major with dims (n0, n1, n2), n2 fastest.
void fft3d(std::vector<cplx>& data, int n0, int n1, int n2, FftSign sign);

}  // namespace spherefeat
