#pragma once

#include "pslab/types.hpp"

namespace pslab::fft {

// Unnormalized forward (e^{-i}) and backward (e^{+i}) transforms.
void forward(cplx* data, int n);
void backward(cplx* data, int n);

// In-place transforms of every column of a column-major matrix.
void forward_columns(CMatrix& m);
void backward_columns(CMatrix& m);

// 2-D transforms over a column-major matrix.
void forward_2d(CMatrix& m);
void backward_2d(CMatrix& m);

// Signed FFT index of bin j for length n; the Nyquist bin maps to -n/2.
inline long signed_index(long j, long n) { return j < (n + 1) / 2 ? j : j - n; }

}  // namespace pslab::fft
