#pragma once

#include <span>

#include "dds/common.hpp"

namespace dds::fft {

// Thin FFTW wrapper. Plans are created once per (size, direction) with
// FFTW_ESTIMATE so that results do not depend on timing measurements, and are
// cached behind a mutex; execution is thread-safe.
//
// forward:  X[k] = sum_n x[n] exp(-j 2 pi k n / N)
// backward: x[n] = sum_k X[k] exp(+j 2 pi k n / N)   (unnormalized)
void forward(std::span<const Complex> in, std::span<Complex> out);
void backward(std::span<const Complex> in, std::span<Complex> out);

// Strided variants transform `count` sequences laid out at `stride` apart.
// Used for column/row transforms of column-major matrices.
void forward_many(const Complex* in, Complex* out, int n, int count, int stride,
                  int dist);
void backward_many(const Complex* in, Complex* out, int n, int count, int stride,
                   int dist);

}  // namespace dds::fft
