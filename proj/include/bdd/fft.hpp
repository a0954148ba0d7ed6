#pragma once

#include "bdd/types.hpp"

namespace bdd::fft {

// Unnormalized in-place complex transforms backed by FFTW.
//
//   forward:  X[k] = sum_j x[j] exp(-2 pi i j k / n)
//   backward: x[j] = sum_k X[k] exp(+2 pi i j k / n)
//
// Plans are cached per thread; the FFTW planner itself is serialized with a
// process-wide mutex, so the functions are safe to call from worker threads.
void forward(CVector &data);
void backward(CVector &data);

} // namespace bdd::fft
