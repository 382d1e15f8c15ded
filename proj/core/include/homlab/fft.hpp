#ifndef HOMLAB_FFT_HPP
#define HOMLAB_FFT_HPP

#include <complex>
#include <vector>

namespace homlab::fft {

// Thin FFTW front end.  Plans are created with FFTW_ESTIMATE (deterministic
// plan selection, required for bitwise-reproducible outputs) and cached by
// shape; execution through the new-array interface is safe from concurrent
// threads.

/// In-place d-dimensional complex DFT on an N^d torus array (row-major,
/// last index fastest).  sign = -1 forward, +1 backward (unnormalized).
void torus_dft(std::complex<double>* data, const std::vector<int>& dims, int sign);

/// Integer frequency for index i on an axis of length n: 0..n/2, then
/// negative.  The Nyquist mode (n even, i = n/2) maps to -n/2.
inline int freq(int i, int n) { return (i <= n / 2) ? i : i - n; }

/// In-place DST-I (FFTW RODFT00) along every axis of a real array with the
/// given dims.  Self-inverse up to the factor prod_k 2*(dims[k]+1).
void dst1(double* data, const std::vector<int>& dims);

/// Normalization factor for a forward+backward dst1 pair.
double dst1_norm(const std::vector<int>& dims);

} // namespace homlab::fft

#endif
