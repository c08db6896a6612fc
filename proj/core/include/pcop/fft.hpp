#ifndef PCOP_FFT_HPP
#define PCOP_FFT_HPP

#include <complex>
#include <vector>

#include "pcop/grid_function.hpp"

namespace pcop {

/// Multi-dimensional complex DFT with a process-wide plan cache. Transform
/// shapes are powers of two per axis. Safe for concurrent callers: plan
/// creation is serialized, execution uses the thread-safe new-array
/// interface.
class FftEngine {
  public:
    static FftEngine& instance();

    /// In-place forward (sign -1) transform of row-major data (last axis
    /// fastest).
    void forward(std::vector<std::complex<double>>& data, const std::vector<int>& shape);
    /// In-place unnormalized inverse (sign +1) transform.
    void inverse(std::vector<std::complex<double>>& data, const std::vector<int>& shape);

    static int next_pow2(std::int64_t n);

  private:
    FftEngine() = default;
    void execute(std::vector<std::complex<double>>& data, const std::vector<int>& shape, int sign);
};

/// Zero-padded shape used for the full linear convolution of two boxes:
/// next power of two >= (extent_a + extent_b + 1) per axis.
std::vector<int> conv_padded_shape(const IndexBox& a, const IndexBox& b);

/// Embeds f at the low corner of a padded complex buffer of the given shape.
std::vector<std::complex<double>> embed_padded(const GridFunction& f,
                                               const std::vector<int>& shape);

/// Full linear convolution (psi * f)[y] = sum_x f[x] psi[y-x], computed with
/// zero-padded FFTs. Output box: [psi.lo+f.lo, psi.hi+f.hi].
GridFunction fft_convolve(const GridFunction& psi, const GridFunction& f);

/// As fft_convolve, but the second factor is supplied already transformed on
/// the padded shape (which must equal conv_padded_shape(psi, f_box)).
GridFunction fft_convolve_pretransformed(const GridFunction& psi, const IndexBox& f_box,
                                         const std::vector<std::complex<double>>& f_hat,
                                         const std::vector<int>& shape);

/// Convolves one kernel against several pre-transformed factors, reusing the
/// kernel transform.
std::vector<GridFunction> fft_convolve_batch(
    const GridFunction& psi, const IndexBox& f_box,
    const std::vector<const std::vector<std::complex<double>>*>& f_hats,
    const std::vector<int>& shape);

}  // namespace pcop

#endif
