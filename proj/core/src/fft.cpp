#include "pcop/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace pcop {

namespace {

std::mutex g_plan_mutex;
std::map<std::pair<std::vector<int>, int>, fftw_plan> g_plans;

fftw_plan get_plan(const std::vector<int>& shape, int sign, fftw_complex* buf) {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto key = std::make_pair(shape, sign);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;
    fftw_plan plan = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), buf, buf, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fftw plan creation failed");
    g_plans.emplace(key, plan);
    return plan;
}

std::int64_t shape_size(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int s : shape) n *= s;
    return n;
}

}  // namespace

FftEngine& FftEngine::instance() {
    static FftEngine engine;
    return engine;
}

void FftEngine::execute(std::vector<std::complex<double>>& data, const std::vector<int>& shape,
                        int sign) {
    if (static_cast<std::int64_t>(data.size()) != shape_size(shape))
        throw std::invalid_argument("FftEngine: data size does not match shape");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan = get_plan(shape, sign, buf);
    fftw_execute_dft(plan, buf, buf);
}

void FftEngine::forward(std::vector<std::complex<double>>& data, const std::vector<int>& shape) {
    execute(data, shape, FFTW_FORWARD);
}

void FftEngine::inverse(std::vector<std::complex<double>>& data, const std::vector<int>& shape) {
    execute(data, shape, FFTW_BACKWARD);
}

int FftEngine::next_pow2(std::int64_t n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<int> conv_padded_shape(const IndexBox& a, const IndexBox& b) {
    std::vector<int> shape(static_cast<std::size_t>(a.dim()));
    for (int i = 0; i < a.dim(); ++i)
        shape[static_cast<std::size_t>(i)] =
            FftEngine::next_pow2(a.extent(i) + b.extent(i) + 1);
    return shape;
}

std::vector<std::complex<double>> embed_padded(const GridFunction& f,
                                               const std::vector<int>& shape) {
    const int d = f.dim();
    std::vector<std::int64_t> strides(static_cast<std::size_t>(d), 1);
    for (int i = d - 2; i >= 0; --i)
        strides[static_cast<std::size_t>(i)] =
            strides[static_cast<std::size_t>(i + 1)] * shape[static_cast<std::size_t>(i + 1)];

    std::vector<std::complex<double>> out(static_cast<std::size_t>(shape_size(shape)));
    const double* src = f.data();
    const std::int64_t run = f.box().extent(d - 1) + 1;

    Point p(static_cast<std::size_t>(d), 0);  // index relative to f's box
    std::int64_t src_idx = 0;
    while (true) {
        std::int64_t dst_idx = 0;
        for (int i = 0; i < d - 1; ++i) dst_idx += p[static_cast<std::size_t>(i)] * strides[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < run; ++j) out[static_cast<std::size_t>(dst_idx + j)] = src[src_idx + j];
        src_idx += run;
        int axis = d - 2;
        while (axis >= 0) {
            if (p[static_cast<std::size_t>(axis)] < f.box().extent(axis)) {
                ++p[static_cast<std::size_t>(axis)];
                break;
            }
            p[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

namespace {

GridFunction extract_result(std::vector<std::complex<double>>& buf, const std::vector<int>& shape,
                            const IndexBox& out_box) {
    const int d = out_box.dim();
    const std::int64_t total = shape_size(shape);
    const double scale = 1.0 / static_cast<double>(total);

    std::vector<std::int64_t> strides(static_cast<std::size_t>(d), 1);
    for (int i = d - 2; i >= 0; --i)
        strides[static_cast<std::size_t>(i)] =
            strides[static_cast<std::size_t>(i + 1)] * shape[static_cast<std::size_t>(i + 1)];

    GridFunction out(out_box);
    double* dst = out.data();
    const std::int64_t run = out_box.extent(d - 1) + 1;
    Point p(static_cast<std::size_t>(d), 0);
    std::int64_t dsti = 0;
    while (true) {
        std::int64_t src_idx = 0;
        for (int i = 0; i < d - 1; ++i) src_idx += p[static_cast<std::size_t>(i)] * strides[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < run; ++j)
            dst[dsti + j] = buf[static_cast<std::size_t>(src_idx + j)].real() * scale;
        dsti += run;
        int axis = d - 2;
        while (axis >= 0) {
            if (p[static_cast<std::size_t>(axis)] < out_box.extent(axis)) {
                ++p[static_cast<std::size_t>(axis)];
                break;
            }
            p[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

}  // namespace

GridFunction fft_convolve(const GridFunction& psi, const GridFunction& f) {
    if (psi.size() == 0 || f.size() == 0) throw std::invalid_argument("fft_convolve: empty input");
    const auto shape = conv_padded_shape(psi.box(), f.box());
    auto f_hat = embed_padded(f, shape);
    FftEngine::instance().forward(f_hat, shape);
    return fft_convolve_pretransformed(psi, f.box(), f_hat, shape);
}

GridFunction fft_convolve_pretransformed(const GridFunction& psi, const IndexBox& f_box,
                                         const std::vector<std::complex<double>>& f_hat,
                                         const std::vector<int>& shape) {
    auto buf = embed_padded(psi, shape);
    FftEngine::instance().forward(buf, shape);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= f_hat[i];
    FftEngine::instance().inverse(buf, shape);
    const IndexBox out_box = minkowski_sum(psi.box(), f_box);
    return extract_result(buf, shape, out_box);
}

std::vector<GridFunction> fft_convolve_batch(
    const GridFunction& psi, const IndexBox& f_box,
    const std::vector<const std::vector<std::complex<double>>*>& f_hats,
    const std::vector<int>& shape) {
    auto psi_hat = embed_padded(psi, shape);
    FftEngine::instance().forward(psi_hat, shape);
    const IndexBox out_box = minkowski_sum(psi.box(), f_box);

    std::vector<GridFunction> out;
    out.reserve(f_hats.size());
    std::vector<std::complex<double>> buf(psi_hat.size());
    for (const auto* f_hat : f_hats) {
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = psi_hat[i] * (*f_hat)[i];
        FftEngine::instance().inverse(buf, shape);
        out.push_back(extract_result(buf, shape, out_box));
    }
    return out;
}

}  // namespace pcop
