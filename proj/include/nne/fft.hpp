#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace nne {

// Thin wrapper over FFTW's 2D real transforms for N x N row-major grids.
// Plans are created once per grid size with FFTW_ESTIMATE (deterministic plan
// choice, required for the bitwise-reproducibility guarantee) and reused.
// FFTW planning is not thread-safe, so plan creation is serialized; execution
// uses the new-array interface on caller-owned buffers.
class Fft2 {
public:
    explicit Fft2(int n) : n_(n), nc_(n / 2 + 1) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        std::vector<double> r(static_cast<size_t>(n_) * n_);
        std::vector<std::complex<double>> c(static_cast<size_t>(n_) * nc_);
        fwd_ = fftw_plan_dft_r2c_2d(n_, n_, r.data(),
                                    reinterpret_cast<fftw_complex*>(c.data()), FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_2d(n_, n_, reinterpret_cast<fftw_complex*>(c.data()),
                                    r.data(), FFTW_ESTIMATE);
    }
    ~Fft2() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    int n() const { return n_; }
    int nc() const { return nc_; }
    size_t real_size() const { return static_cast<size_t>(n_) * n_; }
    size_t spec_size() const { return static_cast<size_t>(n_) * nc_; }

    // Forward transform (unnormalized). Input is preserved.
    void forward(const double* real, std::complex<double>* spec) const {
        // r2c destroys its input in some FFTW code paths; copy to scratch.
        scratch_r_.assign(real, real + real_size());
        fftw_execute_dft_r2c(fwd_, scratch_r_.data(),
                             reinterpret_cast<fftw_complex*>(spec));
    }
    // Inverse transform, normalized by 1/N^2. Input spectrum is preserved.
    void backward(const std::complex<double>* spec, double* real) const {
        scratch_c_.assign(spec, spec + spec_size());
        fftw_execute_dft_c2r(bwd_, reinterpret_cast<fftw_complex*>(scratch_c_.data()), real);
        const double scale = 1.0 / (static_cast<double>(n_) * n_);
        for (size_t i = 0; i < real_size(); ++i) real[i] *= scale;
    }

    // Signed integer mode for row index i (frequency along x1): in [-N/2, N/2).
    int mode(int i) const { return (i <= n_ / 2) ? i : i - n_; }

    static const Fft2& get(int n) {
        static std::mutex cache_mutex;
        static std::map<int, std::unique_ptr<Fft2>> cache;
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, std::make_unique<Fft2>(n)).first;
        return *it->second;
    }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }
    int n_, nc_;
    fftw_plan fwd_, bwd_;
    mutable std::vector<double> scratch_r_;
    mutable std::vector<std::complex<double>> scratch_c_;
};

} // namespace nne
