#pragma once

// Divergence-free velocity fields on the 2pi-periodic torus in truncated
// Fourier form, and the operators of the projected equation
//   u' + A u + B(u, u) = F(t),  A = -nu P Lap,  B(u, v) = P (u . grad) v.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace recurflow::nse2d {

using Complex = std::complex<double>;

/// Two velocity components in half-spectrum (real-to-complex) layout.
///
/// Coefficients are normalized so that u(x) = sum_k u_hat(k) e^{i k.x}; the
/// stored index (ix, iy) with ix in [0, n) and iy in [0, n/2] stands for
/// kx = ix < n/2 ? ix : ix - n and ky = iy. Modes with ky < 0 are implied by
/// Hermitian symmetry. Nyquist modes (kx = -n/2 or ky = n/2) are kept at zero.
class SpectralField {
public:
    explicit SpectralField(int n);

    int n() const { return n_; }
    int half() const { return n_ / 2 + 1; }
    std::size_t modes() const { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(half()); }

    int kx(int ix) const { return ix < n_ / 2 ? ix : ix - n_; }
    int ky(int iy) const { return iy; }
    std::size_t index(int ix, int iy) const {
        return static_cast<std::size_t>(ix) * static_cast<std::size_t>(half()) + static_cast<std::size_t>(iy);
    }
    /// Storage slot of wavevector (kx, ky) with ky >= 0 and |kx| < n/2.
    std::size_t slot(int kx, int ky) const { return index(kx >= 0 ? kx : kx + n_, ky); }
    /// 1 for the ky = 0 column, 2 for the rest (their conjugate twins are implicit).
    double weight(int iy) const { return iy == 0 ? 1.0 : 2.0; }
    bool is_nyquist(int ix, int iy) const { return ix == n_ / 2 || iy == n_ / 2; }

    std::span<Complex> component(int c) { return {data_[c].data(), data_[c].size()}; }
    std::span<const Complex> component(int c) const { return {data_[c].data(), data_[c].size()}; }
    Complex& at(int c, int ix, int iy) { return data_[c][index(ix, iy)]; }
    const Complex& at(int c, int ix, int iy) const { return data_[c][index(ix, iy)]; }

    /// Value at wavevector (kx, ky) of either sign, via Hermitian symmetry.
    Complex coefficient(int c, int kx, int ky) const;

    bool same_grid(const SpectralField& other) const { return n_ == other.n_; }

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s);
    /// this += s * other
    void add_scaled(const SpectralField& other, double s);
    void set_zero();

    /// Makes the ky = 0 column exactly Hermitian and zeroes Nyquist modes and the mean.
    void enforce_hermitian();

    /// Max over k != 0 of |k . u_hat(k)| / |k|, relative to the field's max modulus.
    double divergence_residual() const;
    /// Max |u_hat(k) - conj(u_hat(-k))| over the ky = 0 column, relative to the field's max modulus.
    double hermitian_residual() const;
    double mean_magnitude() const;
    bool all_finite() const;

    bool operator==(const SpectralField& other) const = default;

private:
    int n_;
    std::vector<Complex> data_[2];
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

/// H inner product (2 pi)^-2 integral u . v, via Parseval.
double inner(const SpectralField& u, const SpectralField& v);
double h_norm(const SpectralField& u);
double h_distance(const SpectralField& u, const SpectralField& v);
/// 1/2 |u|_H^2.
double energy(const SpectralField& u);
/// 1/2 |grad u|_H^2.
double enstrophy(const SpectralField& u);

/// Orthogonal projection onto divergence-free, zero-mean fields.
SpectralField leray_project(SpectralField raw);

/// A u = nu |k|^2 u_hat per mode.
SpectralField stokes_apply(const SpectralField& u, double nu);

/// Zeroes every mode with max(|kx|, |ky|) > n/3.
void dealias_two_thirds(SpectralField& u);

/// Pseudo-spectral evaluation of B(u, v) = P (u . grad) v with owned FFT buffers.
///
/// Not thread-safe; give each thread its own instance.
class BilinearEvaluator {
public:
    explicit BilinearEvaluator(int n, bool dealias = true);
    ~BilinearEvaluator();
    BilinearEvaluator(const BilinearEvaluator&) = delete;
    BilinearEvaluator& operator=(const BilinearEvaluator&) = delete;
    BilinearEvaluator(BilinearEvaluator&&) noexcept;
    BilinearEvaluator& operator=(BilinearEvaluator&&) noexcept;

    int n() const;
    bool dealias() const;

    SpectralField operator()(const SpectralField& u, const SpectralField& v);
    void evaluate(const SpectralField& u, const SpectralField& v, SpectralField& out);

    /// Physical-space samples of one spectral component (n x n, x-major).
    std::vector<double> to_physical(std::span<const Complex> coeffs);
    /// Inverse of to_physical, normalized so that coefficients round-trip.
    void to_spectral(std::span<const double> values, std::span<Complex> coeffs);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper that builds a temporary evaluator.
SpectralField bilinear_term(const SpectralField& u, const SpectralField& v, bool dealias = true);

/// (a sin y, 0): an exact steady state of the Euler nonlinearity on the torus.
SpectralField kolmogorov_mode(int n, double amplitude);
/// Reads back the a of kolmogorov_mode.
double kolmogorov_amplitude(const SpectralField& u);

/// Random divergence-free, Hermitian, zero-mean field with modes max(|kx|,|ky|) <= kmax.
/// Deterministic for a given seed on a given standard library.
SpectralField random_field(int n, std::uint64_t seed, int kmax, double scale = 1.0);

}  // namespace recurflow::nse2d
