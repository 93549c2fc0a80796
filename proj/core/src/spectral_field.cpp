#include "recurflow/spectral_field.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include <fftw3.h>
#include <fmt/format.h>

#include "recurflow/errors.hpp"

namespace recurflow::nse2d {

namespace {

void check_grid(int n) {
    if (n < 4 || (n & (n - 1)) != 0) {
        throw InvalidArgument(fmt::format("grid size must be a power of two >= 4, got {}", n));
    }
}

void require_same(const SpectralField& a, const SpectralField& b) {
    if (!a.same_grid(b)) throw InvalidArgument(fmt::format("grid mismatch: {} vs {}", a.n(), b.n()));
}

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// SpectralField

SpectralField::SpectralField(int n) : n_(n) {
    check_grid(n);
    for (auto& c : data_) c.assign(modes(), Complex{});
}

Complex SpectralField::coefficient(int c, int kx_, int ky_) const {
    if (ky_ < 0) return std::conj(data_[c][slot(-kx_, -ky_)]);
    return data_[c][slot(kx_, ky_)];
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    require_same(*this, other);
    for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < data_[c].size(); ++i) data_[c][i] += other.data_[c][i];
    }
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    require_same(*this, other);
    for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < data_[c].size(); ++i) data_[c][i] -= other.data_[c][i];
    }
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (auto& comp : data_) {
        for (auto& v : comp) v *= s;
    }
    return *this;
}

void SpectralField::add_scaled(const SpectralField& other, double s) {
    require_same(*this, other);
    for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < data_[c].size(); ++i) data_[c][i] += s * other.data_[c][i];
    }
}

void SpectralField::set_zero() {
    for (auto& comp : data_) std::fill(comp.begin(), comp.end(), Complex{});
}

void SpectralField::enforce_hermitian() {
    const int h = n_ / 2;
    for (auto& comp : data_) {
        for (int ix = 1; ix < h; ++ix) {
            Complex& a = comp[index(ix, 0)];
            Complex& b = comp[index(n_ - ix, 0)];
            const Complex avg = 0.5 * (a + std::conj(b));
            a = avg;
            b = std::conj(avg);
        }
        comp[index(0, 0)] = Complex{};
        for (int ix = 0; ix < n_; ++ix) comp[index(ix, h)] = Complex{};
        for (int iy = 0; iy <= h; ++iy) comp[index(h, iy)] = Complex{};
    }
}

double SpectralField::divergence_residual() const {
    double worst = 0.0;
    double scale = 0.0;
    for (int ix = 0; ix < n_; ++ix) {
        for (int iy = 0; iy < half(); ++iy) {
            if (ix == 0 && iy == 0) continue;
            const auto i = index(ix, iy);
            const Complex u = data_[0][i];
            const Complex v = data_[1][i];
            scale = std::max(scale, std::sqrt(std::norm(u) + std::norm(v)));
            const double k = std::hypot(double(kx(ix)), double(ky(iy)));
            worst = std::max(worst, std::abs(double(kx(ix)) * u + double(ky(iy)) * v) / k);
        }
    }
    return scale == 0.0 ? 0.0 : worst / scale;
}

double SpectralField::hermitian_residual() const {
    double worst = 0.0;
    double scale = 0.0;
    for (const auto& comp : data_) {
        for (const auto& v : comp) scale = std::max(scale, std::abs(v));
        for (int ix = 1; ix < n_; ++ix) {
            worst = std::max(worst, std::abs(comp[index(ix, 0)] - std::conj(comp[index(n_ - ix, 0)])));
        }
        worst = std::max(worst, std::abs(comp[index(0, 0)].imag()));
    }
    return scale == 0.0 ? 0.0 : worst / scale;
}

double SpectralField::mean_magnitude() const {
    return std::hypot(std::abs(data_[0][0]), std::abs(data_[1][0]));
}

bool SpectralField::all_finite() const {
    for (const auto& comp : data_) {
        for (const auto& v : comp) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        }
    }
    return true;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

double inner(const SpectralField& u, const SpectralField& v) {
    require_same(u, v);
    double acc = 0.0;
    for (int c = 0; c < 2; ++c) {
        const auto a = u.component(c);
        const auto b = v.component(c);
        for (int ix = 0; ix < u.n(); ++ix) {
            for (int iy = 0; iy < u.half(); ++iy) {
                const auto i = u.index(ix, iy);
                acc += u.weight(iy) * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
            }
        }
    }
    return acc;
}

double h_norm(const SpectralField& u) { return std::sqrt(inner(u, u)); }

double h_distance(const SpectralField& u, const SpectralField& v) {
    require_same(u, v);
    double acc = 0.0;
    for (int c = 0; c < 2; ++c) {
        const auto a = u.component(c);
        const auto b = v.component(c);
        for (int ix = 0; ix < u.n(); ++ix) {
            for (int iy = 0; iy < u.half(); ++iy) {
                const auto i = u.index(ix, iy);
                acc += u.weight(iy) * std::norm(a[i] - b[i]);
            }
        }
    }
    return std::sqrt(acc);
}

double energy(const SpectralField& u) { return 0.5 * inner(u, u); }

double enstrophy(const SpectralField& u) {
    double acc = 0.0;
    for (int c = 0; c < 2; ++c) {
        const auto a = u.component(c);
        for (int ix = 0; ix < u.n(); ++ix) {
            const double kx = u.kx(ix);
            for (int iy = 0; iy < u.half(); ++iy) {
                const double ky = u.ky(iy);
                acc += u.weight(iy) * (kx * kx + ky * ky) * std::norm(a[u.index(ix, iy)]);
            }
        }
    }
    return 0.5 * acc;
}

SpectralField leray_project(SpectralField u) {
    auto a = u.component(0);
    auto b = u.component(1);
    for (int ix = 0; ix < u.n(); ++ix) {
        const double kx = u.kx(ix);
        for (int iy = 0; iy < u.half(); ++iy) {
            const double ky = u.ky(iy);
            const auto i = u.index(ix, iy);
            const double k2 = kx * kx + ky * ky;
            if (k2 == 0.0) continue;
            const Complex kdot = (kx * a[i] + ky * b[i]) / k2;
            a[i] -= kx * kdot;
            b[i] -= ky * kdot;
        }
    }
    u.enforce_hermitian();
    return u;
}

SpectralField stokes_apply(const SpectralField& u, double nu) {
    SpectralField out(u);
    for (int c = 0; c < 2; ++c) {
        auto a = out.component(c);
        for (int ix = 0; ix < u.n(); ++ix) {
            const double kx = u.kx(ix);
            for (int iy = 0; iy < u.half(); ++iy) {
                const double ky = u.ky(iy);
                a[u.index(ix, iy)] *= nu * (kx * kx + ky * ky);
            }
        }
    }
    return out;
}

void dealias_two_thirds(SpectralField& u) {
    const int cut = u.n() / 3;
    for (int c = 0; c < 2; ++c) {
        auto a = u.component(c);
        for (int ix = 0; ix < u.n(); ++ix) {
            for (int iy = 0; iy < u.half(); ++iy) {
                if (std::max(std::abs(u.kx(ix)), u.ky(iy)) > cut) a[u.index(ix, iy)] = Complex{};
            }
        }
    }
}

// ---------------------------------------------------------------------------
// BilinearEvaluator

struct BilinearEvaluator::Impl {
    int n;
    bool dealias;
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    // physical scratch: u1, u2, and one gradient at a time
    std::vector<double> u1, u2, grad, acc0, acc1;

    Impl(int n_, bool dealias_) : n(n_), dealias(dealias_) {
        const auto nr = static_cast<std::size_t>(n) * n;
        const auto nc = static_cast<std::size_t>(n) * (n / 2 + 1);
        real = fftw_alloc_real(nr);
        spec = fftw_alloc_complex(nc);
        {
            std::lock_guard lock(planner_mutex());
            forward = fftw_plan_dft_r2c_2d(n, n, real, spec, FFTW_ESTIMATE);
            backward = fftw_plan_dft_c2r_2d(n, n, spec, real, FFTW_ESTIMATE);
        }
        if (!real || !spec || !forward || !backward) throw Error("FFTW allocation or planning failed");
        u1.resize(nr);
        u2.resize(nr);
        grad.resize(nr);
        acc0.resize(nr);
        acc1.resize(nr);
    }

    ~Impl() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        fftw_free(real);
        fftw_free(spec);
    }

    void inverse(std::span<const Complex> coeffs, std::vector<double>& out, int dx = 0, int dy = 0) {
        const int h = n / 2 + 1;
        for (int ix = 0; ix < n; ++ix) {
            const double kx = ix < n / 2 ? ix : ix - n;
            for (int iy = 0; iy < h; ++iy) {
                const auto i = static_cast<std::size_t>(ix) * h + iy;
                Complex v = coeffs[i];
                if (ix == n / 2 || iy == n / 2) v = Complex{};
                if (dx) v *= Complex(0.0, kx);
                if (dy) v *= Complex(0.0, double(iy));
                spec[i][0] = v.real();
                spec[i][1] = v.imag();
            }
        }
        fftw_execute(backward);
        std::copy(real, real + out.size(), out.begin());
    }

    void forward_transform(const std::vector<double>& in, std::span<Complex> coeffs) {
        std::copy(in.begin(), in.end(), real);
        fftw_execute(forward);
        const double scale = 1.0 / (static_cast<double>(n) * n);
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = Complex(spec[i][0], spec[i][1]) * scale;
    }
};

BilinearEvaluator::BilinearEvaluator(int n, bool dealias) {
    check_grid(n);
    impl_ = std::make_unique<Impl>(n, dealias);
}

BilinearEvaluator::~BilinearEvaluator() = default;
BilinearEvaluator::BilinearEvaluator(BilinearEvaluator&&) noexcept = default;
BilinearEvaluator& BilinearEvaluator::operator=(BilinearEvaluator&&) noexcept = default;

int BilinearEvaluator::n() const { return impl_->n; }
bool BilinearEvaluator::dealias() const { return impl_->dealias; }

SpectralField BilinearEvaluator::operator()(const SpectralField& u, const SpectralField& v) {
    SpectralField out(u.n());
    evaluate(u, v, out);
    return out;
}

void BilinearEvaluator::evaluate(const SpectralField& u, const SpectralField& v, SpectralField& out) {
    auto& m = *impl_;
    if (u.n() != m.n || v.n() != m.n || out.n() != m.n) {
        throw InvalidArgument(fmt::format("bilinear_term: grid mismatch (evaluator {}, u {}, v {})", m.n, u.n(), v.n()));
    }
    m.inverse(u.component(0), m.u1);
    m.inverse(u.component(1), m.u2);
    for (int c = 0; c < 2; ++c) {
        auto& acc = c == 0 ? m.acc0 : m.acc1;
        m.inverse(v.component(c), m.grad, 1, 0);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = m.u1[i] * m.grad[i];
        m.inverse(v.component(c), m.grad, 0, 1);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m.u2[i] * m.grad[i];
        m.forward_transform(acc, out.component(c));
    }
    if (m.dealias) dealias_two_thirds(out);
    out = leray_project(std::move(out));
}

std::vector<double> BilinearEvaluator::to_physical(std::span<const Complex> coeffs) {
    std::vector<double> out(static_cast<std::size_t>(impl_->n) * impl_->n);
    impl_->inverse(coeffs, out);
    return out;
}

void BilinearEvaluator::to_spectral(std::span<const double> values, std::span<Complex> coeffs) {
    std::vector<double> in(values.begin(), values.end());
    impl_->forward_transform(in, coeffs);
}

SpectralField bilinear_term(const SpectralField& u, const SpectralField& v, bool dealias) {
    if (!u.same_grid(v)) throw InvalidArgument(fmt::format("bilinear_term: grid mismatch ({} vs {})", u.n(), v.n()));
    BilinearEvaluator eval(u.n(), dealias);
    return eval(u, v);
}

// ---------------------------------------------------------------------------
// Sample fields

SpectralField kolmogorov_mode(int n, double amplitude) {
    SpectralField u(n);
    // a sin y = (a / 2i) e^{iy} + c.c.
    u.at(0, 0, 1) = Complex(0.0, -0.5 * amplitude);
    return u;
}

double kolmogorov_amplitude(const SpectralField& u) { return -2.0 * u.at(0, 0, 1).imag(); }

SpectralField random_field(int n, std::uint64_t seed, int kmax, double scale) {
    SpectralField u(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    kmax = std::min(kmax, n / 2 - 1);
    for (int c = 0; c < 2; ++c) {
        for (int ix = 0; ix < n; ++ix) {
            for (int iy = 0; iy < u.half(); ++iy) {
                const int kx = u.kx(ix);
                const int ky = u.ky(iy);
                const double re = normal(rng);
                const double im = normal(rng);
                if (std::max(std::abs(kx), ky) > kmax || (kx == 0 && ky == 0)) continue;
                const double k = std::hypot(double(kx), double(ky));
                u.at(c, ix, iy) = scale * Complex(re, im) / (1.0 + k * k);
            }
        }
    }
    return leray_project(std::move(u));
}

}  // namespace recurflow::nse2d
