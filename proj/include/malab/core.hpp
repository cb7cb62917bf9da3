#pragma once
// Shared numeric primitives: errors, rate/unit helpers, array geometry,
// steering vectors, a counter-based RNG and a few Hermitian helpers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace malab {

using cd = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using rmat = Eigen::MatrixXd;

// rates in bits per channel use, one entry per user
using RatePoint = std::vector<double>;

struct RateRegion {
    std::vector<RatePoint> points;
};

inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 299'792'458.0;

// --- errors -----------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition violations on caller-supplied values.
struct InvalidArgument : Error {
    using Error::Error;
};

// Bad or incomplete scenario description.
struct ConfigError : Error {
    using Error::Error;
};

// Iterations that did not converge, singular systems and the like.
struct NumericalError : Error {
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

// --- scalar helpers ---------------------------------------------------------

inline double shannon_rate(double snr) {
    require(snr >= 0.0 && !std::isnan(snr), "shannon_rate: negative SNR");
    return std::log2(1.0 + snr);
}

inline double db_to_linear(double v_db) { return std::pow(10.0, v_db / 10.0); }
inline double linear_to_db(double v) { return 10.0 * std::log10(v); }
inline double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }

// --- geometry ---------------------------------------------------------------

struct Position {
    double range = 1.0;  // meters
    double theta = pi / 2;  // radians from the array axis

    static Position make(double range, double theta) {
        require(range > 0.0 && std::isfinite(range), "Position: range must be > 0");
        require(std::isfinite(theta), "Position: angle must be finite");
        return {range, theta};
    }
};

enum class Parity { odd, any };

// Uniform linear array along the x axis with its centre element at the origin.
// For odd N the element offsets are the integers -Ñ..Ñ. Even N (DFT grids and
// power-of-two sweeps) uses the centred half-integer offsets.
class ArrayGeometry {
public:
    ArrayGeometry(int n_antennas, double spacing, double wavelength, Parity parity = Parity::odd)
        : n_(n_antennas), d_(spacing), lambda_(wavelength) {
        require(n_ >= 1, "ArrayGeometry: antenna count must be positive");
        require(parity == Parity::any || n_ % 2 == 1,
                "ArrayGeometry: antenna count must be odd (N = 2*half + 1)");
        require(d_ > 0.0 && std::isfinite(d_), "ArrayGeometry: spacing must be > 0");
        require(lambda_ > 0.0 && std::isfinite(lambda_), "ArrayGeometry: wavelength must be > 0");
    }

    int size() const { return n_; }
    double spacing() const { return d_; }
    double wavelength() const { return lambda_; }
    double wavenumber() const { return 2.0 * pi / lambda_; }
    double aperture() const { return (n_ - 1) * d_; }
    int half() const { return (n_ - 1) / 2; }
    // offset of element m (0-based) in units of d
    double offset(int m) const { return m - 0.5 * (n_ - 1); }

    ArrayGeometry with_size(int n, Parity parity = Parity::odd) const {
        return ArrayGeometry(n, d_, lambda_, parity);
    }

private:
    int n_;
    double d_;
    double lambda_;
};

// Far-field response a_i = exp(+j k i d cos θ). This is the planar limit of
// exp(-j k r_i) referenced to the centre element, so near- and far-field
// models share one phase convention.
inline cvec steering_vector(const ArrayGeometry& g, double theta) {
    cvec a(g.size());
    const double c = std::cos(theta);
    for (int m = 0; m < g.size(); ++m)
        a(m) = std::polar(1.0, g.wavenumber() * g.offset(m) * g.spacing() * c);
    return a;
}

struct FieldBoundaries {
    double rayleigh;  // 2A²/λ
    double reactive;  // 0.62 sqrt(A³/λ)
};

inline FieldBoundaries field_boundaries(double aperture, double wavelength) {
    require(aperture >= 0.0 && wavelength > 0.0, "field_boundaries: bad aperture or wavelength");
    return {2.0 * aperture * aperture / wavelength,
            0.62 * std::sqrt(aperture * aperture * aperture / wavelength)};
}

inline FieldBoundaries field_boundaries(const ArrayGeometry& g) {
    return field_boundaries(g.aperture(), g.wavelength());
}

// --- RNG --------------------------------------------------------------------

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-based stream: draw n of stream s under seed k is a pure function of
// (k, s, n). Per-user channels stay reproducible whatever the iteration order.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    // uniform on (0, 1)
    double uniform() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; deliberately not std::normal_distribution, whose output is
    // implementation-defined.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform(), u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

    // CN(0, 1)
    cd cnormal() {
        const double re = normal(), im = normal();
        return {re * std::sqrt(0.5), im * std::sqrt(0.5)};
    }

    cvec cnormal_vec(int n) {
        cvec v(n);
        for (int i = 0; i < n; ++i) v(i) = cnormal();
        return v;
    }

    cmat cnormal_mat(int rows, int cols) {
        cmat m(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) m(i, j) = cnormal();
        return m;
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// --- linear algebra helpers -------------------------------------------------

inline cmat identity(int n) { return cmat::Identity(n, n); }

inline cmat hermitian_part(const cmat& m) { return 0.5 * (m + m.adjoint()); }

// log2 det of a Hermitian positive definite matrix.
inline double logdet2(const cmat& m) {
    if (m.rows() == 0) return 0.0;
    Eigen::LDLT<cmat> ldlt(hermitian_part(m));
    if (ldlt.info() != Eigen::Success) throw NumericalError("logdet2: factorization failed");
    double s = 0.0;
    const auto d = ldlt.vectorD();
    for (int i = 0; i < d.size(); ++i) {
        const double di = std::real(d(i));
        if (!(di > 0.0)) throw NumericalError("logdet2: matrix is not positive definite");
        s += std::log2(di);
    }
    return s;
}

// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
inline Eigen::SelfAdjointEigenSolver<cmat> hermitian_eig(const cmat& m) {
    Eigen::SelfAdjointEigenSolver<cmat> es(hermitian_part(m));
    if (es.info() != Eigen::Success) throw NumericalError("hermitian_eig: no convergence");
    return es;
}

// Hermitian square root of a PSD matrix (negative eigenvalues clipped).
inline cmat psd_sqrt(const cmat& m) {
    const auto es = hermitian_eig(m);
    const rvec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

struct WaterFill {
    rvec powers;
    double level = 0.0;  // water level mu; active modes satisfy p + 1/g = mu
};

// max sum log2(1 + g_i p_i) s.t. sum p_i = budget, p >= 0. Exact by sorting.
inline WaterFill water_fill(const rvec& gains, double budget) {
    require(budget >= 0.0, "water_fill: negative budget");
    const int n = static_cast<int>(gains.size());
    WaterFill out{rvec::Zero(n), 0.0};
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (gains(i) > 0.0) idx.push_back(i);
    if (idx.empty() || budget == 0.0) return out;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return gains(a) > gains(b); });
    double inv_sum = 0.0;
    int active = 0;
    double mu = 0.0;
    for (std::size_t m = 0; m < idx.size(); ++m) {
        inv_sum += 1.0 / gains(idx[m]);
        const double cand = (budget + inv_sum) / static_cast<double>(m + 1);
        if (cand > 1.0 / gains(idx[m])) {
            mu = cand;
            active = static_cast<int>(m) + 1;
        } else {
            break;
        }
    }
    for (int m = 0; m < active; ++m) out.powers(idx[m]) = std::max(0.0, mu - 1.0 / gains(idx[m]));
    out.level = mu;
    return out;
}

// |aᴴb| / (‖a‖‖b‖)
inline double collinearity(const cvec& a, const cvec& b) {
    const double na = a.norm(), nb = b.norm();
    require(na > 0.0 && nb > 0.0, "collinearity: zero vector");
    return std::min(1.0, std::abs(a.dot(b)) / (na * nb));
}

inline std::vector<double> linspace(double a, double b, int n) {
    require(n >= 1, "linspace: need at least one point");
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = a;
        return v;
    }
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    v.back() = b;
    return v;
}

}  // namespace malab
