#pragma once
// Channel realizations for the far-field, scattering, sparse mmWave and
// near-field models, plus normalized correlations.

#include "malab/core.hpp"
#include "malab/erf.hpp"

#include <optional>

namespace malab {

enum class ChannelModel { farfield_los, isotropic, rician_sparse, nearfield_exact, nearfield_approx };

inline const char* to_string(ChannelModel m) {
    switch (m) {
        case ChannelModel::farfield_los: return "farfield-los";
        case ChannelModel::isotropic: return "isotropic";
        case ChannelModel::rician_sparse: return "rician-sparse";
        case ChannelModel::nearfield_exact: return "nearfield-exact";
        case ChannelModel::nearfield_approx: return "nearfield-approx";
    }
    return "?";
}

struct PathLoss {
    double beta_ref = 1.0;   // gain at the reference distance
    double ref_range = 1.0;  // meters

    double amplitude(double r) const { return std::sqrt(beta_ref) * ref_range / r; }
};

struct ChannelVector {
    cvec entries;
    ChannelModel model{};
    Position position;
    PathLoss pathloss;
    // set when the position falls outside the regime the model assumes
    bool regime_warning = false;
};

inline ChannelVector farfield_los(const ArrayGeometry& g, Position pos, PathLoss pl = {}) {
    require(pos.range > 0.0, "farfield_los: range must be > 0");
    ChannelVector h{pl.amplitude(pos.range) * steering_vector(g, pos.theta), ChannelModel::farfield_los,
                    pos, pl, false};
    h.regime_warning = pos.range <= field_boundaries(g).rayleigh;
    return h;
}

inline ChannelVector isotropic(const ArrayGeometry& g, Position pos, PathLoss pl, std::uint64_t seed,
                               std::uint64_t user = 0) {
    require(pos.range > 0.0, "isotropic: range must be > 0");
    Rng rng(seed, user);
    return {pl.amplitude(pos.range) * rng.cnormal_vec(g.size()), ChannelModel::isotropic, pos, pl, false};
}

struct RicianParams {
    double k_factor = 0.0;
    double los_angle = pi / 2;
    std::vector<double> nlos_angles;
    std::vector<cd> nlos_gains;

    int n_paths() const { return static_cast<int>(nlos_angles.size()); }

    // NLoS angles uniform on (-pi, pi]; gains CN(0,1) unless fixed.
    static RicianParams sample(double k_factor, int n_paths, double los_angle, Rng& rng,
                               std::optional<cd> fixed_gain = std::nullopt) {
        require(n_paths >= 1, "RicianParams: need at least one NLoS path");
        RicianParams p{k_factor, los_angle, {}, {}};
        for (int l = 0; l < n_paths; ++l) {
            p.nlos_angles.push_back(pi - 2.0 * pi * rng.uniform());
            p.nlos_gains.push_back(fixed_gain ? *fixed_gain : rng.cnormal());
        }
        return p;
    }
};

inline ChannelVector rician_sparse(const ArrayGeometry& g, Position pos, PathLoss pl, const RicianParams& p) {
    require(p.k_factor >= 0.0, "rician_sparse: K-factor must be >= 0");
    require(p.n_paths() >= 1, "rician_sparse: need at least one NLoS path");
    require(p.nlos_gains.size() == p.nlos_angles.size(), "rician_sparse: angle/gain count mismatch");
    const double k = p.k_factor;
    const double w_los = std::sqrt(k / (1.0 + k));
    const double w_nlos = std::sqrt(1.0 / ((1.0 + k) * p.n_paths()));
    cvec h = w_los * steering_vector(g, p.los_angle);
    for (int l = 0; l < p.n_paths(); ++l) h += w_nlos * p.nlos_gains[l] * steering_vector(g, p.nlos_angles[l]);
    return {pl.amplitude(pos.range) * h, ChannelModel::rician_sparse, pos, pl, false};
}

// Distance from element m to the user.
inline double element_distance(const ArrayGeometry& g, Position pos, int m) {
    const double x = g.offset(m) * g.spacing();
    const double c = pos.range * std::cos(pos.theta) - x;
    const double s = pos.range * std::sin(pos.theta);
    return std::sqrt(c * c + s * s);
}

// r - x cosθ + x² sin²θ / (2r)
inline double element_distance_quadratic(const ArrayGeometry& g, Position pos, int m) {
    const double x = g.offset(m) * g.spacing();
    const double s = std::sin(pos.theta);
    return pos.range - x * std::cos(pos.theta) + x * x * s * s / (2.0 * pos.range);
}

enum class NearfieldMode { exact, quadratic };

struct NearfieldOptions {
    // Beyond factor * aperture the per-element amplitudes are taken as
    // uniform (1/r). Zero keeps 1/r_i everywhere.
    double uniform_power_factor = 10.0;
};

inline ChannelVector nearfield_spd(const ArrayGeometry& g, Position pos, PathLoss pl, NearfieldMode mode,
                                   NearfieldOptions opt = {}) {
    require(pos.range > 0.0, "nearfield_spd: range must be > 0");
    const bool uniform = mode == NearfieldMode::quadratic ||
                         (opt.uniform_power_factor > 0.0 && pos.range >= opt.uniform_power_factor * g.aperture());
    cvec h(g.size());
    for (int m = 0; m < g.size(); ++m) {
        const double ri = mode == NearfieldMode::exact ? element_distance(g, pos, m)
                                                       : element_distance_quadratic(g, pos, m);
        const double amp = pl.amplitude(uniform ? pos.range : ri);
        h(m) = std::polar(amp, -g.wavenumber() * ri);
    }
    ChannelVector out{std::move(h),
                      mode == NearfieldMode::exact ? ChannelModel::nearfield_exact : ChannelModel::nearfield_approx,
                      pos, pl, false};
    out.regime_warning = mode == NearfieldMode::quadratic && pos.range < 10.0 * g.spacing();
    return out;
}

// Green's function between aperture point x (on the array axis) and pos.
enum class GreenMode { exact, approx };

inline cd cap_green(double x, Position pos, double wavelength, GreenMode mode = GreenMode::exact) {
    const double k = 2.0 * pi / wavelength;
    if (mode == GreenMode::exact) {
        const double c = pos.range * std::cos(pos.theta) - x;
        const double s = pos.range * std::sin(pos.theta);
        const double dist = std::sqrt(c * c + s * s);
        require(dist > 0.0, "cap_green: coincident points");
        return std::polar(1.0 / (4.0 * pi * dist), -k * dist);
    }
    require(pos.range > 0.0, "cap_green: coincident points");
    const double s = std::sin(pos.theta);
    const double phase = pos.range - x * std::cos(pos.theta) + x * x * s * s / (2.0 * pos.range);
    return std::polar(1.0 / (4.0 * pi * pos.range), -k * phase);
}

inline double correlation_rho(const cvec& h1, const cvec& h2) {
    require(h1.size() == h2.size(), "correlation_rho: length mismatch");
    require(h1.norm() > 0.0 && h2.norm() > 0.0, "correlation_rho: zero vector");
    return collinearity(h1, h2);
}

// ∫_{-1/2}^{1/2} exp(j(L x + Q x²)) dx in closed form.
inline cd chirp_integral(double lin, double quad) {
    if (quad == 0.0) {
        if (lin == 0.0) return 1.0;
        return std::sin(0.5 * lin) / (0.5 * lin);
    }
    // complete the square: Q(x + x0)² - L²/(4Q), x0 = L/(2Q)
    const double x0 = lin / (2.0 * quad);
    const cd alpha = quad > 0.0 ? std::sqrt(quad) * std::polar(1.0, -pi / 4)
                                : std::sqrt(-quad) * std::polar(1.0, pi / 4);
    // exp(jQ u²) = exp(-(alpha u)²)
    const cd diff = erf_diff(alpha * (0.5 + x0), alpha * (x0 - 0.5));
    const double shift = -lin * lin / (4.0 * quad);
    return std::polar(1.0, shift) * std::sqrt(pi) / (2.0 * alpha) * diff;
}

struct ChirpCoefficients {
    double lin;   // per-element linear phase b
    double quad;  // per-element quadratic phase a
};

// Phase of h1_iᴴ h2_i under the quadratic model is b i + a i² (i in units of d).
inline ChirpCoefficients nearfield_chirp(const ArrayGeometry& g, Position p1, Position p2) {
    const double k = g.wavenumber(), d = g.spacing();
    const double s1 = std::sin(p1.theta), s2 = std::sin(p2.theta);
    return {k * d * (std::cos(p2.theta) - std::cos(p1.theta)),
            k * d * d * (s1 * s1 / (2.0 * p1.range) - s2 * s2 / (2.0 * p2.range))};
}

// Integral approximation of the quadratic-model correlation.
inline double nearfield_rho_closed(const ArrayGeometry& g, Position p1, Position p2) {
    const auto c = nearfield_chirp(g, p1, p2);
    const double n = g.size();
    return std::min(1.0, std::abs(chirp_integral(c.lin * n, c.quad * n * n)));
}

// --- beamspace --------------------------------------------------------------

struct Beamspace {
    cmat transform;              // U, rows u(ψ_i)ᴴ/√N
    std::vector<double> grid;    // ψ_i
};

inline bool is_half_wavelength(const ArrayGeometry& g) {
    return std::abs(g.spacing() - 0.5 * g.wavelength()) <= 1e-12 * g.wavelength();
}

inline Beamspace beamspace(const ArrayGeometry& g) {
    require(is_half_wavelength(g), "beamspace: spacing must equal half a wavelength");
    const int n = g.size();
    Beamspace b{cmat(n, n), {}};
    for (int i = 1; i <= n; ++i) b.grid.push_back(static_cast<double>(2 * i - n - 1) / n);
    for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m) b.transform(i, m) = std::polar(1.0 / std::sqrt(n), -pi * g.offset(m) * b.grid[i]);
    return b;
}

// 1-based index of the grid point nearest cosθ; ties go to the lower index.
inline int dominant_beam_index(const std::vector<double>& grid, double theta) {
    const double c = std::cos(theta);
    int best = 0;
    double best_dist = std::abs(grid[0] - c);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double dist = std::abs(grid[i] - c);
        if (dist < best_dist - 1e-12) {
            best = static_cast<int>(i);
            best_dist = dist;
        }
    }
    return best + 1;
}

struct BeamspaceResult {
    cmat coefficients;                // column k = U h_k
    std::vector<int> dominant_index;  // 1-based
    std::vector<double> dominant_energy_fraction;
};

inline BeamspaceResult beamspace_transform(const ArrayGeometry& g, const std::vector<cvec>& channels,
                                           const std::vector<double>& los_angles) {
    require(channels.size() == los_angles.size(), "beamspace_transform: one LoS angle per channel");
    const auto b = beamspace(g);
    BeamspaceResult out{cmat(g.size(), static_cast<int>(channels.size())), {}, {}};
    for (std::size_t k = 0; k < channels.size(); ++k) {
        require(channels[k].size() == g.size(), "beamspace_transform: channel length mismatch");
        out.coefficients.col(k) = b.transform * channels[k];
        const int idx = dominant_beam_index(b.grid, los_angles[k]);
        out.dominant_index.push_back(idx);
        const double total = out.coefficients.col(k).squaredNorm();
        out.dominant_energy_fraction.push_back(total > 0.0 ? std::norm(out.coefficients(idx - 1, k)) / total : 0.0);
    }
    return out;
}

}  // namespace malab
