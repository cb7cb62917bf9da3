#pragma once
// Near-field analyses: analog-beamforming SNR and its closed forms, antenna
// sweeps, hybrid SDMA sum-rate, and continuous-aperture (CAP) SINR.

#include "malab/beamforming.hpp"
#include "malab/channels.hpp"

namespace malab {

struct LinkBudget {
    double power = 1.0;
    double beta_ref = 1.0;
    double ref_range = 1.0;
    double noise = 1.0;

    double scale() const { return power * beta_ref * ref_range * ref_range / noise; }
};

// User on the array normal (θ = π/2):
// γ = p β r_r² / (N σ²) |Σ_i 1/r_i|², r_i = sqrt(r² + (i d)²).
inline double analog_snr_direct(const ArrayGeometry& g, double r, LinkBudget lb = {}) {
    require(r > 0.0, "analog_snr_direct: range must be > 0");
    long double s = 0.0L;
    const double d = g.spacing();
    for (int m = 0; m < g.size(); ++m) {
        const double x = g.offset(m) * d;
        s += 1.0L / std::sqrt(static_cast<long double>(r) * r + static_cast<long double>(x) * x);
    }
    const double sum = static_cast<double>(s);
    return lb.scale() / g.size() * sum * sum;
}

// Same quantity for an arbitrary direction, exact element distances.
inline double analog_snr_direct(const ArrayGeometry& g, Position pos, LinkBudget lb = {}) {
    long double s = 0.0L;
    for (int m = 0; m < g.size(); ++m) s += 1.0L / element_distance(g, pos, m);
    const double sum = static_cast<double>(s);
    return lb.scale() / g.size() * sum * sum;
}

enum class ClosedFormVariant { printed, squared };

inline const char* to_string(ClosedFormVariant v) {
    return v == ClosedFormVariant::printed ? "printed" : "squared";
}

// printed: (p β r_r² / (N σ² d²)) 2 asinh(Ñd/r)
// squared: (p β r_r² / (N σ² d²)) (2 asinh(Ñd/r))²
inline double analog_snr_closed(const ArrayGeometry& g, double r, ClosedFormVariant v, LinkBudget lb = {}) {
    require(r > 0.0, "analog_snr_closed: range must be > 0");
    const double d = g.spacing();
    const double t = 2.0 * std::asinh(g.half() * d / r);
    const double pre = lb.scale() / (g.size() * d * d);
    return v == ClosedFormVariant::printed ? pre * t : pre * t * t;
}

// Antennas needed to keep a user at range r outside the reactive region.
inline double n_rad(double r, double spacing, double wavelength) {
    return std::cbrt(wavelength) / spacing * std::pow(r / 0.62, 2.0 / 3.0);
}

inline double asinh_ratio(double x) { return x == 0.0 ? 1.0 : std::asinh(x) / x; }

inline constexpr double quoted_x_star = 1.864;
inline double quoted_n_star(double r, double spacing) { return 2.0 * quoted_x_star * r / spacing; }

// Maximizer of asinh(x)² / x, the shape of the squared closed form in
// x = Ñd/r: root of 2x = sqrt(1 + x²) asinh(x).
inline double squared_form_x_star() {
    auto f = [](double x) { return 2.0 * x - std::sqrt(1.0 + x * x) * std::asinh(x); };
    double lo = 1.0, hi = 10.0;  // f(1) > 0 > f(10)
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct SnrSweep {
    std::vector<int> antennas;  // odd N = 1, 3, ..., N_max
    std::vector<double> snr;
    int argmax = 1;
    double snr_max = 0.0;
    double n_rad = 0.0;
    double quoted_n_star = 0.0;
    double squared_form_n_star = 0.0;
    int direction_changes = 0;  // sign changes of successive differences
};

// Sweeps every odd N up to n_max with an O(N_max) running sum.
inline SnrSweep snr_sweep_extrema(double spacing, double wavelength, double r, int n_max, LinkBudget lb = {}) {
    require(n_max >= 3, "snr_sweep_extrema: N_max must be >= 3");
    require(r > 0.0 && spacing > 0.0 && wavelength > 0.0, "snr_sweep_extrema: bad geometry");
    SnrSweep out;
    out.n_rad = n_rad(r, spacing, wavelength);
    out.quoted_n_star = quoted_n_star(r, spacing);
    out.squared_form_n_star = 2.0 * squared_form_x_star() * r / spacing;
    long double s = 1.0L / r;
    for (int half = 0; 2 * half + 1 <= n_max; ++half) {
        if (half > 0) {
            const long double x = static_cast<long double>(half) * spacing;
            s += 2.0L / std::sqrt(static_cast<long double>(r) * r + x * x);
        }
        const int n = 2 * half + 1;
        const double sum = static_cast<double>(s);
        out.antennas.push_back(n);
        out.snr.push_back(lb.scale() / n * sum * sum);
    }
    const auto it = std::max_element(out.snr.begin(), out.snr.end());
    out.argmax = out.antennas[it - out.snr.begin()];
    out.snr_max = *it;
    int prev_sign = 0;
    for (std::size_t i = 1; i < out.snr.size(); ++i) {
        const double diff = out.snr[i] - out.snr[i - 1];
        const int sign = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
        if (sign != 0 && prev_sign != 0 && sign != prev_sign) ++out.direction_changes;
        if (sign != 0) prev_sign = sign;
    }
    return out;
}

// --- hybrid SDMA ------------------------------------------------------------

enum class HbChannel { nearfield_exact, farfield };

struct HbSdmaResult {
    HybridResult link;
    HybridConfig config;
};

// One RF chain per user: analog column k co-phased with h_k, digital MRT on
// the effective channel FᴴH, every stream scaled to p/K radiated power.
inline HybridConfig hb_analog_mrt(const cmat& h, double power) {
    const int n = static_cast<int>(h.rows());
    const int k_users = static_cast<int>(h.cols());
    const double mod = 1.0 / std::sqrt(static_cast<double>(n) * k_users);
    cmat f(n, k_users);
    for (int k = 0; k < k_users; ++k)
        for (int i = 0; i < n; ++i) f(i, k) = std::polar(mod, std::arg(h(i, k)));
    cmat w = f.adjoint() * h;
    for (int k = 0; k < k_users; ++k) {
        const double radiated = (f * w.col(k)).squaredNorm();
        require(radiated > 0.0, "hb_analog_mrt: user with zero effective gain");
        w.col(k) *= std::sqrt(power / k_users / radiated);
    }
    return {f, w, power};
}

inline HbSdmaResult nearfield_hb_sdma(const ArrayGeometry& g, const std::vector<Position>& users,
                                      const std::vector<double>& noise, HbChannel model, LinkBudget lb = {},
                                      NearfieldOptions opt = {}, int n_rf = -1) {
    const int k_users = static_cast<int>(users.size());
    require(k_users >= 1, "nearfield_hb_sdma: no users");
    if (n_rf < 0) n_rf = k_users;
    require(n_rf == k_users, "nearfield_hb_sdma: requires N_RF = K");
    require(static_cast<int>(noise.size()) == k_users, "nearfield_hb_sdma: one noise power per user");
    const PathLoss pl{lb.beta_ref, lb.ref_range};
    cmat h(g.size(), k_users);
    for (int k = 0; k < k_users; ++k)
        h.col(k) = model == HbChannel::nearfield_exact
                       ? nearfield_spd(g, users[k], pl, NearfieldMode::exact, opt).entries
                       : farfield_los(g, users[k], pl).entries;
    auto cfg = hb_analog_mrt(h, lb.power);
    rvec nz(k_users);
    for (int k = 0; k < k_users; ++k) nz(k) = noise[k];
    auto link = hybrid_sinr(cfg, h, nz);
    return {std::move(link), std::move(cfg)};
}

// --- continuous aperture ----------------------------------------------------

struct Quadrature {
    cd value;
    int panels = 0;
    double rel_change = 0.0;  // Richardson estimate at the final resolution
};

namespace detail {

inline cd pairwise_sum(const std::vector<cd>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        cd s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

template <class F>
cd simpson(const F& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    std::vector<cd> terms(panels + 1);
    for (int i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        terms[i] = w * f(a + i * h);
    }
    return pairwise_sum(terms, 0, terms.size()) * (h / 3.0);
}

}  // namespace detail

// Composite Simpson, doubling the panel count until the Richardson estimate
// of the relative error falls below rel_tol.
template <class F>
Quadrature integrate(const F& f, double a, double b, int min_panels, double rel_tol = 1e-6, int max_panels = 1 << 24) {
    int n = std::max(64, min_panels + (min_panels % 2));
    cd prev = detail::simpson(f, a, b, n);
    while (true) {
        const int n2 = 2 * n;
        const cd cur = detail::simpson(f, a, b, n2);
        const double scale = std::max(std::abs(cur), 1e-300);
        const double change = std::abs(cur - prev) / 15.0 / scale;
        if (change < rel_tol || std::abs(cur - prev) == 0.0) return {cur, n2, change};
        if (n2 >= max_panels) throw NumericalError("integrate: no convergence at " + std::to_string(n2) + " panels");
        prev = cur;
        n = n2;
    }
}

struct CapAperture {
    double length = 1.0;   // meters, centred on the origin along the array axis
    double wavelength = 0.01;
    int min_panels = 64;   // raised to at least 8 panels per wavelength

    void validate() const {
        require(length > 0.0, "CapAperture: length must be > 0");
        require(wavelength > 0.0, "CapAperture: wavelength must be > 0");
        require(min_panels >= 64, "CapAperture: resolution must be >= 64 panels");
    }

    int panels() const {
        const int by_lambda = static_cast<int>(std::ceil(length / (wavelength / 8.0)));
        return std::max(min_panels, by_lambda);
    }

    template <class F>
    Quadrature integrate(const F& f, double rel_tol = 1e-6) const {
        return malab::integrate(f, -0.5 * length, 0.5 * length, panels(), rel_tol);
    }
};

inline double green_energy(const CapAperture& ap, Position pos, GreenMode mode = GreenMode::exact) {
    ap.validate();
    return ap.integrate([&](double x) { return cd(std::norm(cap_green(x, pos, ap.wavelength, mode))); }).value.real();
}

// j(x) = scale · G*(x, r_k)
struct CapCurrent {
    Position target;
    double scale = 0.0;
    double wavelength = 0.01;
    GreenMode mode = GreenMode::exact;

    cd operator()(double x) const { return scale * std::conj(cap_green(x, target, wavelength, mode)); }
};

inline CapCurrent cap_matched_current(const CapAperture& ap, Position pos, double power_share,
                                      GreenMode mode = GreenMode::exact) {
    require(power_share >= 0.0, "cap_matched_current: power must be >= 0");
    const double e = green_energy(ap, pos, mode);
    return {pos, std::sqrt(power_share / e), ap.wavelength, mode};
}

struct CapSinr {
    rvec sinr;
    rmat coupling;  // |∫ G(a, r_k) j_k'(a) da|²
    int panels = 0;
    double max_rel_change = 0.0;
};

inline CapSinr cap_sinr(const CapAperture& ap, const std::vector<CapCurrent>& currents,
                        const std::vector<Position>& users, const std::vector<double>& noise, double budget = -1.0) {
    ap.validate();
    const int k_users = static_cast<int>(users.size());
    require(static_cast<int>(currents.size()) == k_users && static_cast<int>(noise.size()) == k_users,
            "cap_sinr: one current and noise power per user");
    if (budget >= 0.0) {
        double used = 0.0;
        for (const auto& j : currents) used += ap.integrate([&](double x) { return cd(std::norm(j(x))); }).value.real();
        require(used <= budget + 1e-6 * std::max(1.0, budget), "cap_sinr: currents exceed the power budget");
    }
    CapSinr out{rvec(k_users), rmat(k_users, k_users), 0, 0.0};
    for (int k = 0; k < k_users; ++k)
        for (int j = 0; j < k_users; ++j) {
            const auto q = ap.integrate(
                [&](double x) { return cap_green(x, users[k], ap.wavelength, GreenMode::exact) * currents[j](x); });
            out.coupling(k, j) = std::norm(q.value);
            out.panels = std::max(out.panels, q.panels);
            out.max_rel_change = std::max(out.max_rel_change, q.rel_change);
        }
    for (int k = 0; k < k_users; ++k) {
        double interf = noise[k];
        for (int j = 0; j < k_users; ++j)
            if (j != k) interf += out.coupling(k, j);
        out.sinr(k) = out.coupling(k, k) / interf;
    }
    return out;
}

}  // namespace malab
