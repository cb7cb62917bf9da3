#pragma once
// Sensing mutual information, distortion-rate bound, and the ISAC/OSAC rate
// regions for the uplink NOMA, downlink SISO-NOMA, SU-MISO and cluster-based
// MIMO-NOMA cases. Sensing noise is unit-variance per entry throughout.

#include "malab/core.hpp"
#include "malab/noma.hpp"

#include <string>

namespace malab {

struct Target {
    double angle = pi / 2;  // radians
    double variance = 1.0;  // ς² of the reflection coefficient
};

struct TargetModel {
    std::vector<Target> targets;
    ArrayGeometry tx;
    ArrayGeometry rx;
};

struct TargetResponse {
    cmat g;    // N_r x N_t
    cmat r_g;  // covariance of vec(Gᴴ), N_r N_t square
};

inline cmat kron(const cmat& a, const cmat& b) {
    cmat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// G = Σ_q α_q a_r(θ_q) b_t(θ_q)ᴴ with α_q ~ CN(0, ς_q²), one draw per
// scenario (Swerling-I).
inline TargetResponse target_response(const TargetModel& m, Rng& rng) {
    const int nt = m.tx.size(), nr = m.rx.size();
    TargetResponse out{cmat::Zero(nr, nt), cmat::Zero(nr * nt, nr * nt)};
    for (const auto& t : m.targets) {
        require(t.variance >= 0.0, "target_response: variance must be >= 0");
        const cvec a = steering_vector(m.rx, t.angle);
        const cvec b = steering_vector(m.tx, t.angle);
        const cd alpha = std::sqrt(t.variance) * rng.cnormal();
        out.g += alpha * a * b.adjoint();
        // vec(Gᴴ) contribution: conj(α) (conj(a) ⊗ b)
        cvec v(nr * nt);
        for (int i = 0; i < nr; ++i) v.segment(i * nt, nt) = std::conj(a(i)) * b;
        out.r_g += t.variance * v * v.adjoint();
    }
    return out;
}

// R = Σ_q ς_q² b_t(θ_q) b_t(θ_q)ᴴ
inline cmat transmit_correlation(const std::vector<Target>& targets, const ArrayGeometry& tx) {
    cmat r = cmat::Zero(tx.size(), tx.size());
    for (const auto& t : targets) {
        const cvec b = steering_vector(tx, t.angle);
        r += t.variance * b * b.adjoint();
    }
    return r;
}

// logdet(I + (I ⊗ Xᴴ) R_G (I ⊗ X)), X is N_t x L.
inline double sensing_mi_general(const cmat& r_g, const cmat& x) {
    const int nt = static_cast<int>(x.rows());
    require(nt > 0 && r_g.rows() % nt == 0 && r_g.rows() == r_g.cols(), "sensing_mi: dimension mismatch");
    const int nr = static_cast<int>(r_g.rows()) / nt;
    const cmat a = kron(identity(nr), x.adjoint());
    return logdet2(identity(static_cast<int>(a.rows())) + a * r_g * a.adjoint());
}

// N_r logdet(I_L + Xᴴ R X) for widely separated receive antennas.
inline double sensing_mi_separated(const cmat& r, const cmat& x, int n_r) {
    require(r.rows() == x.rows() && r.cols() == x.rows(), "sensing_mi: dimension mismatch");
    require(n_r >= 1, "sensing_mi: need at least one receive antenna");
    return n_r * logdet2(identity(static_cast<int>(x.cols())) + x.adjoint() * r * x);
}

// Same as the separated form written through the Gram matrix S = X Xᴴ.
inline double sensing_mi_gram(const cmat& r, const cmat& gram, int n_r) {
    const cmat rs = psd_sqrt(r);
    return n_r * logdet2(identity(static_cast<int>(r.rows())) + rs * gram * rs);
}

// Reverse water-filling: D_i = min(θ, ς_i²), R = Σ log2(ς_i² / D_i).
inline double gaussian_distortion_rate(const std::vector<double>& variances, double rate) {
    require(rate >= 0.0, "gaussian_distortion_rate: rate must be >= 0");
    require(!variances.empty(), "gaussian_distortion_rate: no components");
    for (double v : variances) require(v > 0.0, "gaussian_distortion_rate: variances must be > 0");
    if (variances.size() == 1) return variances[0] * std::exp2(-rate);
    auto rate_at = [&](double theta) {
        double s = 0.0;
        for (double v : variances)
            if (v > theta) s += std::log2(v / theta);
        return s;
    };
    double lo = 0.0, hi = *std::max_element(variances.begin(), variances.end());
    if (rate == 0.0) lo = hi;
    for (int i = 0; i < 200 && rate > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        (rate_at(mid) > rate ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    double d = 0.0;
    for (double v : variances) d += std::min(theta, v);
    return d;
}

// --- SR/CR regions ----------------------------------------------------------

struct SrCrPoint {
    double sr = 0.0;
    double cr = 0.0;
    std::string label;
};

// (t SR_max, (1 - t) CR_max)
inline std::vector<SrCrPoint> osac_region(double sr_max, double cr_max, int grid) {
    require(grid >= 2, "osac_region: grid must be >= 2");
    std::vector<SrCrPoint> pts;
    for (double t : linspace(0.0, 1.0, grid)) pts.push_back({t * sr_max, (1.0 - t) * cr_max, "osac"});
    return pts;
}

// True when q is dominated by a point of the region or a time-sharing
// combination of two of its points.
inline bool region_dominates(const std::vector<SrCrPoint>& region, const SrCrPoint& q, double tol = 1e-9) {
    for (const auto& p : region)
        if (p.sr + tol >= q.sr && p.cr + tol >= q.cr) return true;
    for (const auto& a : region)
        for (const auto& b : region) {
            if (!(a.sr < q.sr && b.sr > q.sr)) continue;
            const double t = (q.sr - a.sr) / (b.sr - a.sr);
            if ((1.0 - t) * a.cr + t * b.cr + tol >= q.cr) return true;
        }
    return false;
}

// --- uplink NOMA-ISAC -------------------------------------------------------

struct UplinkIsacScene {
    cmat channels;  // h_k as columns, N_r x K
    rvec powers;    // p_k
    cmat r;         // transmit correlation, N_t x N_t
    cmat probe;     // X_s, N_t x L

    int pulse() const { return static_cast<int>(probe.cols()); }
    int receive() const { return static_cast<int>(channels.rows()); }

    void validate() const {
        require(powers.size() == channels.cols(), "UplinkIsacScene: one power per user");
        require(r.rows() == probe.rows() && r.cols() == probe.rows(), "UplinkIsacScene: R/X_s mismatch");
        require(probe.cols() >= 1, "UplinkIsacScene: pulse length must be >= 1");
    }
};

struct UplinkIsacCorners {
    SrCrPoint s_sic;  // comm decoded first, sensing interference-free
    SrCrPoint c_sic;  // sensing first, comm interference-free
    double sr_max = 0.0;
    double cr_max = 0.0;
};

// Comm covariance Q = Σ p_k h_k h_kᴴ. The undecoded stream is treated as
// coloured Gaussian noise and whitened:
//   sensing first: SR = L⁻¹ Σ_n logdet(I + μ_n Xᴴ R X), μ_n = eig((I + Q)⁻¹)
//   comm first:    CR = logdet(I + Q / (1 + tr(Xᴴ R X) / L))
inline UplinkIsacCorners uplink_isac_corners(const UplinkIsacScene& s) {
    s.validate();
    const int nr = s.receive();
    const double l = s.pulse();
    const cmat q = s.channels * s.powers.cast<cd>().asDiagonal() * s.channels.adjoint();
    const cmat echo = s.probe.adjoint() * s.r * s.probe;
    const rvec lam = hermitian_eig(echo).eigenvalues().cwiseMax(0.0);
    const rvec qeig = hermitian_eig(q).eigenvalues().cwiseMax(0.0);
    double sr_free = 0.0, sr_noisy = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
        sr_free += nr * std::log2(1.0 + lam(i));
        for (int n = 0; n < nr; ++n) sr_noisy += std::log2(1.0 + lam(i) / (1.0 + qeig(n)));
    }
    sr_free /= l;
    sr_noisy /= l;
    const double echo_power = echo.trace().real() / l;
    const double cr_free = logdet2(identity(nr) + q);
    const double cr_noisy = logdet2(identity(nr) + q / (1.0 + echo_power));
    return {{sr_free, cr_noisy, "S-SIC"}, {sr_noisy, cr_free, "C-SIC"}, sr_free, cr_free};
}

// Inner-stage order: the stronger ‖h_k‖ is decoded first. Per-user rates
// for the given outer order (true: comm decoded after the echo is removed).
inline RatePoint uplink_isac_user_rates(const UplinkIsacScene& s, bool echo_removed) {
    s.validate();
    const int k_users = static_cast<int>(s.channels.cols());
    const int nr = s.receive();
    const double echo_power = echo_removed ? 0.0 : (s.probe.adjoint() * s.r * s.probe).trace().real() / s.pulse();
    std::vector<int> order(k_users);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return s.channels.col(a).norm() > s.channels.col(b).norm(); });
    RatePoint r(k_users, 0.0);
    for (int pos = 0; pos < k_users; ++pos) {
        cmat with = (1.0 + echo_power) * identity(nr), without = with;
        for (int q = pos; q < k_users; ++q) {
            const int k = order[q];
            const cmat c = s.powers(k) * s.channels.col(k) * s.channels.col(k).adjoint();
            with += c;
            if (q > pos) without += c;
        }
        r[order[pos]] = logdet2(with) - logdet2(without);
    }
    return r;
}

// Corners, the time-sharing segment between them, and the OSAC baseline.
inline std::vector<SrCrPoint> uplink_isac_region(const UplinkIsacScene& s, int grid) {
    require(grid >= 2, "uplink_isac_region: grid must be >= 2");
    const auto c = uplink_isac_corners(s);
    std::vector<SrCrPoint> pts{c.s_sic, c.c_sic};
    for (double t : linspace(0.0, 1.0, grid))
        pts.push_back({t * c.s_sic.sr + (1.0 - t) * c.c_sic.sr, t * c.s_sic.cr + (1.0 - t) * c.c_sic.cr,
                       "time-share"});
    for (auto p : osac_region(c.sr_max, c.cr_max, grid)) pts.push_back(p);
    return pts;
}

// --- downlink SISO-NOMA-ISAC -------------------------------------------------

struct SisoNomaIsacScene {
    double power = 1.0;
    double gain_strong = 1.0;  // |h|² of the user that cancels the other
    double gain_weak = 0.5;
    double noise = 1.0;
    double variance = 1.0;  // ς²
    int pulse = 1;
};

// Sensing uses the full superposed signal: SR = L⁻¹ log2(1 + q L ς²).
inline double siso_sensing_rate(const SisoNomaIsacScene& s, double q) {
    return std::log2(1.0 + q * s.pulse * s.variance) / s.pulse;
}

// Two-user NOMA at total power q with fraction `share` for the strong user.
inline RatePoint siso_noma_rates(const SisoNomaIsacScene& s, double q, double share) {
    require(share >= 0.0 && share <= 1.0, "siso_noma_rates: share must lie in [0, 1]");
    return {shannon_rate(share * q * s.gain_strong / s.noise),
            shannon_rate((1.0 - share) * q * s.gain_weak / (share * q * s.gain_weak + s.noise))};
}

struct SisoNomaIsacRegion {
    double sr = 0.0;  // sensing rate at full power
    std::vector<RatePoint> cr_region;  // NOMA pairs at full power
    std::vector<double> power_grid;
    std::vector<double> sr_vs_power;
    std::vector<double> cr_vs_power;  // best sum CR over the share grid
};

inline SisoNomaIsacRegion dl_siso_noma_isac(const SisoNomaIsacScene& s, int share_grid = 101, int power_grid = 21) {
    require(s.power > 0.0 && s.noise > 0.0 && s.variance > 0.0 && s.pulse >= 1, "dl_siso_noma_isac: bad scene");
    require(s.gain_strong >= s.gain_weak && s.gain_weak > 0.0, "dl_siso_noma_isac: need gain_strong >= gain_weak > 0");
    SisoNomaIsacRegion out;
    out.sr = siso_sensing_rate(s, s.power);
    const auto shares = linspace(0.0, 1.0, share_grid);
    for (double a : shares) out.cr_region.push_back(siso_noma_rates(s, s.power, a));
    for (double f : linspace(1.0 / power_grid, 1.0, power_grid)) {
        const double q = f * s.power;
        out.power_grid.push_back(q);
        out.sr_vs_power.push_back(siso_sensing_rate(s, q));
        double best = 0.0;
        for (double a : shares) {
            const auto r = siso_noma_rates(s, q, a);
            best = std::max(best, r[0] + r[1]);
        }
        out.cr_vs_power.push_back(best);
    }
    return out;
}

// --- downlink SU-MISO-ISAC ---------------------------------------------------

struct SuMisoScene {
    cvec h_c;  // communication channel
    cvec h_s;  // sensing channel b_t(θ)
    double power = 1.0;
    double variance = 1.0;  // ς²
    int n_r = 1;
    int pulse = 1;

    void validate() const {
        require(h_c.size() == h_s.size() && h_c.size() > 0, "SuMisoScene: channel length mismatch");
        require(h_c.norm() > 0.0 && h_s.norm() > 0.0, "SuMisoScene: zero channel");
        require(power > 0.0 && variance > 0.0 && n_r >= 1 && pulse >= 1, "SuMisoScene: bad parameters");
    }
};

// log2(1 + p |wᴴh_c|²)
inline double su_miso_cr(const SuMisoScene& s, const cvec& w) { return std::log2(1.0 + s.power * std::norm(w.dot(s.h_c))); }

// L⁻¹ log2(1 + p N_r L ς² |wᴴh_s|²)
inline double su_miso_sr(const SuMisoScene& s, const cvec& w) {
    return std::log2(1.0 + s.power * s.n_r * s.pulse * s.variance * std::norm(w.dot(s.h_s))) / s.pulse;
}

struct ParetoPoint {
    double alpha = 0.0;
    double rate = 0.0;  // the common scale 𝓡
    double sr = 0.0;
    double cr = 0.0;
    cvec w;
};

// Orthonormal coordinates of the span: u1 = h_c/‖h_c‖, h_s = c1 u1 + c2 u2.
struct SuMisoSpan {
    cvec u1, u2;
    cd c1;
    double c2 = 0.0;
    double t_s = 0.0;  // angle at which w ∝ h_s

    explicit SuMisoSpan(const SuMisoScene& s) {
        u1 = s.h_c.normalized();
        c1 = u1.dot(s.h_s);
        const cvec rest = s.h_s - c1 * u1;
        c2 = rest.norm();
        u2 = c2 > 1e-14 * s.h_s.norm() ? cvec(rest / c2) : cvec::Zero(s.h_s.size());
        if (u2.isZero()) c2 = 0.0;
        t_s = std::atan2(c2, std::abs(c1));
    }

    // unit w at angle t with the phase of the u2 component aligned to h_s
    cvec beam(double t) const {
        const cd phase = std::abs(c1) > 0.0 ? c1 / std::abs(c1) : cd(1.0);
        return std::cos(t) * u1 + std::sin(t) * std::conj(phase) * u2;
    }
};

// max 𝓡 s.t. SR ≥ α𝓡, CR ≥ (1 − α)𝓡, ‖w‖ = 1. Inside the span the
// optimal u2 phase is closed form; 𝓡 is found by bisection.
inline ParetoPoint su_miso_rate_profile(const SuMisoScene& s, double alpha) {
    s.validate();
    require(alpha >= 0.0 && alpha <= 1.0, "su_miso_rate_profile: alpha must lie in [0, 1]");
    const SuMisoSpan sp(s);
    auto finish = [&](cvec w, double rate) {
        return ParetoPoint{alpha, rate, su_miso_sr(s, w), su_miso_cr(s, w), std::move(w)};
    };
    if (alpha == 0.0) {
        cvec w = s.h_c.normalized();
        return finish(w, su_miso_cr(s, w));
    }
    if (alpha == 1.0) {
        cvec w = s.h_s.normalized();
        return finish(w, su_miso_sr(s, w));
    }
    const double hc2 = s.h_c.squaredNorm();
    // largest admissible t for a given CR target
    auto t_for = [&](double rate) -> double {
        const double need = (std::exp2((1.0 - alpha) * rate) - 1.0) / (s.power * hc2);
        // rounding slack so the C-C corner itself stays admissible
        if (need > 1.0 + 1e-12) return -1.0;
        return std::min(std::acos(std::sqrt(std::clamp(need, 0.0, 1.0))), sp.t_s);
    };
    auto feasible = [&](double rate) {
        const double t = t_for(rate);
        return t >= 0.0 && su_miso_sr(s, sp.beam(t)) >= alpha * rate;
    };
    double lo = 0.0;
    double hi = std::min(su_miso_sr(s, s.h_s.normalized()) / alpha, su_miso_cr(s, s.h_c.normalized()) / (1.0 - alpha));
    if (feasible(hi)) lo = hi;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? lo : hi) = mid;
    }
    return finish(sp.beam(t_for(lo)), lo);
}

struct SuMisoRegion {
    SrCrPoint s_c;  // w = h_s / ‖h_s‖
    SrCrPoint c_c;  // w = h_c / ‖h_c‖
    std::vector<ParetoPoint> pareto;
    std::vector<SrCrPoint> osac;
};

inline SuMisoRegion dl_su_miso_isac(const SuMisoScene& s, const std::vector<double>& alphas, int osac_grid = 11) {
    s.validate();
    SuMisoRegion out;
    const cvec ws = s.h_s.normalized(), wc = s.h_c.normalized();
    out.s_c = {su_miso_sr(s, ws), su_miso_cr(s, ws), "S-C"};
    out.c_c = {su_miso_sr(s, wc), su_miso_cr(s, wc), "C-C"};
    for (double a : alphas) out.pareto.push_back(su_miso_rate_profile(s, a));
    out.osac = osac_region(out.s_c.sr, out.c_c.cr, osac_grid);
    return out;
}

// --- downlink cluster-based MIMO-NOMA-ISAC -----------------------------------

struct ClusterIsacScene {
    std::vector<cmat> channels;  // H_{c,k}: N_t x N_U, user receives H_{c,k}ᴴ x
    ClusterAssignment clusters;  // N_Cluster = N_t
    cmat r;                      // transmit correlation, N_t x N_t
    double power = 1.0;
    double noise = 1.0;
    int n_r = 1;
    int pulse = 1;

    int transmit() const { return static_cast<int>(r.rows()); }

    void validate() const {
        require(static_cast<int>(channels.size()) == clusters.users(), "ClusterIsacScene: one channel per user");
        clusters.validate();
        require(clusters.count == transmit(), "ClusterIsacScene: N_Cluster must equal N_t");
        require(power > 0.0 && noise > 0.0 && n_r >= 1 && pulse >= 1, "ClusterIsacScene: bad parameters");
        for (const auto& h : channels) require(h.rows() == transmit(), "ClusterIsacScene: channel rows must equal N_t");
    }
};

struct ClusterDesign {
    cmat directions;     // w_c, N_t x N_Cluster, unit columns
    rvec cluster_power;  // p̃_c
    std::string label;
};

// Strongest post-ZF gain per cluster, |v_kᴴ H_kᴴ w_c|² maximized over k in c.
inline rvec cluster_effective_gains(const ClusterIsacScene& s, const cmat& directions) {
    const auto rep = intercluster_zf_user(s.channels, directions, s.clusters);
    if (!rep.feasible) throw InvalidArgument("cluster ISAC: user-side zero forcing infeasible (" + rep.violated + ")");
    rvec g = rvec::Zero(s.clusters.count);
    for (int k = 0; k < s.clusters.users(); ++k) {
        const int c = s.clusters.cluster_of[k];
        g(c) = std::max(g(c), std::norm(rep.vectors.col(k).dot(s.channels[k].adjoint() * directions.col(c))));
    }
    return g;
}

// Sum over clusters of the SIC chain rate. With the cluster power on the
// chain's strongest user (sum-rate optimal for a degraded chain) this is
// Σ_c log2(1 + g_c p̃_c / σ²).
inline double cluster_cr(const ClusterIsacScene& s, const rvec& gains, const rvec& cluster_power) {
    double cr = 0.0;
    for (int c = 0; c < gains.size(); ++c) cr += std::log2(1.0 + gains(c) * cluster_power(c) / s.noise);
    return cr;
}

// Per-user SIC rates inside each cluster for explicit user powers; users
// ordered by ascending gain, interference from later users only.
inline double cluster_cr_users(const ClusterIsacScene& s, const cmat& directions, const rvec& user_power) {
    const auto rep = intercluster_zf_user(s.channels, directions, s.clusters);
    if (!rep.feasible) throw InvalidArgument("cluster ISAC: user-side zero forcing infeasible (" + rep.violated + ")");
    double cr = 0.0;
    for (int c = 0; c < s.clusters.count; ++c) {
        auto m = s.clusters.members(c);
        std::vector<double> g;
        for (int k : m) g.push_back(std::norm(rep.vectors.col(k).dot(s.channels[k].adjoint() * directions.col(c))));
        std::vector<int> idx(m.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return g[a] < g[b]; });
        for (std::size_t i = 0; i < idx.size(); ++i) {
            double later = 0.0;
            for (std::size_t j = i + 1; j < idx.size(); ++j) later += user_power(m[idx[j]]);
            const double gi = g[idx[i]];
            cr += std::log2(1.0 + gi * user_power(m[idx[i]]) / (gi * later + s.noise));
        }
    }
    return cr;
}

// L⁻¹ N_r logdet(I + L Pᴴ R P), P = [sqrt(p̃_c) w_c]
inline double cluster_sr(const ClusterIsacScene& s, const cmat& directions, const rvec& cluster_power) {
    const cmat p = directions * cluster_power.cwiseMax(0.0).cwiseSqrt().cast<cd>().asDiagonal();
    const double l = s.pulse;
    return s.n_r * logdet2(identity(static_cast<int>(p.cols())) + l * p.adjoint() * s.r * p) / l;
}

inline ClusterDesign cluster_sensing_centric(const ClusterIsacScene& s) {
    s.validate();
    const auto es = hermitian_eig(s.r);
    const rvec lam = es.eigenvalues().cwiseMax(0.0) * static_cast<double>(s.pulse);
    return {es.eigenvectors(), water_fill(lam, s.power).powers, "S-C"};
}

// Cluster powers water-filled over the strongest post-ZF gains, for the best
// of three direction sets: identity (one stream per transmit antenna), the
// eigenvectors of R, and each cluster's principal channel direction.
inline ClusterDesign cluster_comm_centric(const ClusterIsacScene& s) {
    s.validate();
    const int nt = s.transmit();
    std::vector<cmat> candidates{identity(nt), hermitian_eig(s.r).eigenvectors()};
    cmat matched(nt, s.clusters.count);
    for (int c = 0; c < s.clusters.count; ++c) {
        cmat acc = cmat::Zero(nt, nt);
        for (int k : s.clusters.members(c)) acc += s.channels[k] * s.channels[k].adjoint();
        matched.col(c) = hermitian_eig(acc).eigenvectors().col(nt - 1);
    }
    candidates.push_back(matched);
    ClusterDesign best{identity(nt), rvec::Zero(nt), "C-C"};
    double best_cr = -1.0;
    for (const auto& dirs : candidates) {
        const auto rep = intercluster_zf_user(s.channels, dirs, s.clusters);
        if (!rep.feasible) continue;
        const rvec g = cluster_effective_gains(s, dirs);
        const rvec p = water_fill(g / s.noise, s.power).powers;
        const double cr = cluster_cr(s, g, p);
        if (cr > best_cr) {
            best_cr = cr;
            best = {dirs, p, "C-C"};
        }
    }
    if (best_cr < 0.0) cluster_effective_gains(s, candidates.front());  // throws the ZF diagnostic
    return best;
}

namespace detail {

// max μ SR + (1 − μ) CR over the power simplex for fixed directions,
// by exponentiated-gradient ascent (both terms are concave in p̃).
inline rvec cluster_weighted_optimum(const ClusterIsacScene& s, const cmat& dirs, const rvec& gains, double mu,
                                     rvec start, int iters = 400) {
    const int c = static_cast<int>(dirs.cols());
    rvec p = start;
    const double l = s.pulse;
    const cmat rs = psd_sqrt(s.r);
    const cmat a = rs * dirs;  // columns R^{1/2} w_c
    double step = 1.0;
    auto objective = [&](const rvec& q) { return mu * cluster_sr(s, dirs, q) + (1.0 - mu) * cluster_cr(s, gains, q); };
    double f = objective(p);
    for (int it = 0; it < iters; ++it) {
        const cmat m = identity(static_cast<int>(a.rows())) + l * a * p.cast<cd>().asDiagonal() * a.adjoint();
        const cmat minv_a = m.ldlt().solve(a);
        rvec grad(c);
        for (int i = 0; i < c; ++i) {
            const double dsr = s.n_r * a.col(i).dot(minv_a.col(i)).real() / std::log(2.0);
            const double dcr = gains(i) / (std::log(2.0) * (s.noise + gains(i) * p(i)));
            grad(i) = mu * dsr + (1.0 - mu) * dcr;
        }
        // multiplicative update keeps p on the simplex scaled by the budget
        while (step > 1e-12) {
            rvec q(c);
            const double gmax = grad.maxCoeff();
            for (int i = 0; i < c; ++i) q(i) = std::max(p(i), 1e-300) * std::exp(step * (grad(i) - gmax) * s.power);
            q *= s.power / q.sum();
            const double fq = objective(q);
            if (fq >= f) {
                p = q;
                f = fq;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if (step <= 1e-12) break;
    }
    return p;
}

}  // namespace detail

struct ClusterIsacRegion {
    SrCrPoint s_c;
    SrCrPoint c_c;
    std::vector<SrCrPoint> boundary;  // weighted-sum optima for both direction families
    std::vector<ParetoPoint> pareto;  // rate-profile points on the boundary hull
    std::vector<SrCrPoint> osac;
};

// Rate-profile point: intersection of the ray SR/CR = α/(1 − α) with the
// upper hull of the boundary samples.
inline ParetoPoint hull_rate_profile(const std::vector<SrCrPoint>& pts, double alpha) {
    ParetoPoint best{alpha, 0.0, 0.0, 0.0, {}};
    auto consider = [&](double sr, double cr) {
        double rate;
        if (alpha == 0.0) rate = cr;
        else if (alpha == 1.0) rate = sr;
        else rate = std::min(sr / alpha, cr / (1.0 - alpha));
        if (rate > best.rate) {
            best.rate = rate;
            best.sr = sr;
            best.cr = cr;
        }
    };
    for (const auto& p : pts) consider(p.sr, p.cr);
    if (alpha > 0.0 && alpha < 1.0) {
        // time-sharing between two samples that bracket the ray
        for (const auto& a : pts)
            for (const auto& b : pts) {
                const double fa = (1.0 - alpha) * a.sr - alpha * a.cr;
                const double fb = (1.0 - alpha) * b.sr - alpha * b.cr;
                if (!(fa < 0.0 && fb > 0.0)) continue;
                const double t = fa / (fa - fb);
                consider((1.0 - t) * a.sr + t * b.sr, (1.0 - t) * a.cr + t * b.cr);
            }
    }
    return best;
}

inline ClusterIsacRegion dl_cluster_isac(const ClusterIsacScene& s, const std::vector<double>& alphas,
                                         int weight_grid = 21, int osac_grid = 11) {
    s.validate();
    require(weight_grid >= 2, "dl_cluster_isac: weight grid must be >= 2");
    ClusterIsacRegion out;
    const auto sc = cluster_sensing_centric(s);
    const auto cc = cluster_comm_centric(s);
    const rvec g_sc = cluster_effective_gains(s, sc.directions);
    const rvec g_cc = cluster_effective_gains(s, cc.directions);
    out.s_c = {cluster_sr(s, sc.directions, sc.cluster_power), cluster_cr(s, g_sc, sc.cluster_power), "S-C"};
    out.c_c = {cluster_sr(s, cc.directions, cc.cluster_power), cluster_cr(s, g_cc, cc.cluster_power), "C-C"};
    out.boundary = {out.s_c, out.c_c};
    for (const auto* d : {&sc, &cc}) {
        const rvec& g = d == &sc ? g_sc : g_cc;
        rvec p = rvec::Constant(s.transmit(), s.power / s.transmit());
        for (double mu : linspace(0.0, 1.0, weight_grid)) {
            p = detail::cluster_weighted_optimum(s, d->directions, g, mu, p);
            out.boundary.push_back({cluster_sr(s, d->directions, p), cluster_cr(s, g, p), "weighted"});
        }
    }
    for (double a : alphas) out.pareto.push_back(hull_rate_profile(out.boundary, a));
    out.osac = osac_region(out.s_c.sr, out.c_c.cr, osac_grid);
    return out;
}

}  // namespace malab
