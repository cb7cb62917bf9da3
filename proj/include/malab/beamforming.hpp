#pragma once
// Linear uplink combiners, downlink precoders, and the hybrid analog/digital
// SINR.

#include "malab/core.hpp"

#include <optional>

namespace malab {

enum class Combiner { mrc, zf, lmmse };
enum class Precoder { mrt, zf, rzf, slnr, lmmse };

inline const char* to_string(Combiner c) {
    switch (c) {
        case Combiner::mrc: return "MRC";
        case Combiner::zf: return "ZF";
        case Combiner::lmmse: return "LMMSE";
    }
    return "?";
}

inline const char* to_string(Precoder p) {
    switch (p) {
        case Precoder::mrt: return "MRT";
        case Precoder::zf: return "ZF";
        case Precoder::rzf: return "RZF";
        case Precoder::slnr: return "SLNR";
        case Precoder::lmmse: return "LMMSE";
    }
    return "?";
}

namespace detail {

inline void check_zf_dims(const cmat& h) {
    if (h.cols() > h.rows())
        throw InvalidArgument("ZF needs at least as many antennas as users (" + std::to_string(h.rows()) + " < " +
                              std::to_string(h.cols()) + ")");
}

// H (HᴴH)⁻¹, rejecting near-singular Gram matrices.
inline cmat zf_matrix(const cmat& h) {
    check_zf_dims(h);
    const cmat gram = h.adjoint() * h;
    Eigen::JacobiSVD<cmat> svd(gram);
    const auto& s = svd.singularValues();
    if (s(0) <= 0.0 || s(s.size() - 1) <= 0.0 || s(0) / s(s.size() - 1) > 1e12)
        throw NumericalError("ZF: channel Gram matrix is rank deficient or ill-conditioned");
    return h * gram.inverse();
}

inline cmat normalize_columns(cmat m) {
    for (int k = 0; k < m.cols(); ++k) {
        const double n = m.col(k).norm();
        if (n > 0.0) m.col(k) /= n;
    }
    return m;
}

inline void check_powers(const cmat& h, const rvec& powers) {
    require(powers.size() == h.cols(), "one power per user required");
    for (int k = 0; k < powers.size(); ++k) require(powers(k) >= 0.0, "powers must be >= 0");
}

}  // namespace detail

// Columns are the combiners v_k (not normalized). H is N_BS x K.
inline cmat uplink_combiner(const cmat& h, const rvec& powers, double noise, Combiner method) {
    detail::check_powers(h, powers);
    require(noise > 0.0, "uplink_combiner: noise must be > 0");
    switch (method) {
        case Combiner::mrc: return h;
        case Combiner::zf: return detail::zf_matrix(h);
        case Combiner::lmmse: {
            const cmat cov = h * powers.cast<cd>().asDiagonal() * h.adjoint() +
                             noise * identity(static_cast<int>(h.rows()));
            return cov.ldlt().solve(h);
        }
    }
    return h;
}

inline rvec uplink_sinr(const cmat& h, const cmat& v, const rvec& powers, double noise) {
    detail::check_powers(h, powers);
    require(v.rows() == h.rows() && v.cols() == h.cols(), "uplink_sinr: combiner shape mismatch");
    const int k_users = static_cast<int>(h.cols());
    rvec out(k_users);
    for (int k = 0; k < k_users; ++k) {
        const double vn = v.col(k).squaredNorm();
        require(vn > 0.0, "uplink_sinr: zero combiner");
        double interf = noise * vn;
        for (int j = 0; j < k_users; ++j)
            if (j != k) interf += powers(j) * std::norm(v.col(k).dot(h.col(j)));
        out(k) = powers(k) * std::norm(v.col(k).dot(h.col(k))) / interf;
    }
    return out;
}

inline RatePoint uplink_rates(const cmat& h, const cmat& v, const rvec& powers, double noise) {
    const rvec s = uplink_sinr(h, v, powers, noise);
    RatePoint r(s.size());
    for (int k = 0; k < s.size(); ++k) r[k] = shannon_rate(s(k));
    return r;
}

// log2(1 + p_k / (σ² [(HᴴH)⁻¹]_kk))
inline RatePoint zf_uplink_rates_closed(const cmat& h, const rvec& powers, double noise) {
    detail::check_zf_dims(h);
    const cmat inv = (h.adjoint() * h).inverse();
    RatePoint r(h.cols());
    for (int k = 0; k < h.cols(); ++k) r[k] = shannon_rate(powers(k) / (noise * inv(k, k).real()));
    return r;
}

// log2(1 + p_k h_kᴴ (Σ_{j≠k} p_j h_j h_jᴴ + σ²I)⁻¹ h_k)
inline RatePoint lmmse_uplink_rates_closed(const cmat& h, const rvec& powers, double noise) {
    const int n = static_cast<int>(h.rows());
    RatePoint r(h.cols());
    for (int k = 0; k < h.cols(); ++k) {
        cmat z = noise * identity(n);
        for (int j = 0; j < h.cols(); ++j)
            if (j != k) z += powers(j) * h.col(j) * h.col(j).adjoint();
        r[k] = shannon_rate(powers(k) * h.col(k).dot(z.ldlt().solve(h.col(k))).real());
    }
    return r;
}

struct PrecoderOptions {
    // unset selects K * mean(σ_k²) / p
    std::optional<double> rzf_alpha;
};

// Unit-norm columns g_k. `noise` holds σ_k² per user.
inline cmat downlink_precoder(const cmat& h, Precoder method, const rvec& powers, const rvec& noise,
                              PrecoderOptions opt = {}) {
    detail::check_powers(h, powers);
    require(noise.size() == h.cols(), "downlink_precoder: one noise power per user");
    const int n = static_cast<int>(h.rows());
    const int k_users = static_cast<int>(h.cols());
    switch (method) {
        case Precoder::mrt: return detail::normalize_columns(h);
        case Precoder::zf: return detail::normalize_columns(detail::zf_matrix(h));
        case Precoder::rzf: {
            double alpha = opt.rzf_alpha.value_or(0.0);
            if (opt.rzf_alpha) {
                require(alpha > 0.0 && std::isfinite(alpha), "downlink_precoder: RZF regularizer must be > 0");
            } else {
                const double p = powers.sum();
                require(p > 0.0, "downlink_precoder: RZF default regularizer needs positive total power");
                alpha = k_users * noise.mean() / p;
            }
            const cmat reg = h.adjoint() * h + alpha * identity(k_users);
            return detail::normalize_columns(h * reg.inverse());
        }
        case Precoder::slnr: {
            cmat g(n, k_users);
            const cmat hh = h * h.adjoint();
            for (int k = 0; k < k_users; ++k) {
                const cmat m = powers(k) * hh + noise(k) * identity(n);
                g.col(k) = m.ldlt().solve(h.col(k));
            }
            return detail::normalize_columns(g);
        }
        case Precoder::lmmse: {
            cmat g(n, k_users);
            const cmat hph = h * powers.cast<cd>().asDiagonal() * h.adjoint();
            for (int k = 0; k < k_users; ++k) {
                const cmat m = hph + noise(k) * identity(n);
                g.col(k) = m.ldlt().solve(h.col(k));
            }
            return detail::normalize_columns(g);
        }
    }
    return h;
}

// Signal-to-leakage-plus-noise ratio of precoder g for user k.
inline double slnr(const cmat& h, const cvec& g, int k, double power, double noise) {
    const double sig = power * std::norm(h.col(k).dot(g));
    double leak = 0.0;
    for (int j = 0; j < h.cols(); ++j)
        if (j != k) leak += power * std::norm(h.col(j).dot(g));
    return sig / (leak + noise * g.squaredNorm());
}

inline rvec downlink_sinr(const cmat& h, const cmat& g, const rvec& powers, const rvec& noise) {
    detail::check_powers(h, powers);
    require(g.rows() == h.rows() && g.cols() == h.cols(), "downlink_sinr: precoder shape mismatch");
    const int k_users = static_cast<int>(h.cols());
    rvec out(k_users);
    for (int k = 0; k < k_users; ++k) {
        double interf = noise(k);
        for (int j = 0; j < k_users; ++j)
            if (j != k) interf += powers(j) * std::norm(h.col(k).dot(g.col(j)));
        out(k) = powers(k) * std::norm(h.col(k).dot(g.col(k))) / interf;
    }
    return out;
}

// `budget` bounds Σ p_k ‖g_k‖²; pass a negative value to skip the check.
inline RatePoint downlink_rates(const cmat& h, const cmat& g, const rvec& powers, const rvec& noise,
                                double budget = -1.0) {
    if (budget >= 0.0) {
        double used = 0.0;
        for (int k = 0; k < g.cols(); ++k) used += powers(k) * g.col(k).squaredNorm();
        require(used <= budget * (1.0 + 1e-9), "downlink_rates: precoders exceed the power budget");
    }
    const rvec s = downlink_sinr(h, g, powers, noise);
    RatePoint r(s.size());
    for (int k = 0; k < s.size(); ++k) r[k] = shannon_rate(s(k));
    return r;
}

// --- hybrid -----------------------------------------------------------------

struct HybridConfig {
    cmat analog;   // F: N_BS x N_RF
    cmat digital;  // W: N_RF x K
    double power = 1.0;

    // |F_ij| = 1/sqrt(N_RF N_BS) and trace(WᴴFᴴFW) = p
    void validate(double tol = 1e-9) const {
        const double n = static_cast<double>(analog.rows()) * static_cast<double>(analog.cols());
        require(n > 0.0, "HybridConfig: empty analog precoder");
        require(digital.rows() == analog.cols(), "HybridConfig: digital precoder needs N_RF rows");
        const double target = 1.0 / std::sqrt(n);
        for (int j = 0; j < analog.cols(); ++j)
            for (int i = 0; i < analog.rows(); ++i)
                if (std::abs(std::abs(analog(i, j)) - target) > tol * target)
                    throw InvalidArgument("HybridConfig: analog entry (" + std::to_string(i) + "," + std::to_string(j) +
                                          ") violates the constant-modulus constraint");
        const double tr = (digital.adjoint() * analog.adjoint() * analog * digital).trace().real();
        if (std::abs(tr - power) > tol * std::max(1.0, power))
            throw InvalidArgument("HybridConfig: trace(WᴴFᴴFW) = " + std::to_string(tr) + " differs from p = " +
                                  std::to_string(power));
    }
};

struct HybridResult {
    rvec sinr;
    RatePoint rates;
    double sum_rate = 0.0;
};

inline HybridResult hybrid_sinr(const HybridConfig& cfg, const cmat& h, const rvec& noise) {
    cfg.validate();
    require(h.rows() == cfg.analog.rows(), "hybrid_sinr: channel rows must equal N_BS");
    require(h.cols() == cfg.digital.cols() && noise.size() == h.cols(), "hybrid_sinr: user count mismatch");
    const cmat eff = h.adjoint() * cfg.analog * cfg.digital;  // (k, k') = h_kᴴ F w_k'
    const int k_users = static_cast<int>(h.cols());
    HybridResult out{rvec(k_users), RatePoint(k_users), 0.0};
    for (int k = 0; k < k_users; ++k) {
        double interf = noise(k);
        for (int j = 0; j < k_users; ++j)
            if (j != k) interf += std::norm(eff(k, j));
        out.sinr(k) = std::norm(eff(k, k)) / interf;
        out.rates[k] = shannon_rate(out.sinr(k));
        out.sum_rate += out.rates[k];
    }
    return out;
}

}  // namespace malab
