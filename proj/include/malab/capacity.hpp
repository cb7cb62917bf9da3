#pragma once
// Gaussian MAC/BC capacity regions, iterative water-filling, DPC rates and
// the OMA time-sharing baseline.

#include "malab/core.hpp"

#include <functional>

namespace malab {

namespace detail {

// All weight vectors on the simplex {w >= 0, sum w = 1} with denominators
// `steps`; lexicographic order.
inline void simplex_lattice(int dims, int steps, const std::function<void(const std::vector<double>&)>& fn) {
    std::vector<int> c(dims, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == dims - 1) {
            c[pos] = left;
            std::vector<double> w(dims);
            for (int i = 0; i < dims; ++i) w[i] = static_cast<double>(c[i]) / steps;
            fn(w);
            return;
        }
        for (int v = left; v >= 0; --v) {
            c[pos] = v;
            rec(pos + 1, left - v);
        }
    };
    rec(0, steps);
}

}  // namespace detail

// --- scalar channels --------------------------------------------------------

// Degraded BC, noise N_1 <= ... <= N_K; user k sees the stronger users'
// (k' < k) signals as interference.
inline RatePoint scalar_bc_rates(double power, const std::vector<double>& noise, const std::vector<double>& alpha) {
    require(noise.size() == alpha.size(), "scalar_bc_rates: size mismatch");
    RatePoint r(noise.size());
    double above = 0.0;
    for (std::size_t k = 0; k < noise.size(); ++k) {
        r[k] = shannon_rate(alpha[k] * power / (noise[k] + above));
        above += alpha[k] * power;
    }
    return r;
}

// Boundary samples over the power-split simplex. For K = 2 `resolution`
// points per axis; for K >= 3 a lattice with resolution-1 steps.
inline RateRegion scalar_bc_region(double power, const std::vector<double>& noise, int resolution = 201) {
    require(!noise.empty(), "scalar_bc_region: no users");
    require(power > 0.0, "scalar_bc_region: power must be > 0");
    require(resolution >= 2, "scalar_bc_region: resolution must be >= 2");
    for (double n : noise) require(n > 0.0, "scalar_bc_region: noise powers must be > 0");
    require(std::is_sorted(noise.begin(), noise.end()), "scalar_bc_region: noise powers must be sorted ascending");
    RateRegion reg;
    if (noise.size() == 1) {
        reg.points.push_back({shannon_rate(power / noise[0])});
        return reg;
    }
    detail::simplex_lattice(static_cast<int>(noise.size()), resolution - 1,
                            [&](const std::vector<double>& a) { reg.points.push_back(scalar_bc_rates(power, noise, a)); });
    return reg;
}

inline bool scalar_mac_region_contains(const std::vector<double>& powers, double noise, const RatePoint& r,
                                       double tol = 0.0) {
    const int k = static_cast<int>(powers.size());
    require(k >= 1 && k <= 20, "scalar_mac_region_contains: 1 <= K <= 20 required");
    require(static_cast<int>(r.size()) == k, "scalar_mac_region_contains: dimension mismatch");
    require(noise > 0.0, "scalar_mac_region_contains: noise must be > 0");
    for (double x : r)
        if (x < -tol) return false;
    for (std::uint32_t s = 1; s < (1u << k); ++s) {
        double sum_r = 0.0, sum_p = 0.0;
        for (int i = 0; i < k; ++i)
            if (s & (1u << i)) {
                sum_r += r[i];
                sum_p += powers[i];
            }
        if (sum_r > shannon_rate(sum_p / noise) + tol) return false;
    }
    return true;
}

// TDMA with full power in the active slot: R_k = t_k C_k, sum t_k = 1.
inline RateRegion oma_region(const std::vector<double>& single_user_rates, int grid = 101) {
    require(!single_user_rates.empty(), "oma_region: no users");
    require(grid >= 2, "oma_region: grid must be >= 2");
    RateRegion reg;
    detail::simplex_lattice(static_cast<int>(single_user_rates.size()), grid - 1, [&](const std::vector<double>& t) {
        RatePoint p(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) p[i] = t[i] * single_user_rates[i];
        reg.points.push_back(std::move(p));
    });
    return reg;
}

inline bool dominates(const RatePoint& a, const RatePoint& b, double tol = 0.0) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] + tol < b[i]) return false;
    return true;
}

// --- vector MAC -------------------------------------------------------------

struct VectorMac {
    std::vector<cmat> channels;     // H_k: N_BS x N_k
    std::vector<cmat> covariances;  // Σ_k: N_k x N_k
    double noise = 1.0;             // σ²

    int receive_antennas() const { return static_cast<int>(channels.front().rows()); }
    int users() const { return static_cast<int>(channels.size()); }

    void validate() const {
        require(!channels.empty(), "VectorMac: no users");
        require(channels.size() == covariances.size(), "VectorMac: one covariance per user");
        require(noise > 0.0, "VectorMac: noise must be > 0");
        for (std::size_t k = 0; k < channels.size(); ++k) {
            require(channels[k].rows() == channels.front().rows(), "VectorMac: receive dimension mismatch");
            require(covariances[k].rows() == channels[k].cols() && covariances[k].cols() == channels[k].cols(),
                    "VectorMac: covariance dimension mismatch");
        }
    }

    // σ²I + Σ_{k in set} H_k Σ_k H_kᴴ
    cmat received_covariance(const std::vector<int>& set) const {
        cmat z = noise * identity(receive_antennas());
        for (int k : set) z += channels[k] * covariances[k] * channels[k].adjoint();
        return z;
    }
};

// logdet(I + σ⁻² Σ H_k Σ_k H_kᴴ)
inline double mac_sum_rate(const VectorMac& m) {
    m.validate();
    std::vector<int> all(m.users());
    std::iota(all.begin(), all.end(), 0);
    return logdet2(m.received_covariance(all) / m.noise);
}

// order[0] is decoded first and sees everyone else as noise.
inline RatePoint mac_sic_corner(const VectorMac& m, const std::vector<int>& order) {
    m.validate();
    require(static_cast<int>(order.size()) == m.users(), "mac_sic_corner: order must be a permutation");
    std::vector<int> check = order;
    std::sort(check.begin(), check.end());
    for (int i = 0; i < m.users(); ++i) require(check[i] == i, "mac_sic_corner: order must be a permutation");
    RatePoint r(m.users(), 0.0);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        std::vector<int> with(order.begin() + pos, order.end());
        std::vector<int> without(order.begin() + pos + 1, order.end());
        r[order[pos]] = logdet2(m.received_covariance(with)) - logdet2(m.received_covariance(without));
    }
    return r;
}

struct IwfResult {
    std::vector<cmat> covariances;
    double sum_capacity = 0.0;
    std::vector<double> objective_history;  // after each full cycle
    int cycles = 0;
    double kkt_residual = 0.0;
};

namespace detail {

// Best single-user covariance against noise-plus-interference z.
inline WaterFill single_user_update(const cmat& h, const cmat& z, double budget, cmat& cov) {
    const cmat g = h.adjoint() * z.ldlt().solve(h);
    const auto es = hermitian_eig(g);
    const rvec lam = es.eigenvalues().cwiseMax(0.0);
    const auto wf = water_fill(lam, budget);
    cov = es.eigenvectors() * wf.powers.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
    return wf;
}

}  // namespace detail

namespace detail {

// Fixed-point gap: distance of each stored covariance from the water-filling
// response to the current interference, relative to the budget.
inline double iwf_fixed_point_gap(const VectorMac& m, const std::vector<double>& budgets) {
    double res = 0.0;
    for (int k = 0; k < m.users(); ++k) {
        std::vector<int> others;
        for (int j = 0; j < m.users(); ++j)
            if (j != k) others.push_back(j);
        cmat fresh;
        single_user_update(m.channels[k], m.received_covariance(others), budgets[k], fresh);
        res = std::max(res, (fresh - m.covariances[k]).norm() / budgets[k]);
    }
    return res;
}

}  // namespace detail

// Per-user power budgets; each cycle updates every user's covariance by
// water-filling against the others. Stops once the sum-rate gain drops below
// tol and the fixed-point gap is below kkt_tol.
inline IwfResult iwf_mac(const std::vector<cmat>& channels, const std::vector<double>& budgets, double noise,
                         double tol = 1e-8, int max_cycles = 500, double kkt_tol = 1e-7) {
    require(!channels.empty(), "iwf_mac: no users");
    require(channels.size() == budgets.size(), "iwf_mac: one budget per user");
    require(noise > 0.0, "iwf_mac: noise must be > 0");
    for (double p : budgets) require(p > 0.0, "iwf_mac: budgets must be > 0");
    VectorMac m{channels, {}, noise};
    for (const auto& h : channels) m.covariances.push_back(cmat::Zero(h.cols(), h.cols()));
    m.validate();
    const int k_users = m.users();
    IwfResult out;
    double prev = 0.0;
    double obj = mac_sum_rate(m);
    for (int cycle = 1; cycle <= max_cycles; ++cycle) {
        for (int k = 0; k < k_users; ++k) {
            std::vector<int> others;
            for (int j = 0; j < k_users; ++j)
                if (j != k) others.push_back(j);
            // A best response cannot lower the sum rate; re-deriving an
            // unchanged optimum can, by an ulp, so such updates are dropped.
            const cmat kept = m.covariances[k];
            detail::single_user_update(channels[k], m.received_covariance(others), budgets[k], m.covariances[k]);
            const double next = mac_sum_rate(m);
            if (next < obj) m.covariances[k] = kept;
            else obj = next;
        }
        out.objective_history.push_back(obj);
        out.cycles = cycle;
        if (cycle > 1 && obj - prev < tol) {
            const double gap = detail::iwf_fixed_point_gap(m, budgets);
            if (gap < kkt_tol) {
                out.covariances = m.covariances;
                out.sum_capacity = obj;
                out.kkt_residual = gap;
                return out;
            }
        }
        prev = obj;
    }
    throw NumericalError("iwf_mac: no convergence after " + std::to_string(max_cycles) + " cycles");
}

// --- DPC and BC sum capacity --------------------------------------------------

// BC: user k receives y_k = H_kᴴ x + n_k, H_k is N_BS x N_k.
struct DpcInstance {
    std::vector<cmat> channels;
    std::vector<cmat> covariances;  // Ξ_k: N_BS x N_BS
    std::vector<double> noise;      // σ_k²
    double power = 1.0;
};

// order[0] is encoded first and sees every later-encoded user as interference;
// the last-encoded user sees noise only.
inline RatePoint dpc_rates(const DpcInstance& inst, const std::vector<int>& order) {
    const int k_users = static_cast<int>(inst.channels.size());
    require(k_users >= 1, "dpc_rates: no users");
    require(inst.covariances.size() == inst.channels.size() && inst.noise.size() == inst.channels.size(),
            "dpc_rates: size mismatch");
    require(static_cast<int>(order.size()) == k_users, "dpc_rates: order must be a permutation");
    double used = 0.0;
    for (const auto& c : inst.covariances) used += c.trace().real();
    require(used <= inst.power * (1.0 + 1e-9), "dpc_rates: covariances exceed the power budget");
    RatePoint r(k_users, 0.0);
    for (int pos = 0; pos < k_users; ++pos) {
        const int k = order[pos];
        const cmat& h = inst.channels[k];
        cmat later = cmat::Zero(h.rows(), h.rows());
        for (int q = pos + 1; q < k_users; ++q) later += inst.covariances[order[q]];
        const cmat base = inst.noise[k] * identity(static_cast<int>(h.cols())) + h.adjoint() * later * h;
        r[k] = logdet2(base + h.adjoint() * inst.covariances[k] * h) - logdet2(base);
    }
    return r;
}

struct BcSumCapacity {
    double value = 0.0;
    std::vector<cmat> dual_covariances;  // dual MAC Q_k, N_k x N_k
    int iterations = 0;
};

// Sum-power iterative water-filling on the dual MAC (unit noise after
// scaling H_k by 1/σ_k), with the 1/K averaging step that makes each
// iteration monotone.
inline BcSumCapacity bc_sum_capacity(const std::vector<cmat>& channels, const std::vector<double>& noise, double power,
                                     double tol = 1e-10, int max_iter = 5000) {
    const int k_users = static_cast<int>(channels.size());
    require(k_users >= 1, "bc_sum_capacity: no users");
    require(noise.size() == channels.size(), "bc_sum_capacity: one noise power per user");
    require(power > 0.0, "bc_sum_capacity: power must be > 0");
    std::vector<cmat> h;
    for (int k = 0; k < k_users; ++k) {
        require(noise[k] > 0.0, "bc_sum_capacity: noise powers must be > 0");
        h.push_back(channels[k] / std::sqrt(noise[k]));
    }
    const int n = static_cast<int>(h.front().rows());
    std::vector<cmat> q;
    for (const auto& hk : h) q.push_back(cmat::Zero(hk.cols(), hk.cols()));
    auto objective = [&](const std::vector<cmat>& qs) {
        cmat z = identity(n);
        for (int k = 0; k < k_users; ++k) z += h[k] * qs[k] * h[k].adjoint();
        return logdet2(z);
    };
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<Eigen::SelfAdjointEigenSolver<cmat>> eig;
        std::vector<int> offsets{0};
        for (int k = 0; k < k_users; ++k) {
            cmat z = identity(n);
            for (int j = 0; j < k_users; ++j)
                if (j != k) z += h[j] * q[j] * h[j].adjoint();
            eig.push_back(hermitian_eig(h[k].adjoint() * z.ldlt().solve(h[k])));
            offsets.push_back(offsets.back() + static_cast<int>(h[k].cols()));
        }
        rvec lam(offsets.back());
        for (int k = 0; k < k_users; ++k)
            lam.segment(offsets[k], h[k].cols()) = eig[k].eigenvalues().cwiseMax(0.0);
        const auto wf = water_fill(lam, power);
        std::vector<cmat> next;
        for (int k = 0; k < k_users; ++k) {
            const auto& v = eig[k].eigenvectors();
            const cmat qk = v * wf.powers.segment(offsets[k], h[k].cols()).cast<cd>().asDiagonal() * v.adjoint();
            next.push_back(q[k] * (static_cast<double>(k_users - 1) / k_users) + qk / static_cast<double>(k_users));
        }
        q = std::move(next);
        const double obj = objective(q);
        if (it > 1 && std::abs(obj - prev) < tol) return {obj, q, it};
        prev = obj;
    }
    throw NumericalError("bc_sum_capacity: no convergence after " + std::to_string(max_iter) + " iterations");
}

}  // namespace malab
