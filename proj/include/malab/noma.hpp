#pragma once
// Beamformer-based, cluster-based and cluster-free MIMO-NOMA rates with SIC
// feasibility, plus inter-cluster zero-forcing designs.

#include "malab/core.hpp"

#include <optional>

namespace malab {

// alpha(k, k') == 0: user k decodes (and removes) user k''s signal before
// its own. alpha(k, k') == 1: k' stays as interference at k.
struct SicOrdering {
    Eigen::MatrixXi alpha;

    int users() const { return static_cast<int>(alpha.rows()); }

    // decode_order[0] is the first signal removed in the SIC chain.
    static SicOrdering from_order(const std::vector<int>& decode_order) {
        const int k = static_cast<int>(decode_order.size());
        std::vector<int> pos(k, -1);
        for (int i = 0; i < k; ++i) {
            require(decode_order[i] >= 0 && decode_order[i] < k && pos[decode_order[i]] < 0,
                    "SicOrdering: decode order must be a permutation");
            pos[decode_order[i]] = i;
        }
        SicOrdering s{Eigen::MatrixXi::Ones(k, k)};
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                if (a != b && pos[b] < pos[a]) s.alpha(a, b) = 0;
        return s;
    }

    // Per-cluster chains; pairs in different clusters are left at 1 and ignored.
    static SicOrdering from_cluster_orders(int users, const std::vector<std::vector<int>>& orders) {
        SicOrdering s{Eigen::MatrixXi::Ones(users, users)};
        for (const auto& ord : orders) {
            for (std::size_t i = 0; i < ord.size(); ++i)
                for (std::size_t j = 0; j < i; ++j) {
                    require(ord[i] >= 0 && ord[i] < users && ord[j] >= 0 && ord[j] < users,
                            "SicOrdering: user index out of range");
                    s.alpha(ord[i], ord[j]) = 0;
                }
        }
        return s;
    }

    // Pairwise complementarity and transitivity on `members`.
    void validate(const std::vector<int>& members) const {
        for (int a : members)
            for (int b : members) {
                if (a == b) continue;
                if (alpha(a, b) + alpha(b, a) != 1)
                    throw InvalidArgument("SicOrdering: alpha(" + std::to_string(a) + "," + std::to_string(b) +
                                          ") + alpha(" + std::to_string(b) + "," + std::to_string(a) +
                                          ") must equal 1");
            }
        // a tournament is a total order iff its score sequence is 0..n-1
        std::vector<int> scores;
        for (int a : members) {
            int s = 0;
            for (int b : members)
                if (a != b && alpha(a, b) == 0) ++s;
            scores.push_back(s);
        }
        std::sort(scores.begin(), scores.end());
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] != static_cast<int>(i)) throw InvalidArgument("SicOrdering: decoding relation is not transitive");
    }

    void validate() const {
        std::vector<int> all(users());
        std::iota(all.begin(), all.end(), 0);
        validate(all);
    }
};

struct ClusterAssignment {
    std::vector<int> cluster_of;  // user -> cluster id in 0..count-1
    int count = 0;

    int users() const { return static_cast<int>(cluster_of.size()); }

    static ClusterAssignment from_groups(int users, const std::vector<std::vector<int>>& groups) {
        ClusterAssignment a{std::vector<int>(users, -1), static_cast<int>(groups.size())};
        for (std::size_t c = 0; c < groups.size(); ++c)
            for (int k : groups[c]) {
                require(k >= 0 && k < users, "ClusterAssignment: user index out of range");
                require(a.cluster_of[k] < 0, "ClusterAssignment: clusters must be disjoint");
                a.cluster_of[k] = static_cast<int>(c);
            }
        a.validate();
        return a;
    }

    static ClusterAssignment singletons(int users) {
        ClusterAssignment a{std::vector<int>(users), users};
        std::iota(a.cluster_of.begin(), a.cluster_of.end(), 0);
        return a;
    }

    static ClusterAssignment single(int users) { return {std::vector<int>(users, 0), 1}; }

    std::vector<int> members(int c) const {
        std::vector<int> m;
        for (int k = 0; k < users(); ++k)
            if (cluster_of[k] == c) m.push_back(k);
        return m;
    }

    void validate() const {
        require(count >= 1 && count <= std::max(1, users()), "ClusterAssignment: need 1 <= N_Cluster <= K");
        std::vector<int> sizes(count, 0);
        for (int c : cluster_of) {
            require(c >= 0 && c < count, "ClusterAssignment: every user needs a cluster");
            ++sizes[c];
        }
        for (int s : sizes) require(s > 0, "ClusterAssignment: empty cluster");
    }
};

struct BbNomaResult {
    RatePoint rates;          // R_{k,k}
    rmat cross;               // cross(k'', k) = R_{k'',k}
    bool sic_feasible = true;
    std::vector<std::pair<int, int>> violations;  // (decoder k'', signal k)
};

inline constexpr double sic_slack = 1e-12;

namespace detail {

inline void check_noma_dims(const cmat& h, const cmat& w, const rvec& powers, const rvec& noise) {
    require(w.rows() == h.rows() && w.cols() == h.cols(), "NOMA: one beamformer per user");
    require(powers.size() == h.cols() && noise.size() == h.cols(), "NOMA: one power and noise per user");
    for (int k = 0; k < powers.size(); ++k) require(powers(k) >= 0.0 && noise(k) > 0.0, "NOMA: bad power or noise");
}

}  // namespace detail

// H: N_BS x K channels h_k, W: N_BS x K beamformers w_k.
inline BbNomaResult bb_noma_rates(const cmat& h, const cmat& w, const rvec& powers, const SicOrdering& ord,
                                  const rvec& noise) {
    detail::check_noma_dims(h, w, powers, noise);
    require(ord.users() == h.cols(), "bb_noma_rates: ordering size mismatch");
    ord.validate();
    const int k_users = static_cast<int>(h.cols());
    const rmat gain = (h.adjoint() * w).cwiseAbs2();  // gain(k'', k) = |h_k''ᴴ w_k|²
    BbNomaResult out{RatePoint(k_users), rmat::Zero(k_users, k_users), true, {}};
    for (int dec = 0; dec < k_users; ++dec)
        for (int k = 0; k < k_users; ++k) {
            double interf = noise(dec);
            for (int j = 0; j < k_users; ++j)
                if (j != k && ord.alpha(k, j) == 1) interf += gain(dec, j) * powers(j);
            out.cross(dec, k) = shannon_rate(gain(dec, k) * powers(k) / interf);
        }
    for (int k = 0; k < k_users; ++k) out.rates[k] = out.cross(k, k);
    for (int dec = 0; dec < k_users; ++dec)
        for (int k = 0; k < k_users; ++k) {
            if (dec == k || ord.alpha(dec, k) != 0) continue;
            // a signal that never reaches the decoder needs no cancelling
            if (gain(dec, k) * powers(k) == 0.0) continue;
            if (!(out.cross(dec, k) > out.rates[k] - sic_slack)) {
                out.sic_feasible = false;
                out.violations.emplace_back(dec, k);
            }
        }
    return out;
}

// Per-user beamformers; intra-cluster interference masked by alpha, all
// out-of-cluster signals treated as noise.
inline RatePoint clusterfree_rates(const cmat& h, const cmat& w, const rvec& powers, const ClusterAssignment& asg,
                                   const SicOrdering& ord, const rvec& noise) {
    detail::check_noma_dims(h, w, powers, noise);
    require(asg.users() == h.cols() && ord.users() == h.cols(), "clusterfree_rates: size mismatch");
    asg.validate();
    for (int c = 0; c < asg.count; ++c) ord.validate(asg.members(c));
    const int k_users = static_cast<int>(h.cols());
    const rmat gain = (h.adjoint() * w).cwiseAbs2();
    RatePoint r(k_users);
    for (int k = 0; k < k_users; ++k) {
        double interf = noise(k);
        for (int j = 0; j < k_users; ++j) {
            if (j == k) continue;
            const bool same = asg.cluster_of[j] == asg.cluster_of[k];
            if (!same || ord.alpha(k, j) == 1) interf += gain(k, j) * powers(j);
        }
        r[k] = shannon_rate(gain(k, k) * powers(k) / interf);
    }
    return r;
}

// One beamformer per cluster (columns of wc, N_BS x N_Cluster).
inline RatePoint cluster_noma_rates(const cmat& h, const cmat& wc, const rvec& powers, const ClusterAssignment& asg,
                                    const SicOrdering& ord, const rvec& noise) {
    require(wc.cols() == asg.count && wc.rows() == h.rows(), "cluster_noma_rates: one beamformer per cluster");
    require(asg.users() == h.cols(), "cluster_noma_rates: size mismatch");
    cmat w(h.rows(), h.cols());
    for (int k = 0; k < h.cols(); ++k) w.col(k) = wc.col(asg.cluster_of[k]);
    return clusterfree_rates(h, w, powers, asg, ord, noise);
}

// Weakest effective gain |h_kᴴ w_k|² is removed first; the strongest user
// cancels everyone else in its group.
inline SicOrdering order_by_effective_gain(const cmat& h, const cmat& w, const ClusterAssignment& asg) {
    std::vector<std::vector<int>> orders;
    for (int c = 0; c < asg.count; ++c) {
        auto m = asg.members(c);
        std::stable_sort(m.begin(), m.end(), [&](int a, int b) {
            return std::norm(h.col(a).dot(w.col(a))) < std::norm(h.col(b).dot(w.col(b)));
        });
        orders.push_back(m);
    }
    return SicOrdering::from_cluster_orders(static_cast<int>(h.cols()), orders);
}

// Greedy grouping: a user joins the first cluster whose leader it is
// correlated with above `threshold`, otherwise it opens a new cluster.
inline ClusterAssignment cluster_by_correlation(const cmat& h, double threshold) {
    require(threshold >= 0.0 && threshold <= 1.0, "cluster_by_correlation: threshold must lie in [0, 1]");
    std::vector<int> leaders;
    ClusterAssignment a{std::vector<int>(h.cols(), -1), 0};
    for (int k = 0; k < h.cols(); ++k) {
        for (std::size_t c = 0; c < leaders.size(); ++c)
            if (collinearity(h.col(k), h.col(leaders[c])) >= threshold) {
                a.cluster_of[k] = static_cast<int>(c);
                break;
            }
        if (a.cluster_of[k] < 0) {
            a.cluster_of[k] = static_cast<int>(leaders.size());
            leaders.push_back(k);
        }
    }
    a.count = static_cast<int>(leaders.size());
    return a;
}

// --- inter-cluster zero forcing --------------------------------------------

struct ZfReport {
    bool feasible = false;
    std::string violated;  // the dimension condition that fails, if any
    cmat vectors;          // beamformers (BS side) or equalizers (user side), one per column
    double max_residual = 0.0;
};

namespace detail {

// Orthonormal basis of the null space of m (columns), rank decided at tol.
inline cmat null_space(const cmat& m, int dim, double tol = 1e-10) {
    if (m.rows() == 0) return identity(dim);
    Eigen::JacobiSVD<cmat> svd(m, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double scale = s.size() > 0 ? s(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > tol * std::max(1.0, scale)) ++rank;
    return svd.matrixV().rightCols(dim - rank);
}

inline bool rank_one_clusters(const cmat& h, const ClusterAssignment& asg) {
    for (int c = 0; c < asg.count; ++c) {
        const auto m = asg.members(c);
        for (std::size_t i = 1; i < m.size(); ++i)
            if (collinearity(h.col(m[0]), h.col(m[i])) < 1.0 - 1e-9) return false;
    }
    return true;
}

}  // namespace detail

// BS-side design: w_c orthogonal to every out-of-cluster channel, steered to
// the principal direction of its own cluster inside that null space.
inline ZfReport intercluster_zf_bs(const cmat& h, const ClusterAssignment& asg) {
    require(asg.users() == h.cols(), "intercluster_zf_bs: size mismatch");
    asg.validate();
    const int n = static_cast<int>(h.rows());
    ZfReport rep{true, "", cmat::Zero(n, asg.count), 0.0};
    const bool rank_one = detail::rank_one_clusters(h, asg);
    int worst = 0;
    for (int c = 0; c < asg.count; ++c) worst = std::max(worst, asg.users() - static_cast<int>(asg.members(c).size()));
    for (int c = 0; c < asg.count; ++c) {
        std::vector<int> others;
        for (int k = 0; k < asg.users(); ++k)
            if (asg.cluster_of[k] != c) others.push_back(k);
        cmat stacked(static_cast<int>(others.size()), n);
        for (std::size_t i = 0; i < others.size(); ++i) stacked.row(i) = h.col(others[i]).adjoint();
        const cmat ns = detail::null_space(stacked, n);
        cmat own = cmat::Zero(ns.cols(), ns.cols());
        for (int k : asg.members(c)) {
            const cvec proj = ns.adjoint() * h.col(k);
            own += proj * proj.adjoint();
        }
        if (ns.cols() == 0 || own.norm() <= 1e-12 * h.squaredNorm()) {
            rep.feasible = false;
            rep.violated = rank_one ? "N_BS >= N_Cluster (rank-one clusters): " + std::to_string(n) + " < " +
                                          std::to_string(asg.count)
                                    : "N_BS >= max_c sum_{c' != c} K_c': " + std::to_string(n) + " < " +
                                          std::to_string(worst);
            return rep;
        }
        const auto es = hermitian_eig(own);
        rep.vectors.col(c) = (ns * es.eigenvectors().col(ns.cols() - 1)).normalized();
    }
    for (int k = 0; k < asg.users(); ++k)
        for (int c = 0; c < asg.count; ++c)
            if (asg.cluster_of[k] != c)
                rep.max_residual = std::max(rep.max_residual, std::abs(h.col(k).dot(rep.vectors.col(c))));
    return rep;
}

// User-side design: user k with channel H_k (N_BS x N_U, received signal
// H_kᴴ x) picks v_k orthogonal to H_kᴴ w_c' for every other cluster c'.
inline ZfReport intercluster_zf_user(const std::vector<cmat>& h, const cmat& wc, const ClusterAssignment& asg) {
    require(asg.users() == static_cast<int>(h.size()), "intercluster_zf_user: one channel per user");
    require(wc.cols() == asg.count, "intercluster_zf_user: one beamformer per cluster");
    asg.validate();
    const int n_u = h.empty() ? 0 : static_cast<int>(h.front().cols());
    ZfReport rep{true, "", cmat::Zero(n_u, asg.users()), 0.0};
    if (n_u < asg.count) {
        rep.feasible = false;
        rep.violated = "N_U >= N_Cluster: " + std::to_string(n_u) + " < " + std::to_string(asg.count);
        return rep;
    }
    for (int k = 0; k < asg.users(); ++k) {
        require(h[k].cols() == n_u && h[k].rows() == wc.rows(), "intercluster_zf_user: channel shape mismatch");
        const int c = asg.cluster_of[k];
        cmat stacked(asg.count - 1, n_u);
        int row = 0;
        for (int cp = 0; cp < asg.count; ++cp)
            if (cp != c) stacked.row(row++) = (h[k].adjoint() * wc.col(cp)).adjoint();
        const cmat ns = detail::null_space(stacked, n_u);
        const cvec target = h[k].adjoint() * wc.col(c);
        const cvec v = ns * (ns.adjoint() * target);
        if (ns.cols() == 0 || v.norm() <= 1e-12 * std::max(1.0, target.norm())) {
            rep.feasible = false;
            rep.violated = "user " + std::to_string(k) + ": own-cluster signal lies in the interference span";
            return rep;
        }
        rep.vectors.col(k) = v.normalized();
        for (int cp = 0; cp < asg.count; ++cp)
            if (cp != c)
                rep.max_residual =
                    std::max(rep.max_residual, std::abs(rep.vectors.col(k).dot(h[k].adjoint() * wc.col(cp))));
    }
    return rep;
}

}  // namespace malab
