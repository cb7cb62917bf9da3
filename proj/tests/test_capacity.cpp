#include "malab/capacity.hpp"

#include <gtest/gtest.h>

using namespace malab;

namespace {

std::vector<cmat> random_channels(std::uint64_t seed, int k, int rows, int cols) {
    std::vector<cmat> h;
    for (int i = 0; i < k; ++i) {
        Rng r(seed, i);
        h.push_back(r.cnormal_mat(rows, cols));
    }
    return h;
}

VectorMac random_mac(std::uint64_t seed, int k, int n_bs, int n_u) {
    VectorMac m{random_channels(seed, k, n_bs, n_u), {}, 0.7};
    for (int i = 0; i < k; ++i) {
        Rng r(seed + 1000, i);
        const cmat a = r.cnormal_mat(n_u, n_u);
        m.covariances.push_back(a * a.adjoint());
    }
    return m;
}

}  // namespace

TEST(ScalarBc, SingleUser) {
    const auto reg = scalar_bc_region(3.0, {1.0});
    ASSERT_EQ(reg.points.size(), 1u);
    EXPECT_DOUBLE_EQ(reg.points[0][0], 2.0);
}

TEST(ScalarBc, CornerGivesStrongUserEverything) {
    const auto r = scalar_bc_rates(10.0, {1.0, 5.0}, {1.0, 0.0});
    EXPECT_DOUBLE_EQ(r[0], shannon_rate(10.0));
    EXPECT_EQ(r[1], 0.0);
}

TEST(ScalarBc, RejectsUnsortedNoise) { EXPECT_THROW(scalar_bc_region(1.0, {5.0, 1.0}), InvalidArgument); }

TEST(ScalarBc, DominatesTimeSharing) {
    const auto bc = scalar_bc_region(10.0, {1.0, 5.0}, 201);
    const auto oma = oma_region({shannon_rate(10.0), shannon_rate(2.0)}, 101);
    for (const auto& p : oma.points) {
        bool ok = false;
        for (const auto& q : bc.points) ok = ok || dominates(q, p);
        EXPECT_TRUE(ok);
    }
}

TEST(ScalarBc, ThreeUserLatticeDominatesTimeSharing) {
    const std::vector<double> noise{0.5, 1.0, 4.0};
    const auto bc = scalar_bc_region(8.0, noise, 41);
    std::vector<double> single;
    for (double n : noise) single.push_back(shannon_rate(8.0 / n));
    for (const auto& p : oma_region(single, 11).points) {
        bool ok = false;
        for (const auto& q : bc.points) ok = ok || dominates(q, p);
        EXPECT_TRUE(ok);
    }
}

TEST(ScalarBc, BoundaryMonotoneInShare) {
    const std::vector<double> noise{1.0, 3.0};
    RatePoint prev = scalar_bc_rates(10.0, noise, {0.0, 1.0});
    for (int i = 1; i <= 100; ++i) {
        const double a = i / 100.0;
        const auto r = scalar_bc_rates(10.0, noise, {a, 1.0 - a});
        EXPECT_GT(r[0], prev[0]);
        EXPECT_LE(r[1], prev[1]);
        prev = r;
    }
}

TEST(ScalarMac, Membership) {
    const std::vector<double> p{4.0, 2.0};
    const double n = 1.0;
    EXPECT_TRUE(scalar_mac_region_contains(p, n, {0.0, 0.0}));
    EXPECT_FALSE(scalar_mac_region_contains({3.0}, n, {2.0 + 1e-9}));
    const RatePoint corner{shannon_rate(4.0 / (1.0 + 2.0)), shannon_rate(2.0)};
    EXPECT_TRUE(scalar_mac_region_contains(p, n, corner, 1e-12));
    EXPECT_FALSE(scalar_mac_region_contains(p, n, {corner[0] + 1e-9, corner[1]}));
    EXPECT_FALSE(scalar_mac_region_contains(p, n, {corner[0], corner[1] + 1e-9}));
    EXPECT_THROW(scalar_mac_region_contains(std::vector<double>(21, 1.0), n, RatePoint(21, 0.0)), InvalidArgument);
}

TEST(ScalarMac, ContainsTimeSharing) {
    const std::vector<double> p{4.0, 2.0, 1.0};
    std::vector<double> single;
    for (double x : p) single.push_back(shannon_rate(x));
    for (const auto& q : oma_region(single, 21).points) EXPECT_TRUE(scalar_mac_region_contains(p, 1.0, q, 1e-9));
}

TEST(Oma, CornersAndSymmetry) {
    const auto reg = oma_region({3.0, 3.0}, 3);
    ASSERT_EQ(reg.points.size(), 3u);
    bool saw_corner = false, saw_half = false;
    for (const auto& p : reg.points) {
        if (p[0] == 3.0 && p[1] == 0.0) saw_corner = true;
        if (p[0] == 1.5) {
            saw_half = true;
            EXPECT_DOUBLE_EQ(p[1], 1.5);
        }
    }
    EXPECT_TRUE(saw_corner && saw_half);
}

TEST(VectorMacCorner, SingleUser) {
    auto m = random_mac(3, 1, 3, 2);
    const auto r = mac_sic_corner(m, {0});
    const cmat& h = m.channels[0];
    EXPECT_NEAR(r[0], logdet2(identity(3) + h * m.covariances[0] * h.adjoint() / m.noise), 1e-12);
}

TEST(VectorMacCorner, SumRateInvariantOverOrders) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = random_mac(seed, 4, 4, 2);
        std::vector<int> order{0, 1, 2, 3};
        const double ref = mac_sum_rate(m);
        do {
            const auto r = mac_sic_corner(m, order);
            EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), ref, 1e-12);
        } while (std::next_permutation(order.begin(), order.end()));
    }
}

TEST(VectorMacCorner, ZeroCovarianceUserDropsOut) {
    auto m = random_mac(5, 3, 3, 1);
    m.covariances[1].setZero();
    const auto r = mac_sic_corner(m, {0, 1, 2});
    EXPECT_NEAR(r[1], 0.0, 1e-14);
    VectorMac reduced{{m.channels[0], m.channels[2]}, {m.covariances[0], m.covariances[2]}, m.noise};
    const auto rr = mac_sic_corner(reduced, {0, 1});
    EXPECT_NEAR(r[0], rr[0], 1e-12);
    EXPECT_NEAR(r[2], rr[1], 1e-12);
}

TEST(VectorMacCorner, RejectsNonPermutation) {
    const auto m = random_mac(1, 2, 2, 1);
    EXPECT_THROW(mac_sic_corner(m, {0, 0}), InvalidArgument);
}

TEST(Iwf, SingleUserIsWaterFilling) {
    const auto h = random_channels(8, 1, 3, 3);
    const auto res = iwf_mac(h, {5.0}, 0.5);
    const rvec lam = hermitian_eig(h[0].adjoint() * h[0] / 0.5).eigenvalues();
    const auto wf = water_fill(lam, 5.0);
    double ref = 0.0;
    for (int i = 0; i < 3; ++i) ref += std::log2(1.0 + lam(i) * wf.powers(i));
    EXPECT_NEAR(res.sum_capacity, ref, 1e-9);
}

TEST(Iwf, MisoMatchesPowerGrid) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto h = random_channels(100 + seed, 2, 2, 1);
        const std::vector<double> budgets{3.0, 1.5};
        const auto res = iwf_mac(h, budgets, 1.0);
        double best = 0.0;
        for (int i = 0; i <= 100; ++i)
            for (int j = 0; j <= 100; ++j) {
                const double p1 = budgets[0] * i / 100.0, p2 = budgets[1] * j / 100.0;
                const cmat z = identity(2) + p1 * h[0] * h[0].adjoint() + p2 * h[1] * h[1].adjoint();
                best = std::max(best, logdet2(z));
            }
        EXPECT_NEAR(res.sum_capacity, best, 1e-3);
    }
}

TEST(Iwf, MonotoneBudgetsAndKkt) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto h = random_channels(200 + seed, 3, 4, 2);
        const std::vector<double> budgets{2.0, 1.0, 4.0};
        const auto res = iwf_mac(h, budgets, 1.0);
        for (std::size_t i = 1; i < res.objective_history.size(); ++i)
            EXPECT_GE(res.objective_history[i], res.objective_history[i - 1] - 1e-12);
        for (int k = 0; k < 3; ++k) {
            EXPECT_NEAR(res.covariances[k].trace().real(), budgets[k], 1e-9);
            EXPECT_GE(hermitian_eig(res.covariances[k]).eigenvalues().minCoeff(), -1e-12);
        }
        EXPECT_LT(res.kkt_residual, 1e-6);
    }
}

TEST(Iwf, BeatsRandomFeasibleCovariances) {
    const auto h = random_channels(300, 2, 3, 2);
    const std::vector<double> budgets{2.0, 2.0};
    const auto res = iwf_mac(h, budgets, 1.0);
    Rng r(301);
    for (int t = 0; t < 2000; ++t) {
        VectorMac m{h, {}, 1.0};
        for (int k = 0; k < 2; ++k) {
            const cmat a = r.cnormal_mat(2, 2);
            cmat c = a * a.adjoint();
            m.covariances.push_back(c * (budgets[k] / c.trace().real()));
        }
        EXPECT_LE(mac_sum_rate(m), res.sum_capacity + 1e-9);
    }
}

TEST(Iwf, OrthogonalUsersTransmitFullPower) {
    cmat h1 = cmat::Zero(2, 1), h2 = cmat::Zero(2, 1);
    h1(0, 0) = 1.5;
    h2(1, 0) = cd(0, 0.5);
    const auto res = iwf_mac({h1, h2}, {2.0, 3.0}, 0.5);
    EXPECT_NEAR(res.sum_capacity, shannon_rate(2.0 * 2.25 / 0.5) + shannon_rate(3.0 * 0.25 / 0.5), 1e-9);
}

TEST(Iwf, ReportsNonConvergence) {
    const auto h = random_channels(400, 3, 4, 2);
    EXPECT_THROW(iwf_mac(h, {1.0, 1.0, 1.0}, 1.0, 1e-300, 2), NumericalError);
}

TEST(Dpc, SingleUser) {
    const auto h = random_channels(9, 1, 3, 2);
    Rng r(10);
    const cmat a = r.cnormal_mat(3, 3);
    cmat xi = a * a.adjoint();
    xi *= 2.0 / xi.trace().real();
    const DpcInstance inst{h, {xi}, {0.4}, 2.0};
    const auto rates = dpc_rates(inst, {0});
    EXPECT_NEAR(rates[0], logdet2(identity(2) + h[0].adjoint() * xi * h[0] / 0.4), 1e-12);
}

TEST(Dpc, LastEncodedSeesNoiseOnly) {
    const auto h = random_channels(11, 3, 3, 1);
    std::vector<cmat> xi;
    for (int k = 0; k < 3; ++k) {
        Rng r(12, k);
        const cvec v = r.cnormal_vec(3);
        xi.push_back(v * v.adjoint() / v.squaredNorm());
    }
    const DpcInstance inst{h, xi, {1.0, 1.0, 1.0}, 3.0};
    const auto rates = dpc_rates(inst, {2, 0, 1});
    EXPECT_NEAR(rates[1], logdet2(identity(1) + h[1].adjoint() * xi[1] * h[1]), 1e-12);
    // the first-encoded user sees both later codewords
    const cmat base = identity(1) + h[2].adjoint() * (xi[0] + xi[1]) * h[2];
    EXPECT_NEAR(rates[2], logdet2(base + h[2].adjoint() * xi[2] * h[2]) - logdet2(base), 1e-12);
}

TEST(Dpc, RejectsBudgetViolation) {
    const auto h = random_channels(13, 1, 2, 1);
    const DpcInstance inst{h, {identity(2)}, {1.0}, 1.0};
    EXPECT_THROW(dpc_rates(inst, {0}), InvalidArgument);
}

TEST(BcSumCapacity, MisoMatchesDualPowerGrid) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto h = random_channels(500 + seed, 2, 3, 1);
        const std::vector<double> noise{1.0, 0.5};
        const double p = 4.0;
        const auto res = bc_sum_capacity(h, noise, p);
        double best = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double q1 = p * i / 100.0;
            const cmat z = identity(3) + q1 * h[0] * h[0].adjoint() / noise[0] +
                           (p - q1) * h[1] * h[1].adjoint() / noise[1];
            best = std::max(best, logdet2(z));
        }
        EXPECT_GE(res.value, best - 1e-9);
        EXPECT_NEAR(res.value, best, 1e-3);
        // at least the best single-user MRT rate
        for (int k = 0; k < 2; ++k) EXPECT_GE(res.value, shannon_rate(p * h[k].squaredNorm() / noise[k]) - 1e-9);
        double used = 0.0;
        for (const auto& q : res.dual_covariances) used += q.trace().real();
        EXPECT_NEAR(used, p, 1e-9);
    }
}
