#include "malab/nearfield.hpp"

#include <gtest/gtest.h>

using namespace malab;

namespace {

constexpr double lambda = 0.01;
constexpr double spacing = 0.005;

double rel_err(double a, double b) { return std::abs(a / b - 1.0); }

// Trapezoid on a fine uniform grid, independent of the adaptive Simpson path.
template <class F>
cd trapezoid(const F& f, double a, double b, int n) {
    const double h = (b - a) / n;
    cd s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) s += f(a + i * h);
    return s * h;
}

}  // namespace

TEST(AnalogSnr, HighPrecisionValue) {
    // 40-digit summation reference
    const ArrayGeometry g(201, spacing, lambda);
    EXPECT_NEAR(analog_snr_direct(g, 10.0), 2.0083105244687870236, 1e-14);
}

TEST(AnalogSnr, SingleElementAndLinearity) {
    const ArrayGeometry g1(1, spacing, lambda);
    const LinkBudget lb{3.0, 0.5, 2.0, 0.25};
    EXPECT_NEAR(analog_snr_direct(g1, 7.0, lb), 3.0 * 0.5 * 4.0 / (0.25 * 49.0), 1e-14);
    const ArrayGeometry g(101, spacing, lambda);
    LinkBudget twice = lb;
    twice.power *= 2.0;
    EXPECT_DOUBLE_EQ(analog_snr_direct(g, 7.0, twice), 2.0 * analog_snr_direct(g, 7.0, lb));
}

TEST(AnalogSnr, BroadsideOverloadAgrees) {
    const ArrayGeometry g(151, spacing, lambda);
    EXPECT_NEAR(analog_snr_direct(g, Position{4.0, pi / 2}), analog_snr_direct(g, 4.0), 1e-12);
}

TEST(AnalogSnr, AsinhIdentity) {
    EXPECT_NEAR(std::log(1.0 + std::sqrt(2.0)), 0.88137358702, 1e-11);
    EXPECT_NEAR(std::asinh(1.0), 0.88137358702, 1e-11);
}

TEST(AnalogSnr, SquaredVariantTracksDirectSum) {
    // r/d = 2000: continuum error below 1% once N >= 201, up to N_rad
    const double r = 10.0;
    const double nr = n_rad(r, spacing, lambda);
    ASSERT_GT(nr, 201.0);
    for (int n = 201; n <= nr; n += 2) {
        const ArrayGeometry g(n, spacing, lambda);
        const double direct = analog_snr_direct(g, r);
        EXPECT_LT(rel_err(analog_snr_closed(g, r, ClosedFormVariant::squared), direct), 0.01) << n;
        EXPECT_GT(rel_err(analog_snr_closed(g, r, ClosedFormVariant::printed), direct), 1.0) << n;
    }
}

TEST(AnalogSnr, SquaredVariantErrorIsDiscretization) {
    // for N d << r the squared form is (N-1)²/N² of the direct sum
    for (int n : {3, 11, 59, 109, 173}) {
        const ArrayGeometry g(n, spacing, lambda);
        const double ratio = analog_snr_closed(g, 100.0, ClosedFormVariant::squared) / analog_snr_direct(g, 100.0);
        const double expect = std::pow((n - 1.0) / n, 2);
        EXPECT_NEAR(ratio, expect, 1e-4) << n;
    }
}

TEST(AnalogSnr, DecaysForHugeArrays) {
    // small r/d so that N = 10⁶ lies far past the peak of both forms
    const double r = 2.0 * spacing;
    for (auto v : {ClosedFormVariant::printed, ClosedFormVariant::squared}) {
        double peak = 0.0;
        for (int n = 1; n <= 20001; n += 2) peak = std::max(peak, analog_snr_closed(ArrayGeometry(n, spacing, lambda), r, v));
        const double tail = analog_snr_closed(ArrayGeometry(1000001, spacing, lambda), r, v);
        EXPECT_LT(tail, 1e-3 * peak) << to_string(v);
    }
    // the direct sum decays as well
    const auto sweep = snr_sweep_extrema(spacing, lambda, r, 20001);
    EXPECT_LT(analog_snr_direct(ArrayGeometry(1000001, spacing, lambda), r), 1e-3 * sweep.snr_max);
}

TEST(SnrSweep, RadiatingBoundSubstitution) {
    const double expect = std::cbrt(0.01) / 0.005 * std::pow(10.0 / 0.62, 2.0 / 3.0);
    EXPECT_NEAR(n_rad(10.0, 0.005, 0.01), expect, 1e-12);
    EXPECT_NEAR(expect, 275.0651284929548, 1e-9);
}

TEST(SnrSweep, RisesThenFalls) {
    const auto s = snr_sweep_extrema(spacing, lambda, 10.0, 40001);
    EXPECT_GT(s.snr_max, s.snr[1]);       // N = 3
    EXPECT_GT(s.snr_max, s.snr.back());  // N = N_max
    EXPECT_EQ(s.direction_changes, 1);
    // peak sits near the squared-form optimum, far from the quoted one
    EXPECT_LT(std::abs(s.argmax - s.squared_form_n_star) / s.squared_form_n_star, 0.01);
    EXPECT_NEAR(s.quoted_n_star, 3.728 * 10.0 / spacing, 1e-9);
    // agrees with per-N direct evaluation
    for (std::size_t i = 0; i < s.antennas.size(); i += 997)
        EXPECT_NEAR(s.snr[i], analog_snr_direct(ArrayGeometry(s.antennas[i], spacing, lambda), 10.0), 1e-12 * s.snr[i]);
}

TEST(SnrSweep, UnimodalUpToTenTimesRadiatingBound) {
    for (double ratio : {100.0, 200.0, 500.0, 1000.0, 2000.0}) {
        const double r = ratio * spacing;
        const int n_max = static_cast<int>(10.0 * n_rad(r, spacing, lambda)) | 1;
        EXPECT_LE(snr_sweep_extrema(spacing, lambda, r, n_max).direction_changes, 1) << ratio;
    }
}

TEST(SnrSweep, QuotedOptimumConstant) {
    EXPECT_NEAR(asinh_ratio(quoted_x_star), 0.740936715604, 1e-11);
    const double xs = squared_form_x_star();
    EXPECT_NEAR(2.0 * xs, std::sqrt(1.0 + xs * xs) * std::asinh(xs), 1e-12);
    // x* maximizes asinh(x)²/x
    const auto f = [](double x) { return std::pow(std::asinh(x), 2) / x; };
    EXPECT_GT(f(xs), f(xs * 0.99));
    EXPECT_GT(f(xs), f(xs * 1.01));
}

TEST(HbSdma, SingleUserReducesToAnalogSnr) {
    const ArrayGeometry g(301, spacing, lambda);
    const LinkBudget lb{10.0, 1.0, 1.0, 1.0};
    NearfieldOptions opt;
    opt.uniform_power_factor = 0.0;
    const auto res = nearfield_hb_sdma(g, {Position{8.0, pi / 2}}, {1.0}, HbChannel::nearfield_exact, lb, opt);
    EXPECT_NEAR(res.link.sinr(0), analog_snr_direct(g, 8.0, lb), 1e-10 * res.link.sinr(0));
    EXPECT_NEAR(res.link.sum_rate, shannon_rate(analog_snr_direct(g, 8.0, lb)), 1e-10);
}

TEST(HbSdma, ColocatedUsersCannotBeSeparated) {
    const ArrayGeometry g(257, spacing, lambda);
    const LinkBudget lb{10.0, 1.0, 1.0, 1.0};
    const Position p{15.0, pi / 2};
    for (auto model : {HbChannel::nearfield_exact, HbChannel::farfield}) {
        const auto res = nearfield_hb_sdma(g, {p, p}, {1.0, 1.0}, model, lb);
        const auto one = nearfield_hb_sdma(g, {p}, {1.0}, model, LinkBudget{5.0, 1.0, 1.0, 1.0});
        // both streams share one beam, each at half power
        const double gamma = one.link.sinr(0);
        const double shared = 2.0 * shannon_rate(gamma / (gamma + 1.0));
        EXPECT_LT(rel_err(res.link.sum_rate, shared), 0.05);
        EXPECT_LE(res.link.sum_rate, 2.0);
    }
}

TEST(HbSdma, RequiresOneChainPerUser) {
    const ArrayGeometry g(65, spacing, lambda);
    EXPECT_THROW(nearfield_hb_sdma(g, {Position{5.0, pi / 2}, Position{9.0, pi / 2}}, {1.0, 1.0},
                                   HbChannel::nearfield_exact, {}, {}, 3),
                 InvalidArgument);
}

TEST(HbSdma, ConfigSatisfiesHybridConstraints) {
    const ArrayGeometry g(129, spacing, lambda);
    const auto res = nearfield_hb_sdma(g, {Position{50.0, pi / 2}, Position{20.0, pi / 2}}, {1.0, 1.0},
                                       HbChannel::nearfield_exact, LinkBudget{10.0, 1.0, 1.0, 1.0});
    EXPECT_NO_THROW(res.config.validate());
    EXPECT_EQ(res.config.analog.cols(), 2);
}

TEST(Cap, MatchedCurrentPower) {
    const CapAperture ap{2.0, lambda, 64};
    for (double share : {0.5, 1.0, 3.0}) {
        const auto j = cap_matched_current(ap, Position{10.0, pi / 2}, share);
        const double used = ap.integrate([&](double x) { return cd(std::norm(j(x))); }).value.real();
        EXPECT_NEAR(used, share, 1e-6);
    }
}

TEST(Cap, MatchedCurrentConjugatePhase) {
    const CapAperture ap{1.0, lambda, 64};
    const Position pos{6.0, 1.2};
    const auto j = cap_matched_current(ap, pos, 1.0);
    for (double x : {-0.5, -0.13, 0.0, 0.31, 0.5}) {
        const double c = pos.range * std::cos(pos.theta) - x, s = pos.range * std::sin(pos.theta);
        const double expect = 2.0 * pi * std::sqrt(c * c + s * s) / lambda;
        EXPECT_NEAR(std::remainder(std::arg(j(x)) - expect, 2.0 * pi), 0.0, 1e-8);
    }
}

TEST(Cap, SingleUserSinr) {
    const CapAperture ap{2.0, lambda, 64};
    const Position p{10.0, pi / 2};
    const double power = 4.0, noise = 1e-6;
    const auto res = cap_sinr(ap, {cap_matched_current(ap, p, power)}, {p}, {noise}, power);
    EXPECT_NEAR(res.sinr(0), power * green_energy(ap, p) / noise, 1e-6 * res.sinr(0));
}

TEST(Cap, ZeroCurrentUserAndBudget) {
    const CapAperture ap{2.0, lambda, 64};
    const Position p1{10.0, pi / 2}, p2{20.0, pi / 2};
    const auto j1 = cap_matched_current(ap, p1, 1.0);
    const auto j2 = cap_matched_current(ap, p2, 0.0);
    const auto res = cap_sinr(ap, {j1, j2}, {p1, p2}, {1e-6, 1e-6}, 1.0);
    EXPECT_EQ(res.sinr(1), 0.0);
    EXPECT_THROW(cap_sinr(ap, {j1, cap_matched_current(ap, p2, 1.0)}, {p1, p2}, {1e-6, 1e-6}, 1.0), InvalidArgument);
}

TEST(Cap, CrossTermAgainstIndependentQuadrature) {
    const CapAperture ap{2.0, lambda, 64};
    const Position p1{10.0, pi / 2}, p2{20.0, pi / 2};
    const auto res =
        cap_sinr(ap, {cap_matched_current(ap, p1, 1.0), cap_matched_current(ap, p2, 1.0)}, {p1, p2}, {1.0, 1.0});
    const double ratio = res.coupling(0, 1) / res.coupling(0, 0);
    const auto g1 = [&](double x) { return cap_green(x, p1, lambda); };
    const auto g2 = [&](double x) { return cap_green(x, p2, lambda); };
    const int n = 400000;
    const double e1 = trapezoid([&](double x) { return cd(std::norm(g1(x))); }, -1.0, 1.0, n).real();
    const double e2 = trapezoid([&](double x) { return cd(std::norm(g2(x))); }, -1.0, 1.0, n).real();
    const double oracle =
        std::norm(trapezoid([&](double x) { return g1(x) * std::conj(g2(x)); }, -1.0, 1.0, n)) / (e1 * e2);
    EXPECT_NEAR(ratio, oracle, 1e-5);
    // 2 m is not yet enough for 2% isolation; 4 m is
    EXPECT_NEAR(ratio, 0.0623, 5e-4);
    const CapAperture wide{4.0, lambda, 64};
    const auto r3 =
        cap_sinr(wide, {cap_matched_current(wide, p1, 1.0), cap_matched_current(wide, p2, 1.0)}, {p1, p2}, {1.0, 1.0});
    EXPECT_LT(r3.coupling(0, 1) / r3.coupling(0, 0), 0.02);
}

TEST(Cap, ApertureGainIsMonotone) {
    const Position p{10.0, pi / 2};
    double prev = 0.0;
    for (double a : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double e = green_energy(CapAperture{a, lambda, 64}, p);
        EXPECT_GT(e, prev);
        prev = e;
    }
}

TEST(Cap, QuadratureConverged) {
    const CapAperture ap{2.0, lambda, 64};
    const Position p1{10.0, pi / 2}, p2{20.0, pi / 2};
    const std::vector<CapCurrent> cur{cap_matched_current(ap, p1, 0.5), cap_matched_current(ap, p2, 0.5)};
    const auto coarse = cap_sinr(ap, cur, {p1, p2}, {1e-7, 1e-7});
    EXPECT_LT(coarse.max_rel_change, 1e-6);
    CapAperture fine = ap;
    fine.min_panels = 2 * coarse.panels;
    const auto refined = cap_sinr(fine, cur, {p1, p2}, {1e-7, 1e-7});
    for (int k = 0; k < 2; ++k) EXPECT_LT(rel_err(refined.sinr(k), coarse.sinr(k)), 1e-6);
}

TEST(Rdma, SameAngleUsersSeparateByRange) {
    const Position p1{10.0, pi / 2}, p2{20.0, pi / 2};
    // continuous aperture, matched currents
    const CapAperture ap{2.0, lambda, 64};
    const auto cap =
        cap_sinr(ap, {cap_matched_current(ap, p1, 1.0), cap_matched_current(ap, p2, 1.0)}, {p1, p2}, {1.0, 1.0});
    EXPECT_LT(cap.coupling(1, 0) / cap.coupling(1, 1), 0.1);
    // discrete array with exact channels, MRT: the leakage falls as N grows
    const double nr_near = n_rad(p1.range, spacing, lambda);
    const double nr_far = n_rad(p2.range, spacing, lambda);
    const auto leakage = [&](double nr) {
        const ArrayGeometry g(static_cast<int>(nr) | 1, spacing, lambda);
        NearfieldOptions opt;
        opt.uniform_power_factor = 0.0;
        const cvec h1 = nearfield_spd(g, p1, {}, NearfieldMode::exact, opt).entries;
        const cvec h2 = nearfield_spd(g, p2, {}, NearfieldMode::exact, opt).entries;
        return std::pow(correlation_rho(h1, h2), 2);
    };
    // at the nearer user's bound (N = 275) the leakage is 0.122
    EXPECT_NEAR(leakage(nr_near), 0.1223, 1e-3);
    EXPECT_LT(leakage(nr_far), 0.1);
}
