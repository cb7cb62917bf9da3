#pragma once
// Experiment registry. Each entry parses its own keys from the scenario file
// and returns a runner; the runner is a pure function of (parameters, seed).

#include "malab/capacity.hpp"
#include "malab/channels.hpp"
#include "malab/cli/config.hpp"
#include "malab/cli/table.hpp"
#include "malab/isac.hpp"
#include "malab/nearfield.hpp"
#include "malab/noma.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <thread>

namespace malab::cli {

struct RunContext {
    std::uint64_t seed = 0;
    int threads = 1;
};

// Evaluates fn(0..n-1) on up to `threads` workers. Results land in index
// order, and the exception of the lowest failing index is rethrown, so the
// worker count never changes the outcome.
template <class T, class F>
std::vector<T> parallel_map(int n, int threads, const F& fn) {
    std::vector<std::optional<T>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int workers = std::max(1, std::min(threads, n));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    std::vector<T> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

using Runner = std::function<ResultTable(const RunContext&)>;

struct Experiment {
    std::string name;
    std::string description;
    std::function<Runner(Reader&)> prepare;
};

namespace detail {

inline std::vector<std::string> rate_columns(std::vector<std::string> head, int users) {
    for (int k = 1; k <= users; ++k) head.push_back("R_" + std::to_string(k));
    return head;
}

inline std::vector<Position> read_positions(Reader& r, const std::string& key) {
    std::vector<Position> out;
    for (auto& u : r.blocks(key)) {
        const double range = u.quantity("range", Dimension::length);
        const double angle = u.quantity("angle", Dimension::angle);
        u.finish();
        if (!(range > 0.0)) u.fail("range", "must be > 0");
        out.push_back({range > 0.0 ? range : 1.0, angle});
    }
    if (out.empty()) r.fail(key, "at least one user is required");
    return out;
}

inline std::vector<Target> read_targets(Reader& r, const std::string& key) {
    std::vector<Target> out;
    for (auto& t : r.blocks(key)) {
        Target x{t.quantity("angle", Dimension::angle), t.number("variance", 1.0)};
        t.finish();
        if (!(x.variance > 0.0)) t.fail("variance", "must be > 0");
        out.push_back(x);
    }
    if (out.empty()) r.fail(key, "at least one target is required");
    return out;
}

inline int positive(Reader& r, const std::string& key, std::optional<std::int64_t> fallback = std::nullopt,
                    std::int64_t lo = 1) {
    const auto v = r.integer(key, fallback);
    if (v < lo) {
        r.fail(key, "must be >= " + std::to_string(lo));
        return static_cast<int>(lo);
    }
    return static_cast<int>(v);
}

inline double positive_quantity(Reader& r, const std::string& key, Dimension dim,
                                std::optional<double> fallback = std::nullopt) {
    const double v = r.quantity(key, dim, fallback);
    if (!(v > 0.0)) {
        if (r.has(key) || fallback) r.fail(key, "must be > 0");
        return 1.0;
    }
    return v;
}

// Offsets SNR-like sweeps: noise is unit, so the ratio is the power.
inline std::vector<double> snr_sweep(Reader& r, const std::string& key, std::vector<double> fallback_db) {
    std::vector<double> lin;
    for (double db : fallback_db) lin.push_back(db_to_linear(db));
    auto v = r.quantities(key, Dimension::ratio, lin);
    for (double x : v)
        if (!(x > 0.0)) r.fail(key, "SNR values must be > 0 (linear)");
    return v;
}

inline std::string join_order(const std::vector<int>& order) {
    std::string s;
    for (std::size_t i = 0; i < order.size(); ++i) s += (i ? "-" : "") + std::to_string(order[i] + 1);
    return s;
}

// --- bc-region --------------------------------------------------------------

inline Runner prepare_bc_region(Reader& r) {
    const double power = positive_quantity(r, "power", Dimension::power);
    const auto noise = r.quantities("noise", Dimension::power);
    const int resolution = positive(r, "resolution", 201, 2);
    const int oma_grid = positive(r, "oma_grid", 101, 2);
    if (noise.size() < 2) r.fail("noise", "need at least two users");
    if (!std::is_sorted(noise.begin(), noise.end())) r.fail("noise", "noise powers must be ascending (degraded order)");
    for (double n : noise)
        if (!(n > 0.0)) r.fail("noise", "noise powers must be > 0");
    return [=](const RunContext&) {
        const int k = static_cast<int>(noise.size());
        ResultTable t(rate_columns({"scheme", "point"}, k));
        const auto bc = scalar_bc_region(power, noise, resolution);
        for (std::size_t i = 0; i < bc.points.size(); ++i) {
            std::vector<Cell> row{std::string("noma"), static_cast<std::int64_t>(i)};
            for (double x : bc.points[i]) row.emplace_back(x);
            t.add_row(std::move(row));
        }
        std::vector<double> single;
        for (double n : noise) single.push_back(shannon_rate(power / n));
        const auto oma = oma_region(single, oma_grid);
        for (std::size_t i = 0; i < oma.points.size(); ++i) {
            std::vector<Cell> row{std::string("oma"), static_cast<std::int64_t>(i)};
            for (double x : oma.points[i]) row.emplace_back(x);
            t.add_row(std::move(row));
        }
        return t;
    };
}

// --- mac-region -------------------------------------------------------------

struct RandomMacParams {
    int users = 2;
    int receive = 2;
    int user_antennas = 1;
    std::vector<double> powers;
    double noise = 1.0;
    int instances = 1;
};

inline RandomMacParams read_random_mac(Reader& r) {
    RandomMacParams p;
    p.users = positive(r, "users");
    p.receive = positive(r, "receive_antennas");
    p.user_antennas = positive(r, "user_antennas", 1);
    p.powers = r.quantities("powers", Dimension::power);
    p.noise = positive_quantity(r, "noise", Dimension::power);
    p.instances = positive(r, "instances", 1);
    if (p.powers.size() == 1) p.powers.assign(p.users, p.powers[0]);
    if (static_cast<int>(p.powers.size()) != p.users) r.fail("powers", "give one power or one per user");
    for (double x : p.powers)
        if (!(x > 0.0)) r.fail("powers", "powers must be > 0");
    return p;
}

inline std::vector<cmat> random_mac_channels(const RandomMacParams& p, std::uint64_t seed, int instance) {
    std::vector<cmat> h;
    for (int k = 0; k < p.users; ++k) {
        Rng rng(seed, static_cast<std::uint64_t>(instance) * 1024 + k);
        h.push_back(rng.cnormal_mat(p.receive, p.user_antennas));
    }
    return h;
}

inline Runner prepare_mac_region(Reader& r) {
    const auto p = read_random_mac(r);
    if (p.users > 8) r.fail("users", "corner enumeration is limited to 8 users");
    return [=](const RunContext& ctx) {
        auto cols = rate_columns({"instance", "order"}, p.users);
        cols.push_back("sum_rate");
        ResultTable t(cols);
        auto tables = parallel_map<ResultTable>(p.instances, ctx.threads, [&](int i) {
            ResultTable part(cols);
            VectorMac m{random_mac_channels(p, ctx.seed, i), {}, p.noise};
            for (int k = 0; k < p.users; ++k)
                m.covariances.push_back(p.powers[k] / p.user_antennas * identity(p.user_antennas));
            std::vector<int> order(p.users);
            std::iota(order.begin(), order.end(), 0);
            do {
                const auto rates = mac_sic_corner(m, order);
                std::vector<Cell> row{static_cast<std::int64_t>(i), join_order(order)};
                double sum = 0.0;
                for (double x : rates) {
                    row.emplace_back(x);
                    sum += x;
                }
                row.emplace_back(sum);
                part.add_row(std::move(row));
            } while (std::next_permutation(order.begin(), order.end()));
            return part;
        });
        for (const auto& part : tables) t.append(part);
        return t;
    };
}

// --- iwf-mac ----------------------------------------------------------------

inline Runner prepare_iwf_mac(Reader& r) {
    const auto p = read_random_mac(r);
    const double tol = r.number("tolerance", 1e-8);
    const int max_cycles = positive(r, "max_cycles", 500);
    if (!(tol > 0.0)) r.fail("tolerance", "must be > 0");
    return [=](const RunContext& ctx) {
        ResultTable t({"instance", "cycle", "sum_rate"});
        auto runs = parallel_map<IwfResult>(p.instances, ctx.threads, [&](int i) {
            return iwf_mac(random_mac_channels(p, ctx.seed, i), p.powers, p.noise, tol, max_cycles);
        });
        double kkt = 0.0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            for (std::size_t c = 0; c < runs[i].objective_history.size(); ++c)
                t.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(c + 1), runs[i].objective_history[c]});
            kkt = std::max(kkt, runs[i].kkt_residual);
        }
        t.set_meta("max_kkt_residual", format_double(kkt));
        return t;
    };
}

// --- beamforming-compare ----------------------------------------------------

inline Runner prepare_beamforming_compare(Reader& r) {
    const int users = positive(r, "users");
    const int antennas = positive(r, "antennas");
    const auto snr = snr_sweep(r, "snr", {0.0, 10.0, 20.0});
    const int trials = positive(r, "trials", 100);
    std::optional<double> rzf_alpha;
    if (r.has("rzf_alpha")) {
        rzf_alpha = r.number("rzf_alpha", 0.0);
        if (*rzf_alpha <= 0.0) r.fail("rzf_alpha", "must be > 0");
    }
    if (users > antennas) r.fail("users", "zero forcing needs users <= antennas");
    return [=](const RunContext& ctx) {
        const std::vector<Combiner> combiners{Combiner::mrc, Combiner::zf, Combiner::lmmse};
        const std::vector<Precoder> precoders{Precoder::mrt, Precoder::zf, Precoder::rzf, Precoder::slnr,
                                              Precoder::lmmse};
        const int per_snr = static_cast<int>(combiners.size() + precoders.size());
        auto sums = parallel_map<std::vector<double>>(trials, ctx.threads, [&](int trial) {
            Rng rng(ctx.seed, static_cast<std::uint64_t>(trial));
            const cmat h = rng.cnormal_mat(antennas, users);
            std::vector<double> out;
            for (double p : snr) {
                const rvec up = rvec::Constant(users, p);
                const rvec down = rvec::Constant(users, p / users);
                const rvec noise = rvec::Ones(users);
                for (auto c : combiners) {
                    const auto rates = uplink_rates(h, uplink_combiner(h, up, 1.0, c), up, 1.0);
                    out.push_back(std::accumulate(rates.begin(), rates.end(), 0.0));
                }
                for (auto m : precoders) {
                    const auto g = downlink_precoder(h, m, down, noise, PrecoderOptions{rzf_alpha});
                    const auto rates = downlink_rates(h, g, down, noise);
                    out.push_back(std::accumulate(rates.begin(), rates.end(), 0.0));
                }
            }
            return out;
        });
        ResultTable t({"snr_db", "link", "method", "mean_sum_rate"});
        for (std::size_t s = 0; s < snr.size(); ++s)
            for (int j = 0; j < per_snr; ++j) {
                double acc = 0.0;
                for (const auto& v : sums) acc += v[s * per_snr + j];
                const bool up = j < static_cast<int>(combiners.size());
                const std::string method = up ? to_string(combiners[j]) : to_string(precoders[j - combiners.size()]);
                t.add_row({linear_to_db(snr[s]), std::string(up ? "uplink" : "downlink"), method, acc / trials});
            }
        return t;
    };
}

// --- noma-clusterfree -------------------------------------------------------

inline Runner prepare_noma_clusterfree(Reader& r) {
    auto geo = r.block("geometry");
    const int n = odd_antennas(geo, "antennas");
    const double lambda = wavelength_of(geo);
    const double d = geo.quantity("spacing", Dimension::length, lambda / 2);
    geo.finish();
    const auto users = read_positions(r, "users");
    const auto snr = snr_sweep(r, "snr", {0.0, 10.0, 20.0});
    const double threshold = r.number("correlation_threshold", 0.9);
    if (threshold < 0.0 || threshold > 1.0) r.fail("correlation_threshold", "must lie in [0, 1]");
    return [=](const RunContext&) {
        const ArrayGeometry g(n, d, lambda);
        const int k = static_cast<int>(users.size());
        cmat h(n, k);
        for (int i = 0; i < k; ++i) h.col(i) = farfield_los(g, users[i]).entries;
        const auto asg = cluster_by_correlation(h, threshold);
        const auto single = ClusterAssignment::singletons(k);
        cmat mrt = h;
        for (int i = 0; i < k; ++i) mrt.col(i).normalize();
        auto cols = rate_columns({"snr_db", "scheme", "clusters"}, k);
        cols.push_back("sum_rate");
        ResultTable t(cols);
        const rvec noise = rvec::Ones(k);
        auto emit_row = [&](double p, const std::string& scheme, int clusters, const RatePoint& rates) {
            std::vector<Cell> row{linear_to_db(p), scheme, static_cast<std::int64_t>(clusters)};
            for (double x : rates) row.emplace_back(x);
            row.emplace_back(std::accumulate(rates.begin(), rates.end(), 0.0));
            t.add_row(std::move(row));
        };
        const auto zf = intercluster_zf_bs(h, asg);
        for (double p : snr) {
            const rvec powers = rvec::Constant(k, p / k);
            emit_row(p, "sdma-mrt", k, clusterfree_rates(h, mrt, powers, single, order_by_effective_gain(h, mrt, single), noise));
            emit_row(p, "clusterfree-mrt", asg.count,
                     clusterfree_rates(h, mrt, powers, asg, order_by_effective_gain(h, mrt, asg), noise));
            if (zf.feasible) {
                cmat wk(n, k);
                for (int i = 0; i < k; ++i) wk.col(i) = zf.vectors.col(asg.cluster_of[i]);
                emit_row(p, "cluster-zf", asg.count,
                         cluster_noma_rates(h, zf.vectors, powers, asg, order_by_effective_gain(h, wk, asg), noise));
            }
        }
        t.set_meta("cluster_zf", zf.feasible ? "feasible" : "infeasible: " + zf.violated);
        return t;
    };
}

// --- favorable-propagation-sweep --------------------------------------------

inline Runner prepare_favorable_propagation(Reader& r) {
    const auto sweep = r.integers("antenna_sweep", std::vector<std::int64_t>{64, 128, 256, 512, 1024, 2048, 4096});
    for (auto x : sweep)
        if (x < 2) r.fail("antenna_sweep", "antenna counts must be >= 2");
    const double lambda = wavelength_of(r, 0.01);
    const double d = r.quantity("spacing", Dimension::length, lambda / 2);
    const auto far = r.quantities("farfield_angles", Dimension::angle, std::vector<double>{pi / 2, std::acos(-0.1)});
    if (far.size() != 2) r.fail("farfield_angles", "need exactly two angles");
    const auto near = read_positions(r, "nearfield_users");
    if (near.size() != 2) r.fail("nearfield_users", "need exactly two users");
    return [=](const RunContext& ctx) {
        ResultTable t({"antennas", "model", "rho"});
        auto rows = parallel_map<std::array<double, 3>>(static_cast<int>(sweep.size()), ctx.threads, [&](int i) {
            const ArrayGeometry g(static_cast<int>(sweep[i]), d, lambda, Parity::any);
            const double rf = correlation_rho(steering_vector(g, far[0]), steering_vector(g, far[1]));
            NearfieldOptions opt;
            opt.uniform_power_factor = 0.0;
            const double rn = correlation_rho(nearfield_spd(g, near[0], {}, NearfieldMode::exact, opt).entries,
                                              nearfield_spd(g, near[1], {}, NearfieldMode::exact, opt).entries);
            return std::array<double, 3>{rf, rn, nearfield_rho_closed(g, near[0], near[1])};
        });
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            t.add_row({static_cast<std::int64_t>(sweep[i]), std::string("farfield"), rows[i][0]});
            t.add_row({static_cast<std::int64_t>(sweep[i]), std::string("nearfield-exact"), rows[i][1]});
            t.add_row({static_cast<std::int64_t>(sweep[i]), std::string("nearfield-closed"), rows[i][2]});
        }
        return t;
    };
}

// --- beamspace-map ----------------------------------------------------------

inline Runner prepare_beamspace_map(Reader& r) {
    // DFT sizes are typically powers of two, so parity is not constrained here.
    const int n = positive(r, "antennas", 128, 2);
    const double lambda = wavelength_of(r, 0.01);
    const double d = r.quantity("spacing", Dimension::length, lambda / 2);
    const double k_factor = r.number("k_factor", 20.0);
    const int paths = positive(r, "nlos_paths", 4);
    const auto angles = r.quantities("los_angles", Dimension::angle);
    if (k_factor < 0.0) r.fail("k_factor", "must be >= 0");
    if (angles.empty()) r.fail("los_angles", "at least one user is required");
    if (std::abs(d - lambda / 2) > 1e-12 * lambda) r.fail("spacing", "the DFT beamspace needs half-wavelength spacing");
    return [=](const RunContext& ctx) {
        const ArrayGeometry g(n, d, lambda, Parity::any);
        std::vector<cvec> h;
        for (std::size_t k = 0; k < angles.size(); ++k) {
            Rng rng(ctx.seed, k);
            const auto p = RicianParams::sample(k_factor, paths, angles[k], rng);
            h.push_back(rician_sparse(g, Position{1.0, angles[k]}, {}, p).entries);
        }
        const auto bs = beamspace_transform(g, h, angles);
        ResultTable t({"user", "los_angle_deg", "beam", "magnitude_sq", "dominant", "dominant_fraction"});
        for (std::size_t k = 0; k < angles.size(); ++k)
            for (int b = 0; b < n; ++b)
                t.add_row({static_cast<std::int64_t>(k + 1), rad_to_deg(angles[k]), static_cast<std::int64_t>(b + 1),
                           std::norm(bs.coefficients(b, static_cast<int>(k))),
                           static_cast<std::int64_t>(bs.dominant_index[k] == b + 1 ? 1 : 0),
                           bs.dominant_energy_fraction[k]});
        return t;
    };
}

// --- nearfield-analog-snr ---------------------------------------------------

inline Runner prepare_nearfield_analog_snr(Reader& r) {
    auto geo = r.block("geometry");
    const double lambda = wavelength_of(geo);
    const double d = geo.quantity("spacing", Dimension::length, lambda / 2);
    geo.finish();
    const auto ratios = r.numbers("range_over_spacing", std::vector<double>{200.0, 500.0, 1000.0});
    // default: twice the largest squared-form optimum, so the peak is inside the sweep
    double widest = 3.0;
    for (double x : ratios) widest = std::max(widest, 4.0 * squared_form_x_star() * x);
    const int n_max = odd_antennas(r, "max_antennas", 2 * static_cast<std::int64_t>(widest / 2) + 1);
    const int stride = positive(r, "stride", 1);
    for (double x : ratios)
        if (!(x > 0.0)) r.fail("range_over_spacing", "values must be > 0");
    return [=](const RunContext& ctx) {
        ResultTable t({"range_over_spacing", "antennas", "snr_direct", "snr_printed", "snr_squared"});
        auto sweeps = parallel_map<SnrSweep>(static_cast<int>(ratios.size()), ctx.threads, [&](int i) {
            return snr_sweep_extrema(d, lambda, ratios[i] * d, n_max);
        });
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            const auto& s = sweeps[i];
            const double range = ratios[i] * d;
            for (std::size_t j = 0; j < s.antennas.size(); ++j) {
                if (j % stride != 0 && j + 1 != s.antennas.size()) continue;
                const ArrayGeometry g(s.antennas[j], d, lambda);
                t.add_row({ratios[i], static_cast<std::int64_t>(s.antennas[j]), s.snr[j],
                           analog_snr_closed(g, range, ClosedFormVariant::printed),
                           analog_snr_closed(g, range, ClosedFormVariant::squared)});
            }
            const std::string tag = "[r/d=" + format_double(ratios[i]) + "]";
            t.set_meta("argmax_N" + tag, std::to_string(s.argmax));
            t.set_meta("n_rad" + tag, format_double(s.n_rad));
            t.set_meta("quoted_n_star" + tag, format_double(s.quoted_n_star));
            t.set_meta("squared_form_n_star" + tag, format_double(s.squared_form_n_star));
        }
        return t;
    };
}

// --- nearfield-hb-sdma ------------------------------------------------------

inline Runner prepare_nearfield_hb_sdma(Reader& r) {
    auto geo = r.block("geometry");
    const double lambda = wavelength_of(geo);
    const double d = geo.quantity("spacing", Dimension::length, lambda / 2);
    geo.finish();
    const auto sweep = r.integers("antenna_sweep");
    for (auto n : sweep)
        if (n < 1 || n % 2 == 0)
            r.fail("antenna_sweep", "antenna count must be odd (N = 2*half + 1), got " + std::to_string(n));
    const auto users = read_positions(r, "users");
    const double snr = positive_quantity(r, "snr", Dimension::ratio);
    const double uniform_factor = r.number("uniform_power_factor", 10.0);
    return [=](const RunContext& ctx) {
        const int k = static_cast<int>(users.size());
        auto cols = rate_columns({"antennas", "model"}, k);
        cols.push_back("sum_rate");
        ResultTable t(cols);
        LinkBudget lb;
        lb.power = snr;
        NearfieldOptions opt;
        opt.uniform_power_factor = uniform_factor;
        const std::vector<double> noise(k, 1.0);
        auto res = parallel_map<std::array<HybridResult, 2>>(static_cast<int>(sweep.size()), ctx.threads, [&](int i) {
            const ArrayGeometry g(static_cast<int>(sweep[i]), d, lambda);
            return std::array<HybridResult, 2>{
                nearfield_hb_sdma(g, users, noise, HbChannel::nearfield_exact, lb, opt).link,
                nearfield_hb_sdma(g, users, noise, HbChannel::farfield, lb, opt).link};
        });
        for (std::size_t i = 0; i < sweep.size(); ++i)
            for (int m = 0; m < 2; ++m) {
                std::vector<Cell> row{static_cast<std::int64_t>(sweep[i]), std::string(m == 0 ? "nearfield" : "farfield")};
                for (double x : res[i][m].rates) row.emplace_back(x);
                row.emplace_back(res[i][m].sum_rate);
                t.add_row(std::move(row));
            }
        if (!sweep.empty()) t.set_meta("n_rad_min_user", format_double([&] {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& u : users) m = std::min(m, n_rad(u.range, d, lambda));
            return m;
        }()));
        return t;
    };
}

// --- cap-sinr ---------------------------------------------------------------

inline Runner prepare_cap_sinr(Reader& r) {
    const double lambda = wavelength_of(r, 0.01);
    const auto lengths = r.quantities("aperture_lengths", Dimension::length);
    for (double l : lengths)
        if (!(l > 0.0)) r.fail("aperture_lengths", "lengths must be > 0");
    const auto users = read_positions(r, "users");
    const double power = positive_quantity(r, "power", Dimension::power);
    const double noise = positive_quantity(r, "noise", Dimension::power);
    return [=](const RunContext& ctx) {
        const int k = static_cast<int>(users.size());
        ResultTable t({"aperture_length", "user", "sinr", "rate", "panels"});
        auto res = parallel_map<CapSinr>(static_cast<int>(lengths.size()), ctx.threads, [&](int i) {
            const CapAperture ap{lengths[i], lambda};
            std::vector<CapCurrent> cur;
            for (const auto& u : users) cur.push_back(cap_matched_current(ap, u, power / k));
            return cap_sinr(ap, cur, users, std::vector<double>(k, noise), power);
        });
        for (std::size_t i = 0; i < lengths.size(); ++i)
            for (int u = 0; u < k; ++u)
                t.add_row({lengths[i], static_cast<std::int64_t>(u + 1), res[i].sinr(u), shannon_rate(res[i].sinr(u)),
                           static_cast<std::int64_t>(res[i].panels)});
        return t;
    };
}

// --- ISAC -------------------------------------------------------------------

// Orthogonal probe with X Xᴴ = (L p_s / N) I; needs L >= N.
inline cmat orthogonal_probe(int n, int pulse, double sensing_power) {
    cmat x(n, pulse);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < pulse; ++l) x(i, l) = std::polar(1.0, -2.0 * pi * i * l / pulse);
    return std::sqrt(sensing_power / n) * x;
}

inline Runner prepare_isac_uplink(Reader& r) {
    const int n = odd_antennas(r, "antennas");
    const double lambda = wavelength_of(r, 0.01);
    const double d = r.quantity("spacing", Dimension::length, lambda / 2);
    const int users = positive(r, "users");
    auto powers = r.quantities("powers", Dimension::power);
    const double sensing_power = positive_quantity(r, "sensing_power", Dimension::power);
    const int pulse = positive(r, "pulse_length");
    const auto targets = read_targets(r, "targets");
    const int grid = positive(r, "grid", 11, 2);
    if (powers.size() == 1) powers.assign(users, powers[0]);
    if (static_cast<int>(powers.size()) != users) r.fail("powers", "give one power or one per user");
    if (pulse < n) r.fail("pulse_length", "the orthogonal probe needs pulse_length >= antennas");
    return [=](const RunContext& ctx) {
        const ArrayGeometry g(n, d, lambda);
        Rng rng(ctx.seed, 0);
        UplinkIsacScene s{rng.cnormal_mat(n, users), Eigen::Map<const rvec>(powers.data(), users),
                          transmit_correlation(targets, g), orthogonal_probe(n, pulse, sensing_power)};
        ResultTable t({"label", "sr", "cr"});
        for (const auto& p : uplink_isac_region(s, grid)) t.add_row({p.label, p.sr, p.cr});
        return t;
    };
}

inline std::vector<double> read_alphas(Reader& r) {
    auto a = r.numbers("alphas", linspace(0.0, 1.0, 11));
    for (double x : a)
        if (x < 0.0 || x > 1.0) r.fail("alphas", "values must lie in [0, 1]");
    return a;
}

inline Runner prepare_isac_su_miso(Reader& r) {
    const int n = odd_antennas(r, "antennas");
    const double lambda = wavelength_of(r, 0.01);
    const double d = r.quantity("spacing", Dimension::length, lambda / 2);
    const double power = positive_quantity(r, "power", Dimension::ratio);
    auto target = r.block("target");
    const double angle = target.quantity("angle", Dimension::angle);
    const double variance = target.number("variance", 1.0);
    target.finish();
    const int n_r = positive(r, "receive_antennas", 1);
    const int pulse = positive(r, "pulse_length", 1);
    const auto alphas = read_alphas(r);
    const bool osac = r.has("include_osac") ? r.integer("include_osac") != 0 : false;
    if (!(variance > 0.0)) r.fail("target.variance", "must be > 0");
    return [=](const RunContext& ctx) {
        const ArrayGeometry g(n, d, lambda);
        Rng rng(ctx.seed, 0);
        const SuMisoScene s{rng.cnormal_vec(n), steering_vector(g, angle), power, variance, n_r, pulse};
        const auto reg = dl_su_miso_isac(s, alphas);
        ResultTable t({"label", "alpha", "sr", "cr", "rate"});
        for (const auto& p : reg.pareto) t.add_row({std::string("pareto"), p.alpha, p.sr, p.cr, p.rate});
        t.add_row({reg.s_c.label, 1.0, reg.s_c.sr, reg.s_c.cr, reg.s_c.sr});
        t.add_row({reg.c_c.label, 0.0, reg.c_c.sr, reg.c_c.cr, reg.c_c.cr});
        if (osac)
            for (std::size_t i = 0; i < reg.osac.size(); ++i)
                t.add_row({std::string("osac"), static_cast<double>(i) / (reg.osac.size() - 1), reg.osac[i].sr,
                           reg.osac[i].cr, 0.0});
        return t;
    };
}

inline Runner prepare_isac_cluster(Reader& r) {
    const int n = odd_antennas(r, "antennas");
    const double lambda = wavelength_of(r, 0.01);
    const double d = r.quantity("spacing", Dimension::length, lambda / 2);
    const int per_cluster = positive(r, "users_per_cluster", 2);
    const int n_u = positive(r, "user_antennas");
    const double power = positive_quantity(r, "power", Dimension::power);
    const double noise = positive_quantity(r, "noise", Dimension::power);
    const auto targets = read_targets(r, "targets");
    const int n_r = positive(r, "receive_antennas", 1);
    const int pulse = positive(r, "pulse_length", 1);
    const int weight_grid = positive(r, "weight_grid", 21, 2);
    const auto alphas = read_alphas(r);
    if (n_u < n) r.fail("user_antennas", "user-side zero forcing needs user_antennas >= antennas (N_U >= N_Cluster)");
    return [=](const RunContext& ctx) {
        const ArrayGeometry g(n, d, lambda);
        ClusterIsacScene s;
        std::vector<std::vector<int>> groups(n);
        for (int c = 0; c < n; ++c)
            for (int j = 0; j < per_cluster; ++j) {
                Rng rng(ctx.seed, static_cast<std::uint64_t>(c * per_cluster + j));
                s.channels.push_back(rng.cnormal_mat(n, n_u));
                groups[c].push_back(c * per_cluster + j);
            }
        s.clusters = ClusterAssignment::from_groups(n * per_cluster, groups);
        s.r = transmit_correlation(targets, g);
        s.power = power;
        s.noise = noise;
        s.n_r = n_r;
        s.pulse = pulse;
        const auto reg = dl_cluster_isac(s, alphas, weight_grid);
        ResultTable t({"label", "alpha", "sr", "cr"});
        for (const auto& p : reg.pareto) t.add_row({std::string("pareto"), p.alpha, p.sr, p.cr});
        t.add_row({reg.s_c.label, 1.0, reg.s_c.sr, reg.s_c.cr});
        t.add_row({reg.c_c.label, 0.0, reg.c_c.sr, reg.c_c.cr});
        for (std::size_t i = 0; i < reg.osac.size(); ++i)
            t.add_row({std::string("osac"), static_cast<double>(i) / (reg.osac.size() - 1), reg.osac[i].sr,
                       reg.osac[i].cr});
        return t;
    };
}

inline Runner prepare_isac_siso_noma(Reader& r) {
    SisoNomaIsacScene s;
    s.power = positive_quantity(r, "power", Dimension::power);
    s.noise = positive_quantity(r, "noise", Dimension::power);
    const auto gains = r.numbers("gains");
    s.variance = r.number("variance", 1.0);
    s.pulse = positive(r, "pulse_length", 1);
    const int share_grid = positive(r, "share_grid", 101, 2);
    const int power_grid = positive(r, "power_grid", 21, 2);
    if (gains.size() != 2 || !(gains[0] > 0.0 && gains[1] > 0.0)) {
        r.fail("gains", "need two positive channel gains");
    } else {
        s.gain_strong = std::max(gains[0], gains[1]);
        s.gain_weak = std::min(gains[0], gains[1]);
    }
    if (!(s.variance > 0.0)) r.fail("variance", "must be > 0");
    return [=](const RunContext&) {
        const auto reg = dl_siso_noma_isac(s, share_grid, power_grid);
        ResultTable t({"sweep", "x", "sr", "cr_strong", "cr_weak", "cr_sum"});
        const auto shares = linspace(0.0, 1.0, share_grid);
        for (std::size_t i = 0; i < reg.cr_region.size(); ++i) {
            const auto& c = reg.cr_region[i];
            t.add_row({std::string("share"), shares[i], reg.sr, c[0], c[1], c[0] + c[1]});
        }
        for (std::size_t i = 0; i < reg.power_grid.size(); ++i)
            t.add_row({std::string("power"), reg.power_grid[i], reg.sr_vs_power[i], std::nan(""), std::nan(""),
                       reg.cr_vs_power[i]});
        return t;
    };
}

}  // namespace detail

// Stable order; `list` prints exactly this.
inline const std::vector<Experiment>& registry() {
    static const std::vector<Experiment> r{
        {"bc-region", "scalar Gaussian BC: superposition-coding boundary vs time sharing", detail::prepare_bc_region},
        {"mac-region", "vector MAC SIC corner points for every decoding order", detail::prepare_mac_region},
        {"iwf-mac", "iterative water-filling sum capacity, per-cycle objective", detail::prepare_iwf_mac},
        {"beamforming-compare", "linear combiners and precoders, mean sum rate vs SNR",
         detail::prepare_beamforming_compare},
        {"noma-clusterfree", "SDMA vs clustered and cluster-free NOMA on line-of-sight users",
         detail::prepare_noma_clusterfree},
        {"favorable-propagation-sweep", "channel correlation vs array size, far and near field",
         detail::prepare_favorable_propagation},
        {"beamspace-map", "DFT beamspace energy map of sparse Rician channels", detail::prepare_beamspace_map},
        {"nearfield-analog-snr", "analog beamfocusing SNR vs N with closed forms", detail::prepare_nearfield_analog_snr},
        {"nearfield-hb-sdma", "hybrid SDMA sum rate vs N, near- vs far-field model", detail::prepare_nearfield_hb_sdma},
        {"cap-sinr", "continuous-aperture SINR with matched current distributions", detail::prepare_cap_sinr},
        {"isac-uplink-region", "uplink NOMA-ISAC corners, time sharing and OSAC", detail::prepare_isac_uplink},
        {"isac-su-miso-region", "single-user MISO ISAC Pareto boundary by rate profile",
         detail::prepare_isac_su_miso},
        {"isac-cluster-region", "cluster-based MIMO-NOMA ISAC region and OSAC baseline",
         detail::prepare_isac_cluster},
        {"isac-siso-noma", "SISO NOMA-ISAC region and rates vs transmit power", detail::prepare_isac_siso_noma},
    };
    return r;
}

inline const Experiment& find_experiment(const std::string& name) {
    for (const auto& e : registry())
        if (e.name == name) return e;
    throw ConfigError("unknown experiment \"" + name + "\" (see `ma-lab list`)");
}

struct ScenarioConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    std::uint64_t hash = 0;
    std::string output_path;
    std::string output_format;
    Runner runner;
};

inline ScenarioConfig load_config_json(const json& j) {
    auto diag = std::make_shared<Diagnostics>();
    Reader root(j, "", diag);
    ScenarioConfig cfg;
    cfg.hash = config_hash(j);
    cfg.experiment = root.string("experiment");
    cfg.seed = root.seed("seed");
    root.string("description", "");
    if (root.has("output")) {
        auto out = root.block("output");
        cfg.output_path = out.string("path", "");
        cfg.output_format = out.string("format", "csv");
        if (cfg.output_format != "csv" && cfg.output_format != "json") out.fail("format", "must be csv or json");
        out.finish();
    }
    if (!diag->ok() && cfg.experiment.empty()) diag->throw_if_any();
    const Experiment* exp = nullptr;
    for (const auto& e : registry())
        if (e.name == cfg.experiment) exp = &e;
    if (!exp) {
        root.fail("experiment", "unknown experiment \"" + cfg.experiment + "\"");
        diag->throw_if_any();
    }
    try {
        cfg.runner = exp->prepare(root);
    } catch (const InvalidArgument& e) {
        diag->add(e.what());
    }
    root.finish();
    diag->throw_if_any();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) { return load_config_json(read_json_file(path)); }

// Runs with module errors re-raised under the experiment name.
inline ResultTable run_experiment(const ScenarioConfig& cfg, const RunContext& ctx) {
    const std::string where = "experiment " + cfg.experiment + ": ";
    ResultTable t;
    try {
        t = cfg.runner(ctx);
    } catch (const NumericalError& e) {
        throw NumericalError(where + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(where + e.what());
    }
    t.set_meta("experiment", cfg.experiment);
    t.set_meta("config_hash", hex64(cfg.hash));
    t.set_meta("seed", std::to_string(ctx.seed));
    t.set_meta("tool_version", tool_version);
    return t;
}

}  // namespace malab::cli
