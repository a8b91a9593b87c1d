// Acceptance checks: one PASS/FAIL line per criterion.
// Usage: acceptance [c01 ... c12]   (no arguments runs all)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cli_runner.hpp"
#include "dualstate/bucket_panel.hpp"
#include "dualstate/dual_regression.hpp"
#include "dualstate/liquidity_lab.hpp"
#include "dualstate/neural_kit.hpp"
#include "dualstate/pdo_kernel.hpp"
#include "dualstate/pipeline.hpp"
#include "dualstate/residual_study.hpp"
#include "dualstate/state_space.hpp"
#include "dualstate/synth_market.hpp"

using namespace dualstate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

StateMatrix states_of(const Eigen::MatrixXd& X) {
    StateMatrix s;
    s.values = X;
    s.dates = trading_calendar(Date{2009, 1, 6}, static_cast<int>(X.rows()));
    return s;
}

Eigen::MatrixXd random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = N(rng);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ();
}

double column_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd x = a.array() - a.mean(), y = b.array() - b.mean();
    const double d = std::sqrt((x * x).sum() * (y * y).sum());
    return d > 0.0 ? (x * y).sum() / d : 0.0;
}

// ---- criteria --------------------------------------------------------------

Outcome c01() {
    MarketConfig mc;
    mc.n_traders = 1;
    const auto m = generate(mc);
    const auto states = state_matrix(build_panels(m.tapes[0]), StateMode::Imbalance);
    const auto t0 = Clock::now();
    const auto out = fit_beta(states);
    const double secs = seconds_since(t0);
    const double recon = (out.predictions + out.residuals - out.dX).cwiseAbs().maxCoeff();
    double orth = 0.0;
    for (Eigen::Index k = 0; k < out.residuals.cols(); ++k)
        orth = std::max(orth, std::abs(column_corr(out.predictions.col(k), out.residuals.col(k))));
    const bool shape = states.values.rows() == 484 && states.values.cols() == 16;
    return {shape && recon < 1e-10 && orth < 1e-10 && secs < 1.0,
            fmt("states %ldx%ld recon %.2e max|corr(pred,resid)| %.2e fit %.3fs", static_cast<long>(states.values.rows()),
                static_cast<long>(states.values.cols()), recon, orth, secs)};
}

Outcome c02() {
    MarketConfig mc;
    mc.n_traders = 3;
    mc.seed = 2;
    const auto m = generate(mc);
    double worst = 0.0;
    std::size_t buckets = 0, degenerate = 0;
    for (const auto& tape : m.tapes) {
        const auto split = variance_split(analyze_tape(tape).fit);
        for (std::size_t k = 0; k < split.P.size(); ++k) {
            if (split.degenerate[k]) {
                ++degenerate;
                continue;
            }
            ++buckets;
            worst = std::max(worst, std::abs(split.P[k] + split.F[k] - 1.0));
        }
    }
    return {buckets > 0 && worst < 1e-9, fmt("%zu buckets, %zu degenerate, max|P+F-1| %.2e", buckets, degenerate, worst)};
}

Outcome c03() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N;
    double rt = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + static_cast<int>(rng() % 64);
        std::vector<double> x(static_cast<std::size_t>(n));
        for (double& v : x) v = N(rng) * std::pow(10.0, static_cast<int>(rng() % 5) - 2);
        const auto back = inverse_dual(forward_dual(x)).values;
        for (std::size_t i = 0; i < x.size(); ++i) rt = std::max(rt, std::abs(back[i] - x[i]));
    }
    MarketConfig mc;
    mc.n_traders = 2;
    const auto m = generate(mc);
    double imag = 0.0;
    for (const auto& tape : m.tapes) imag = std::max(imag, analyze_tape(tape).fit.max_imag);
    return {rt < 1e-12 && imag < 1e-9, fmt("round trip %.2e, max imag on real fits %.2e", rt, imag)};
}

Outcome c04() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> N;

    // Part 1: noiseless recovery of an orthogonal-minus-identity operator.
    const int m = 32, T0 = 200;
    const Eigen::MatrixXd beta = random_orthogonal(m, rng) - Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd Z(T0, m);
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z(i) = N(rng);
    for (int t = 0; t < T0; ++t) {
        Z.row(t) = z.transpose();
        z += beta * z;
    }
    const double err = (fit_dual(Z).beta - beta).cwiseAbs().maxCoeff();

    // Part 2: two independent noisy runs of one process agree at signal-to-noise 10.
    const int n = 16, T = 484, seeds = 20;
    int agree = 0;
    double min_col = 1.0, min_row = 1.0;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 r(mix_seed(40, static_cast<std::uint64_t>(s)));
        const Eigen::MatrixXd Q = random_orthogonal(n, r);
        const double tr = Q.trace();
        const double rho = (2.0 * tr + std::sqrt(4.0 * tr * tr + 4.0 * 176.0 * 144.0)) / (2.0 * 176.0);
        const Eigen::MatrixXd A = rho * Q;
        auto run = [&] {
            Eigen::MatrixXd X(T, n);
            Eigen::VectorXd x(n);
            for (int i = 0; i < n; ++i) x(i) = N(r) / std::sqrt(1.0 - rho * rho);
            for (int t = 0; t < T; ++t) {
                X.row(t) = x.transpose();
                Eigen::VectorXd e(n);
                for (int i = 0; i < n; ++i) e(i) = N(r);
                x = A * x + e;
            }
            return fit_beta(states_of(X)).beta;
        };
        const auto sim = beta_similarity(run(), run());
        min_col = std::min(min_col, sim.col_corr);
        min_row = std::min(min_row, sim.row_corr);
        agree += sim.col_corr > 0.9 && sim.row_corr > 0.9;
    }
    const double secs = seconds_since(t0);
    return {err < 1e-8 && agree >= 18 && secs < 60.0,
            fmt("noiseless max err %.2e; similar runs %d/%d (min col %.3f, min row %.3f); %.1fs", err, agree, seeds,
                min_col, min_row, secs)};
}

Outcome c05() {
    const int runs = 20, tapes = 5;
    int clean = 0;
    double worst = 0.0;
    for (int r = 0; r < runs; ++r) {
        std::vector<RegressionOutput> outs;
        for (int i = 0; i < tapes; ++i) {
            MarketConfig mc;
            mc.n_traders = 1;
            mc.seed = static_cast<std::uint64_t>(1000 * (r + 1) + i);
            outs.push_back(analyze_tape(generate(mc).tapes[0]).fit);
        }
        const auto D = determination_matrix(outs);
        double off = 0.0;
        for (int i = 0; i < tapes; ++i)
            for (int j = 0; j < tapes; ++j)
                if (i != j) off = std::max(off, D(i, j));
        worst = std::max(worst, off);
        clean += off < 0.05;
    }
    return {clean >= 19, fmt("runs with all off-diagonal r^2 < 0.05: %d/%d (worst %.4f)", clean, runs, worst)};
}

Outcome c06() {
    const auto t0 = Clock::now();
    const double rho = 0.5, nsr = 0.1;
    const int N = 100000;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> G;
    std::vector<double> x(N), y(N);
    for (int i = 0; i < N; ++i) {
        const double a = G(rng), b = rho * a + std::sqrt(1.0 - rho * rho) * G(rng);
        x[static_cast<std::size_t>(i)] = a + std::sqrt(nsr) * G(rng);
        y[static_cast<std::size_t>(i)] = b + std::sqrt(nsr) * G(rng);
    }
    const double emp = column_corr(Eigen::Map<Eigen::VectorXd>(x.data(), N), Eigen::Map<Eigen::VectorXd>(y.data(), N));
    const auto att = attenuation(rho, nsr, nsr);
    const double secs = seconds_since(t0);
    return {std::abs(emp - att.exact) < 0.01 && emp < rho && std::abs(att.exact - 0.5 / 1.1) < 1e-12 && secs < 10.0,
            fmt("empirical %.4f, predicted %.4f, first-order %.4f, %.2fs", emp, att.exact, att.approx, secs)};
}

Outcome c07() {
    const auto t0 = Clock::now();
    MarketConfig mc;
    mc.n_traders = 2;
    const auto m = generate(mc);
    const auto a = residuals_of("a", analyze_tape(m.tapes[0]));
    const auto b = residuals_of("b", analyze_tape(m.tapes[1]));
    const auto sent = cnn_backcast({a}, {b}, m.truth.sentiment);
    const auto yld = cnn_backcast({a}, {b}, m.truth.yield);
    const double secs = seconds_since(t0);
    const bool ok = sent.mean_r > 0.8 && std::abs(yld.mean_r) < 0.3 && yld.half_width >= std::abs(yld.mean_r) && secs < 300.0;
    return {ok, fmt("sentiment r %.3f +- %.3f; yield r %.3f +- %.3f; %.1fs", sent.mean_r, sent.half_width, yld.mean_r,
                    yld.half_width, secs)};
}

Outcome c08() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    std::string kinds;
    for (int draw = 0; draw < 10; ++draw) {
        const auto seed = rng();
        nn::NetSpec spec;
        switch (rng() % 3) {
            case 0: spec = nn::shallow_net(4, 8, nn::Activation::Tanh, seed); kinds += 's'; break;
            case 1: spec = nn::ten_layer_net(16, nn::Activation::Tanh, seed); kinds += 'd'; break;
            default: spec = nn::cnn7(21, 16, nn::Activation::Tanh, seed); kinds += 'c'; break;
        }
        const auto net = nn::init_net(spec);
        std::vector<double> x(static_cast<std::size_t>(spec.input.size()));
        for (double& v : x) v = U(rng);
        worst = std::max(worst, nn::grad_check(net, x, U(rng)).max_rel_error);
    }
    return {worst < 1e-4, fmt("nets %s, max relative gradient error %.2e", kinds.c_str(), worst)};
}

Outcome c09() {
    const double s = 0.02;
    const auto tape = balanced_book(10, 10.0, s, 0.5, 16, 1000);
    const auto costs = cost_series(build_panels(tape));
    std::map<Date, double> turnover;
    for (const auto& r : tape)
        if (r.side == Side::Buy) turnover[r.date] += static_cast<double>(r.volume);
    double pi_err = 0.0, lam_err = 0.0;
    for (Eigen::Index t = 0; t < costs.pi.rows(); ++t) {
        const double want = s * turnover.at(costs.dates[static_cast<std::size_t>(t)]);
        pi_err = std::max(pi_err, std::abs(costs.pi.row(t).sum() - want));
        for (Eigen::Index k = 0; k < costs.lambda.cols(); ++k) lam_err = std::max(lam_err, std::abs(costs.lambda(t, k) - s));
    }
    return {costs.pi.rows() == 9 && pi_err < 1e-9 && lam_err < 1e-9,
            fmt("%ld cost rows, max|sum pi - s*turnover| %.2e, max|lambda - s| %.2e", static_cast<long>(costs.pi.rows()),
                pi_err, lam_err)};
}

Outcome c10() {
    const auto t0 = Clock::now();
    const int seeds = 20;
    int null_windows = 0, null_reject = 0, hits = 0;
    for (int ds = 1; ds <= seeds; ++ds) {
        MarketConfig mc;
        mc.seed = static_cast<std::uint64_t>(ds);
        mc.n_traders = 1;
        mc.paired_fraction = 1.0;
        mc.trades_per_day = 65;
        mc.g_liq = 0.3;
        mc.g_sent = 0.0;
        const EventStudyConfig ec;
        for (int shocked = 0; shocked < 2; ++shocked) {
            const auto cfg = shocked ? inject_shock(mc, {340, 382, 1.0, 3.0}) : mc;
            const auto m = generate(cfg);
            const auto rep = event_study(cost_series(build_panels(m.tapes[0])), m.truth.sentiment, ec);
            for (const auto& w : rep.windows) {
                if (!shocked) {
                    if (!w.p_pearson && !w.p_spearman) continue;
                    ++null_windows;
                    null_reject += (w.p_pearson && *w.p_pearson < 0.10) || (w.p_spearman && *w.p_spearman < 0.10);
                } else if (w.begin == 300) {
                    hits += w.p_pearson && *w.p_pearson < 0.05;
                }
            }
        }
    }
    const double rate = null_windows ? static_cast<double>(null_reject) / null_windows : 1.0;
    return {null_windows > 0 && rate <= 0.20 && hits > seeds / 2,
            fmt("null rejections %d/%d windows (%.1f%%); shock detected in %d/%d seeds; %.0fs", null_reject, null_windows,
                100.0 * rate, hits, seeds, seconds_since(t0))};
}

Outcome c11() {
    const int n = 256;
    const double L = 40.0, v0 = 1.0, x0 = 20.0, s2 = 0.3, a = 0.7, t = 2.0;
    auto f = SpectralGrid::uniform({n}, {0.0}, {L});
    auto gauss = [](double x, double mu, double var) {
        return std::exp(-(x - mu) * (x - mu) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
    };
    for (int i = 0; i < n; ++i) f.values[static_cast<std::size_t>(i)] = gauss(f.axes[0][static_cast<std::size_t>(i)], x0, v0);
    DiffusionParams p;
    p.drift = Eigen::VectorXd::Constant(1, a);
    p.sigma = Eigen::MatrixXd::Constant(1, 1, s2);
    const auto u = pdo_evolve(f, p, t);
    double closed = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = u.axes[0][static_cast<std::size_t>(i)];
        closed = std::max(closed, std::abs(u.values[static_cast<std::size_t>(i)] - gauss(x, x0 - a * t, v0 + 2.0 * s2 * t)));
    }
    const auto two = pdo_evolve(pdo_evolve(f, p, 0.8), p, 1.2);
    double semi = 0.0;
    std::complex<double> m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        semi = std::max(semi, std::abs(two.values[i] - u.values[i]));
        m0 += f.values[i];
        m1 += u.values[i];
    }
    const double mass = std::abs(m0 - m1) * (L / n);

    // Exact-exponential stepping against forward Euler: their gap is first order in dt.
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N;
    Eigen::MatrixXd beta(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) beta(i, j) = 0.5 * N(rng);
    Eigen::VectorXd xs(4);
    for (int i = 0; i < 4; ++i) xs(i) = N(rng);
    auto gap = [&](int steps) {
        const double dt = 1.0 / steps;
        std::vector<Eigen::VectorXd> noise;
        for (int s = 0; s < steps; ++s) {
            Eigen::VectorXd e(4);
            for (int i = 0; i < 4; ++i) e(i) = std::sin(s * dt + i);
            noise.push_back(e);
        }
        Eigen::VectorXd euler = xs;
        for (int s = 0; s < steps; ++s) euler += beta * euler * dt + noise[static_cast<std::size_t>(s)] * dt;
        return (propagate_state(xs, beta, noise, steps, dt) - euler).norm();
    };
    const double g1 = gap(200), g2 = gap(400);
    const double ratio = g1 / g2;
    return {closed < 1e-6 && semi < 1e-10 && mass < 1e-10 && ratio >= 1.6 && ratio <= 2.4,
            fmt("closed-form err %.2e, semigroup %.2e, mass drift %.2e, gap ratio %.3f", closed, semi, mass, ratio)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = testsupport::slurp(e.path());
    return files;
}

Outcome c12() {
    const std::string cli = DUALSTATE_CLI;
    const auto root = testsupport::scratch_dir("acceptance_c12");
    const std::vector<std::string> steps{
        "--out run synth --traders 3 --days 250",
        "--out run fit --tape run/t0.csv --tape run/t1.csv --tape run/t2.csv",
        "--out run backcast --train run/t0.csv --predict run/t1.csv --index run/indexes/sentiment.csv --runs 2 --rounds 20",
        "--out run eventstudy --tape run/t2.csv --index run/indexes/sentiment.csv --period 30 --rounds 10 --nets 1 "
        "--draws 200"};
    std::vector<std::map<std::string, std::string>> snaps;
    std::vector<std::string> stdouts;
    for (int pass = 0; pass < 2; ++pass) {
        fs::remove_all(root / "run");
        std::string out;
        for (const auto& s : steps) {
            const auto r = testsupport::run_cli(cli, s, root);
            if (r.code != 0) return {false, fmt("pass %d: '%s' exited %d: %s", pass + 1, s.c_str(), r.code, r.err.c_str())};
            out += r.out;
        }
        snaps.push_back(snapshot(root / "run"));
        stdouts.push_back(out);
    }
    fs::remove_all(root);
    std::size_t differ = 0;
    for (const auto& [name, body] : snaps[0]) {
        const auto it = snaps[1].find(name);
        differ += it == snaps[1].end() || it->second != body;
    }
    const bool same = snaps[0].size() == snaps[1].size() && differ == 0 && stdouts[0] == stdouts[1];
    return {same && !snaps[0].empty(), fmt("%zu artifacts, %zu differ, stdout %s", snaps[0].size(), differ,
                                           stdouts[0] == stdouts[1] ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<std::string, std::function<Outcome()>> criteria{
        {"c01", c01}, {"c02", c02}, {"c03", c03}, {"c04", c04}, {"c05", c05}, {"c06", c06},
        {"c07", c07}, {"c08", c08}, {"c09", c09}, {"c10", c10}, {"c11", c11}, {"c12", c12}};
    std::vector<std::string> ids(argv + 1, argv + argc);
    if (ids.empty())
        for (const auto& [id, fn] : criteria) ids.push_back(id);
    int failed = 0;
    for (const auto& id : ids) {
        const auto it = criteria.find(id);
        if (it == criteria.end()) {
            std::printf("FAIL %s unknown criterion\n", id.c_str());
            ++failed;
            continue;
        }
        Outcome o;
        try {
            o = it->second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
