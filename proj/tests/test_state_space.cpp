#include <doctest.h>

#include <sstream>

#include "dualstate/bucket_panel.hpp"
#include "dualstate/state_space.hpp"
#include "dualstate/synth_market.hpp"
#include "support.hpp"

using namespace dualstate;
using testsupport::Gen;

namespace {

DailyPanel panel_with(const BucketConfig& cfg, std::vector<double> buy, std::vector<double> sell) {
    DailyPanel p;
    p.fine_buy = std::move(buy);
    p.fine_sell = std::move(sell);
    p.fine_buy.resize(static_cast<std::size_t>(cfg.n_buckets * cfg.n_subcells), 0.0);
    p.fine_sell.resize(p.fine_buy.size(), 0.0);
    return p;
}

}  // namespace

TEST_CASE("corr_vector conventions") {
    BucketConfig cfg;
    cfg.n_buckets = 2;
    cfg.n_subcells = 5;
    const std::vector<double> prof{1, 4, 2, 0, 3};
    auto a = panel_with(cfg, prof, {});
    auto b = panel_with(cfg, prof, {});
    auto v = corr_vector(a, b, cfg, StateMode::Buy);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == 0.0);  // empty bucket

    std::size_t zero = 0;
    corr_vector(a, b, cfg, StateMode::Sell, &zero);
    CHECK(zero == 2);

    std::vector<double> neg;
    for (double x : prof) neg.push_back(7.0 - 2.0 * x);
    auto c = panel_with(cfg, neg, {});
    CHECK(corr_vector(a, c, cfg, StateMode::Buy)[0] == doctest::Approx(-1.0));

    BucketConfig other = cfg;
    other.n_subcells = 4;
    CHECK_THROWS_AS(corr_vector(a, b, other, StateMode::Buy), Error);
}

TEST_CASE("corr_vector matches textbook pearson") {
    Gen g(51);
    BucketConfig cfg;
    for (int rep = 0; rep < 10; ++rep) {
        const auto n = static_cast<std::size_t>(cfg.n_buckets * cfg.n_subcells);
        auto a = panel_with(cfg, g.vec(n, 0, 100), g.vec(n, 0, 100));
        auto b = panel_with(cfg, g.vec(n, 0, 100), g.vec(n, 0, 100));
        const auto v = corr_vector(a, b, cfg, StateMode::Imbalance);
        for (int k = 0; k < cfg.n_buckets; ++k) {
            std::vector<double> x, y;
            for (int j = 0; j < cfg.n_subcells; ++j) {
                const auto i = static_cast<std::size_t>(k * cfg.n_subcells + j);
                x.push_back(a.fine_buy[i] - a.fine_sell[i]);
                y.push_back(b.fine_buy[i] - b.fine_sell[i]);
            }
            CHECK(v[static_cast<std::size_t>(k)] == doctest::Approx(testsupport::textbook_pearson(x, y)).epsilon(1e-10));
        }
    }
}

TEST_CASE("state matrix shapes") {
    Gen g(52);
    const auto two = build_panels(g.records(2, 80));
    CHECK(state_matrix(two, StateMode::Imbalance).values.rows() == 1);
    CHECK(state_matrix(two, StateMode::Imbalance).values.cols() == 16);

    MarketConfig mc;
    mc.n_traders = 1;
    const auto m = generate(mc);
    const auto st = state_matrix(build_panels(m.tapes[0]), StateMode::Imbalance);
    CHECK(st.values.rows() == 484);
    CHECK(st.values.cols() == 16);
    CHECK(st.dates.size() == 484);
    CHECK(st.values.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("duplicated days persist perfectly") {
    Gen g(53);
    auto day = g.records(1, 300, 10.0, 4.0, 0.0);
    std::vector<TapeRecord> recs;
    Date d{2009, 1, 5};
    for (int t = 0; t < 5; ++t) {
        for (auto r : day) {
            r.date = d;
            recs.push_back(r);
        }
        d = Date::from_serial(d.serial() + 1);
    }
    const auto s = build_panels(recs);
    const auto st = state_matrix(s, StateMode::Buy);
    // Every day, day 0 included, references the same vwap.
    for (int t = 0; t < st.values.rows(); ++t)
        for (int k = 0; k < 16; ++k) {
            const double v = st.values(t, k);
            CHECK((v == doctest::Approx(1.0) || v == 0.0));
        }
}

TEST_CASE("property: state matrix is invariant to volume rescaling") {
    Gen g(54);
    for (int rep = 0; rep < 5; ++rep) {
        auto recs = g.records(8, 120);
        const auto a = state_matrix(build_panels(recs), StateMode::Imbalance);
        const int c = g.integer(2, 9);
        for (auto& r : recs) r.volume *= c;
        const auto b = state_matrix(build_panels(recs), StateMode::Imbalance);
        CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("serial and parallel state matrices agree") {
    Gen g(55);
    const auto s = build_panels(g.records(30, 200));
    for (auto mode : {StateMode::Buy, StateMode::Sell, StateMode::Imbalance}) {
        const auto a = state_matrix(s, mode, Exec::Serial);
        const auto b = state_matrix(s, mode, Exec::Parallel);
        CHECK(a.values == b.values);
        CHECK(a.zero_variance_entries == b.zero_variance_entries);
    }
}

TEST_CASE("attenuation formulas") {
    auto a = attenuation(0.8, 0, 0);
    CHECK(a.approx == 0.8);
    CHECK(a.exact == 0.8);
    a = attenuation(0.5, 0.1, 0.1);
    CHECK(a.approx == doctest::Approx(0.45));
    CHECK(a.exact == doctest::Approx(0.5 / 1.1));
}

TEST_CASE("property: attenuation never inflates") {
    Gen g(56);
    for (int rep = 0; rep < 300; ++rep) {
        const double rho = g.uniform(-1, 1), n1 = g.uniform(0, 3), n2 = g.uniform(0, 3);
        const auto a = attenuation(rho, n1, n2);
        CHECK(std::abs(a.exact) <= std::abs(rho));
        if (rho != 0.0 && (n1 > 0 || n2 > 0)) CHECK(std::abs(a.exact) < std::abs(rho));
    }
}

TEST_CASE("state csv round trip") {
    Gen g(57);
    const auto s = state_matrix(build_panels(g.records(6, 90)), StateMode::Sell);
    std::ostringstream out;
    out << "# provenance line\n";
    write_states_csv(out, s);
    std::istringstream in(out.str());
    const auto back = read_states_csv(in);
    CHECK(back.values == s.values);
    CHECK(back.dates == s.dates);
    CHECK(back.mode == StateMode::Sell);
    std::istringstream bad("date,mode,x0\n2009-01-05,buy,0.5\n2009-01-06,buy,0.5,0.1\n");
    CHECK_THROWS_AS(read_states_csv(bad), Error);
}
