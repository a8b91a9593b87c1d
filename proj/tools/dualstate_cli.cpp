// dualstate command-line front end.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dualstate/bucket_panel.hpp"
#include "dualstate/common.hpp"
#include "dualstate/dual_regression.hpp"
#include "dualstate/index_series.hpp"
#include "dualstate/liquidity_lab.hpp"
#include "dualstate/matrix_io.hpp"
#include "dualstate/pdo_kernel.hpp"
#include "dualstate/pipeline.hpp"
#include "dualstate/residual_study.hpp"
#include "dualstate/state_space.hpp"
#include "dualstate/synth_market.hpp"
#include "dualstate/tape_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dualstate;

namespace {

struct Global {
    std::string out = ".";
    std::uint64_t seed = 1;
    std::string format = "json";
};

struct BucketOpts {
    double delta = 0.5;
    int buckets = 16;
    int subcells = 50;
    bool geometric = false;
    std::string mode = "imbalance";

    BucketConfig config() const {
        BucketConfig c{delta, buckets, subcells, geometric ? ImbalanceMode::Geometric : ImbalanceMode::Arithmetic};
        c.check();
        return c;
    }
};

void add_bucket_options(CLI::App* sub, BucketOpts& b, bool with_mode) {
    sub->add_option("--delta", b.delta, "Bucket width in CNY");
    sub->add_option("--buckets", b.buckets, "Number of price-change buckets");
    sub->add_option("--subcells", b.subcells, "Sub-cells per bucket");
    sub->add_flag("--geometric", b.geometric, "Signed geometric-mean imbalance");
    if (with_mode) sub->add_option("--mode", b.mode, "State mode: buy, sell or imbalance");
}

// Resolved option values of one subcommand plus the globals, excluding output
// placement, so the hash only moves when the computation does.
std::string canonical_config(const CLI::App& app, const CLI::App& sub) {
    std::ostringstream s;
    auto dump = [&s](const CLI::App& a, const std::string& prefix) {
        for (const CLI::Option* o : a.get_options()) {
            const std::string name = o->get_name(false, true);
            if (name.empty() || name == "--help" || name == "--out" || name == "--config" || name == "--version") continue;
            s << prefix << name << '=';
            if (o->count() > 0) {
                const auto& r = o->results();
                for (std::size_t i = 0; i < r.size(); ++i) s << (i ? ";" : "") << r[i];
            } else {
                s << o->get_default_str();
            }
            s << '\n';
        }
    };
    dump(app, "");
    dump(sub, sub.get_name() + ".");
    return s.str();
}

struct Context {
    Global g;
    std::string command;
    std::string config_hash;
    std::vector<std::string> artifacts;

    fs::path path(const std::string& name) const { return fs::path(g.out) / name; }

    std::string header() const {
        return "# dualstate " + std::string(version()) + "\n# command=" + command + "\n# config=" + config_hash +
               "\n# seed=" + std::to_string(g.seed) + "\n";
    }

    json provenance() const {
        return {{"tool", "dualstate"}, {"version", version()}, {"command", command}, {"config", config_hash}, {"seed", g.seed}};
    }

    void write(const std::string& name, const std::string& body, bool csv) {
        const fs::path p = path(name);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f) throw_data("cannot write " + p.string());
        if (csv) f << header();
        f << body;
        if (!f) throw_data("write failed for " + p.string());
        artifacts.push_back(p.generic_string());
    }

    void write_json(const std::string& name, json body) {
        body["provenance"] = provenance();
        write(name, body.dump(1) + "\n", false);
    }
};

std::string stem_of(const std::string& file) { return fs::path(file).stem().string(); }

std::vector<TapeRecord> load_tape(const std::string& file, std::size_t* rejected = nullptr) {
    auto parsed = parse_tape_file(file);
    if (rejected) *rejected = parsed.rejected.size();
    if (parsed.records.empty()) throw_data(file + ": no valid records");
    return std::move(parsed.records);
}

std::vector<IndexSeries> load_indexes(const std::vector<std::string>& files) {
    std::vector<IndexSeries> out;
    for (const auto& f : files) out.push_back(read_index_file(f));
    return out;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// ---- synth ----------------------------------------------------------------

struct SynthOpts {
    MarketConfig m;
    std::vector<std::string> shocks;
};

Shock parse_shock(const std::string& s) {
    Shock sh;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(s);
    if (!(in >> sh.begin >> c1 >> sh.end >> c2 >> sh.volume_mult >> c3 >> sh.spread_mult) || c1 != ':' || c2 != ':' ||
        c3 != ':')
        throw_usage("shock must look like begin:end:volume_mult:spread_mult");
    return sh;
}

json run_synth(Context& ctx, SynthOpts& o) {
    MarketConfig cfg = o.m;
    cfg.seed = ctx.g.seed;
    for (const auto& s : o.shocks) cfg = inject_shock(cfg, parse_shock(s));
    const auto market = generate(cfg);
    std::size_t records = 0;
    for (std::size_t k = 0; k < market.tapes.size(); ++k) {
        std::ostringstream s;
        write_tape(s, market.tapes[k]);
        ctx.write("t" + std::to_string(k) + ".csv", s.str(), true);
        records += market.tapes[k].size();
    }
    for (const auto* idx : {&market.truth.sentiment, &market.truth.returns, &market.truth.yield}) {
        std::ostringstream s;
        write_index_csv(s, *idx);
        ctx.write("indexes/" + idx->name + ".csv", s.str(), true);
    }
    json truth = json::parse(truth_json(market.truth));
    ctx.write_json("truth.json", truth);
    return {{"tapes", market.tapes.size()}, {"records", records}, {"days", cfg.n_days}};
}

// ---- ingest / summarize ---------------------------------------------------

json validation_json(const ValidationReport& v) {
    return {{"records", v.records},
            {"unknown", v.unknown},
            {"unknown_side_fraction", v.unknown_side_fraction},
            {"threshold", v.threshold},
            {"unknown_flag", v.unknown_flag},
            {"rejected_total", v.rejected_total},
            {"rejected_by_reason", v.rejected_by_reason}};
}

json run_ingest(Context& ctx, const std::vector<std::string>& files, double threshold) {
    std::size_t records = 0, rejected = 0;
    bool flagged = false;
    for (const auto& f : files) {
        const auto parsed = parse_tape_file(f);
        const auto report = validate(parsed.records, parsed.rejected, threshold);
        json j = validation_json(report);
        auto& rows = j["rejected_rows"] = json::array();
        for (const auto& r : parsed.rejected) rows.push_back({{"line", r.line}, {"reason", r.reason}, {"text", r.text}});
        ctx.write_json(stem_of(f) + ".validation.json", j);
        std::ostringstream s;
        write_tape(s, parsed.records);
        ctx.write(stem_of(f) + ".canonical.csv", s.str(), true);
        records += parsed.records.size();
        rejected += parsed.rejected.size();
        flagged = flagged || report.unknown_flag;
    }
    return {{"files", files.size()}, {"records", records}, {"rejected", rejected}, {"unknown_flag", flagged}};
}

SideSubset parse_subset(const std::string& s) {
    if (s == "all") return SideSubset::All;
    if (s == "buy") return SideSubset::Buy;
    if (s == "sell") return SideSubset::Sell;
    if (s == "known") return SideSubset::Known;
    throw_usage("unknown side subset '" + s + "'");
}

json summary_json(const TapeSummary& s) {
    return {{"trade_count", s.trade_count},         {"min_price", s.min_price},
            {"avg_price", s.avg_price},             {"max_price", s.max_price},
            {"std_price", s.std_price},             {"avg_daily_volume", s.avg_daily_volume},
            {"sample_volume_variance", s.sample_volume_variance},
            {"unknown_side_fraction", s.unknown_side_fraction},
            {"trading_days", s.trading_days}};
}

json run_summarize(Context& ctx, const std::vector<std::string>& files, const std::string& side) {
    const auto subset = parse_subset(side);
    json all = json::object();
    std::ostringstream csv;
    csv << "tape,trades,min_price,avg_price,max_price,std_price,avg_daily_volume,sample_volume_variance,unknown_side_fraction\n";
    for (const auto& f : files) {
        const auto s = summarize(load_tape(f), subset);
        all[stem_of(f)] = summary_json(s);
        csv << stem_of(f) << ',' << s.trade_count << ',' << fmt_double(s.min_price) << ',' << fmt_double(s.avg_price) << ','
            << fmt_double(s.max_price) << ',' << fmt_double(s.std_price) << ',' << fmt_double(s.avg_daily_volume) << ','
            << fmt_double(s.sample_volume_variance) << ',' << fmt_double(s.unknown_side_fraction) << '\n';
    }
    if (ctx.g.format == "csv") ctx.write("summary.csv", csv.str(), true);
    else ctx.write_json("summary.json", {{"side", side}, {"tapes", all}});
    return {{"side", side}, {"tapes", all}};
}

// ---- panels / statespace / fit --------------------------------------------

json run_panels(Context& ctx, const std::vector<std::string>& files, const BucketOpts& b, bool fine) {
    std::size_t days = 0, discarded = 0;
    for (const auto& f : files) {
        const auto series = build_panels(load_tape(f), b.config());
        std::ostringstream s;
        write_panels_csv(s, series);
        ctx.write(stem_of(f) + ".panels.csv", s.str(), true);
        if (fine) {
            std::ostringstream w;
            write_fine_csv(w, series);
            ctx.write(stem_of(f) + ".fine.csv", w.str(), true);
        }
        days += series.panels.size();
        discarded += series.discarded_trades;
    }
    return {{"files", files.size()}, {"days", days}, {"discarded_trades", discarded}};
}

json run_statespace(Context& ctx, const std::vector<std::string>& files, const BucketOpts& b) {
    json rows = json::object();
    for (const auto& f : files) {
        const auto series = build_panels(load_tape(f), b.config());
        const auto st = state_matrix(series, parse_mode(b.mode));
        std::ostringstream s;
        write_states_csv(s, st);
        ctx.write(stem_of(f) + ".states.csv", s.str(), true);
        rows[stem_of(f)] = {{"rows", st.values.rows()}, {"zero_variance_entries", st.zero_variance_entries}};
    }
    return {{"mode", b.mode}, {"states", rows}};
}

struct FitOpts {
    std::vector<std::string> states, tapes;
    bool no_intercept = false;
    double rcond = 1e-12;
    double imag_tol = 1e-9;
};

json run_fit(Context& ctx, const FitOpts& o, const BucketOpts& b) {
    if (o.states.empty() == o.tapes.empty()) throw_usage("fit needs either --states or --tape inputs");
    FitOptions fo;
    fo.intercept = !o.no_intercept;
    fo.rcond = o.rcond;
    fo.imag_tol = o.imag_tol;

    std::vector<std::string> names;
    std::vector<StateMatrix> states;
    for (const auto& f : o.states) {
        std::ifstream in(f);
        if (!in) throw_data("cannot open states file " + f);
        states.push_back(read_states_csv(in));
        names.push_back(stem_of(f));
    }
    for (const auto& f : o.tapes) {
        states.push_back(state_matrix(build_panels(load_tape(f), b.config()), parse_mode(b.mode)));
        names.push_back(stem_of(f));
    }
    const auto outs = fit_many(states, fo);

    double max_res = 0.0, max_recon = 0.0, max_imag = 0.0;
    json per = json::object();
    for (std::size_t i = 0; i < outs.size(); ++i) {
        const auto& r = outs[i];
        const double res = r.residuals.size() ? r.residuals.cwiseAbs().maxCoeff() : 0.0;
        const double recon = r.dX.size() ? (r.predictions + r.residuals - r.dX).cwiseAbs().maxCoeff() : 0.0;
        max_res = std::max(max_res, res);
        max_recon = std::max(max_recon, recon);
        max_imag = std::max(max_imag, r.max_imag);
        std::ostringstream beta, pred, resid;
        write_matrix_csv(beta, r.beta);
        write_matrix_csv(pred, r.predictions);
        write_matrix_csv(resid, r.residuals);
        ctx.write(names[i] + ".beta.csv", beta.str(), true);
        ctx.write(names[i] + ".predictions.csv", pred.str(), true);
        ctx.write(names[i] + ".residuals.csv", resid.str(), true);
        const auto split = variance_split(r);
        json d = {{"max_imag", r.max_imag},
                  {"rank", r.rank},
                  {"regressors", r.regressors},
                  {"max_abs_residual", res},
                  {"max_reconstruction_error", recon},
                  {"P", split.P},
                  {"F", split.F},
                  {"degenerate", split.degenerate},
                  {"residual_autocorr_lag1", residual_autocorr(r, 1)}};
        if (i > 0) {
            const auto sim = beta_similarity(outs[0].beta, r.beta);
            d["beta_similarity_to_first"] = {{"col_corr", sim.col_corr}, {"row_corr", sim.row_corr}};
        }
        ctx.write_json(names[i] + ".fit.json", d);
        per[names[i]] = {{"rank", r.rank}, {"max_abs_residual", res}};
    }
    if (outs.size() > 1) {
        std::ostringstream det;
        write_matrix_csv(det, determination_matrix(outs));
        ctx.write("determination.csv", det.str(), true);
    }
    return {{"inputs", outs.size()},
            {"max_abs_residual", max_res},
            {"max_reconstruction_error", max_recon},
            {"max_imag", max_imag},
            {"fits", per}};
}

// ---- backcast ---------------------------------------------------------------

struct BackcastOpts {
    std::vector<std::string> train, predict, indexes;
    std::string protocol = "cnn7";
    int runs = 6;
    int rounds = 0;  // 0: protocol default
    double lr = 0.0;
    std::string activation = "tanh";
    int hidden = 16;
};

json run_backcast(Context& ctx, const BackcastOpts& o, const BucketOpts& b) {
    if (o.train.empty() || o.indexes.empty()) throw_usage("backcast needs --train and --index inputs");
    const auto act = nn::parse_activation(o.activation);
    auto analyze = [&](const std::vector<std::string>& files) {
        std::vector<TraderResiduals> out;
        for (const auto& f : files) out.push_back(residuals_of(stem_of(f), analyze_tape(load_tape(f), b.config(), parse_mode(b.mode))));
        return out;
    };
    const auto train = analyze(o.train);
    const auto predict = analyze(o.predict);
    json results = json::object();
    for (const auto& index : load_indexes(o.indexes)) {
        BackcastReport rep;
        if (o.protocol == "shallow") {
            ShallowOptions so;
            so.activation = act;
            so.seed = ctx.g.seed;
            if (o.rounds > 0) so.rounds = o.rounds;
            if (o.lr > 0.0) so.learning_rate = o.lr;
            rep = shallow_backcast(monthly_moments(train[0].residuals, train[0].dates), index, so);
        } else if (o.protocol == "deep10") {
            if (predict.empty()) throw_usage("deep10 needs a --predict trader");
            DeepOptions d;
            d.activation = act;
            d.seed = ctx.g.seed;
            if (o.rounds > 0) d.rounds = o.rounds;
            if (o.lr > 0.0) d.learning_rate = o.lr;
            rep = deep_backcast(train[0], predict[0], index, d);
        } else if (o.protocol == "cnn7") {
            if (predict.empty()) throw_usage("cnn7 needs --predict traders");
            CnnOptions c;
            c.activation = act;
            c.hidden = o.hidden;
            c.runs = o.runs;
            for (int r = 0; r < o.runs; ++r) c.seeds.push_back(ctx.g.seed + static_cast<std::uint64_t>(r));
            if (o.rounds > 0) c.rounds = o.rounds;
            if (o.lr > 0.0) c.learning_rate = o.lr;
            rep = cnn_backcast(train, predict, index, c);
        } else {
            throw_usage("unknown protocol '" + o.protocol + "'");
        }
        const std::string base = "backcast_" + o.protocol + "_" + index.name;
        if (ctx.g.format == "csv") {
            std::ostringstream s;
            s << "run,r\n";
            for (std::size_t i = 0; i < rep.runs.size(); ++i) s << i + 1 << ',' << fmt_double(rep.runs[i]) << '\n';
            s << "mean," << fmt_double(rep.mean_r) << "\nhalf_width," << fmt_double(rep.half_width) << '\n';
            ctx.write(base + ".csv", s.str(), true);
        } else {
            ctx.write_json(base + ".json", json::parse(report_json(rep)));
        }
        results[index.name] = {{"mean_r", rep.mean_r}, {"half_width", rep.half_width}, {"undefined", rep.undefined}};
    }
    return {{"protocol", o.protocol}, {"indexes", results}};
}

// ---- liquidity / eventstudy -----------------------------------------------

json run_liquidity(Context& ctx, const std::vector<std::string>& files, const BucketOpts& b) {
    json per = json::object();
    for (const auto& f : files) {
        const auto costs = cost_series(build_panels(load_tape(f), b.config()));
        std::ostringstream l, a;
        write_lambda_csv(l, costs);
        write_lambda_avg_csv(a, costs);
        ctx.write(stem_of(f) + ".lambda.csv", l.str(), true);
        ctx.write(stem_of(f) + ".lambda_avg.csv", a.str(), true);
        double m = 0.0;
        for (double v : costs.lambda_avg) m += v;
        per[stem_of(f)] = {{"rows", costs.lambda_avg.size()},
                           {"mean_lambda", costs.lambda_avg.empty() ? 0.0 : m / static_cast<double>(costs.lambda_avg.size())},
                           {"no_quote", costs.no_quote},
                           {"illiquid", costs.illiquid}};
    }
    return {{"tapes", per}};
}

struct EventOpts {
    std::string tape;
    std::vector<std::string> indexes;
    EventStudyConfig cfg;
    std::string activation = "relu";
    int nets = 3;
    std::vector<std::string> windows;
};

json run_eventstudy(Context& ctx, EventOpts& o, const BucketOpts& b) {
    if (o.tape.empty() || o.indexes.empty()) throw_usage("eventstudy needs --tape and --index");
    EventStudyConfig cfg = o.cfg;
    cfg.activation = nn::parse_activation(o.activation);
    cfg.seeds.clear();
    for (int i = 0; i < o.nets; ++i) cfg.seeds.push_back(ctx.g.seed + static_cast<std::uint64_t>(i));
    cfg.permutation_seed = ctx.g.seed;
    for (const auto& w : o.windows) {
        std::pair<int, int> p;
        char c = 0;
        std::istringstream in(w);
        if (!(in >> p.first >> c >> p.second) || c != ':') throw_usage("window must look like begin:end");
        cfg.prediction_windows.push_back(p);
    }
    const auto costs = cost_series(build_panels(load_tape(o.tape), b.config()));
    json results = json::object();
    for (const auto& index : load_indexes(o.indexes)) {
        const auto rep = event_study(costs, index, cfg);
        const std::string base = "eventstudy_" + index.name;
        if (ctx.g.format == "csv") {
            std::ostringstream s;
            write_hypothesis_csv(s, rep);
            ctx.write(base + ".csv", s.str(), true);
        } else {
            ctx.write_json(base + ".json", json::parse(hypothesis_json(rep)));
        }
        json wins = json::array();
        std::vector<std::string> rejected;
        for (const auto& w : rep.windows) {
            const std::string label = std::to_string(w.begin) + "-" + std::to_string(w.end);
            wins.push_back({{"window", label}, {"p_pearson", opt_json(w.p_pearson)}, {"p_spearman", opt_json(w.p_spearman)}});
            if (w.p_pearson && *w.p_pearson < 0.05) rejected.push_back(label);
        }
        results[index.name] = {{"windows", wins}, {"rejected_5pct", rejected}};
    }
    return {{"indexes", results}};
}

// ---- pdo-demo ---------------------------------------------------------------

struct PdoOpts {
    int points = 256;
    double length = 40.0;
    double variance = 1.0;
    double sigma2 = 0.5;
    double drift = 0.0;
    double time = 1.0;
    std::string beta;
    double t0 = 0.0, t1 = 1.0;
};

json run_pdo(Context& ctx, const PdoOpts& o) {
    auto grid = SpectralGrid::uniform({o.points}, {-o.length / 2.0}, {o.length});
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const double x = grid.axes[0][i];
        grid.values[i] = std::exp(-x * x / (2.0 * o.variance));
    }
    DiffusionParams p;
    p.drift = Eigen::VectorXd::Constant(1, o.drift);
    p.sigma = Eigen::MatrixXd::Constant(1, 1, o.sigma2);
    const auto out = pdo_evolve(grid, p, o.time);
    const double v = o.variance + 2.0 * o.sigma2 * o.time;
    double err = 0.0, m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double x = grid.axes[0][i] + o.drift * o.time;
        const double exact = std::sqrt(o.variance / v) * std::exp(-x * x / (2.0 * v));
        err = std::max(err, std::abs(out.values[i] - exact));
        m0 += grid.values[i].real();
        m1 += out.values[i].real();
    }
    std::ostringstream s;
    write_grid_csv(s, out);
    ctx.write("pdo_grid.csv", s.str(), true);
    json j = {{"points", o.points}, {"max_error_vs_closed_form", err}, {"mass_change", std::abs(m1 - m0)}};
    if (!o.beta.empty()) {
        std::ifstream in(o.beta);
        if (!in) throw_data("cannot open beta file " + o.beta);
        const auto B = read_matrix_csv(in);
        std::ostringstream m;
        write_matrix_csv(m, beta_symbol(B, o.t0, o.t1));
        ctx.write("pdo_symbol.csv", m.str(), true);
        j["symbol_size"] = B.rows();
    }
    return j;
}

// ---- plotdata -----------------------------------------------------------------

std::vector<std::vector<std::string>> read_rows(const std::string& file, std::string* header) {
    std::ifstream in(file);
    if (!in) throw_data("cannot open " + file);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (first) {
            first = false;
            char* end = nullptr;
            const bool numeric = !f.empty() && (std::strtod(f[0].c_str(), &end), end && *end == '\0' && !f[0].empty());
            const bool dated = !f.empty() && parse_iso_date(f[0]).has_value();
            if (!numeric && !dated) {
                if (header) *header = line;
                continue;
            }
        }
        rows.push_back(std::move(f));
    }
    return rows;
}

double to_number(const std::string& s, const std::string& file) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || !end || *end != '\0') throw_data(file + ": non-numeric cell '" + s + "'");
    return v;
}

json run_plotdata(Context& ctx, const std::string& input, const std::string& kind, std::string name) {
    std::string header;
    const auto rows = read_rows(input, &header);
    if (name.empty()) name = stem_of(input) + "." + kind + ".csv";
    std::ostringstream s;
    std::size_t n = 0;
    if (kind == "heatmap") {
        // State CSVs carry date and mode columns before the values.
        const bool states = header.rfind("date,mode", 0) == 0;
        const std::size_t first = states ? 2 : 0;
        s << "x,y,value\n";
        std::size_t width = 0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() <= first) throw_data(input + ": heatmap rows need values");
            if (r == 0) width = rows[r].size();
            if (rows[r].size() != width) throw_data(input + ": ragged heatmap rows");
            for (std::size_t c = first; c < rows[r].size(); ++c) {
                s << c - first << ',' << r << ',' << fmt_double(to_number(rows[r][c], input)) << '\n';
                ++n;
            }
        }
    } else if (kind == "series") {
        s << "date,value\n";
        for (const auto& r : rows) {
            if (r.size() != 2 || !parse_iso_date(r[0])) throw_data(input + ": series rows must be date,value");
            s << r[0] << ',' << fmt_double(to_number(r[1], input)) << '\n';
            ++n;
        }
    } else if (kind == "bars") {
        s << "x,value\n";
        for (const auto& r : rows) {
            if (r.size() != 2) throw_data(input + ": bar rows must be label,value");
            s << r[0] << ',' << fmt_double(to_number(r[1], input)) << '\n';
            ++n;
        }
    } else {
        throw_usage("unknown plot kind '" + kind + "'");
    }
    ctx.write(name, s.str(), true);
    return {{"kind", kind}, {"rows", n}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dualstate: trade-tape state-space analysis toolkit"};
    app.set_version_flag("--version", std::string(version()));
    app.option_defaults()->always_capture_default();
    app.fallthrough();
    app.require_subcommand(1);

    Global g;
    if (const char* env = std::getenv("DUALSTATE_OUT")) g.out = env;
    app.set_config("--config", "", "Config file (flag > file > default)");
    app.add_option("--out", g.out, "Output directory (env DUALSTATE_OUT)");
    app.add_option("--seed", g.seed, "Global seed");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}));

    BucketOpts bucket;

    SynthOpts synth;
    auto* c_synth = app.add_subcommand("synth", "Generate seeded synthetic tapes and indexes");
    c_synth->add_option("--traders", synth.m.n_traders, "Number of trader tapes");
    c_synth->add_option("--days", synth.m.n_days, "Trading days");
    c_synth->add_option("--trades-per-day", synth.m.trades_per_day, "Poisson mean of order events per day");
    c_synth->add_option("--g-sent", synth.m.g_sent, "Sentiment coupling");
    c_synth->add_option("--g-ret", synth.m.g_ret, "Return coupling");
    c_synth->add_option("--g-yield", synth.m.g_yield, "Bond-yield coupling");
    c_synth->add_option("--g-liq", synth.m.g_liq, "Spread-sentiment coupling");
    c_synth->add_option("--spread", synth.m.spread, "Bid-ask spread in CNY");
    c_synth->add_option("--paired", synth.m.paired_fraction, "Share of dealer round trips");
    c_synth->add_option("--unknown", synth.m.unknown_fraction, "Share of records without a side flag");
    c_synth->add_option("--shock", synth.shocks, "begin:end:volume_mult:spread_mult");

    std::vector<std::string> ingest_files;
    double threshold = 0.10;
    auto* c_ingest = app.add_subcommand("ingest", "Parse and validate tapes");
    c_ingest->add_option("files", ingest_files, "Tape files")->required();
    c_ingest->add_option("--threshold", threshold, "Unknown-side flag threshold");

    std::vector<std::string> sum_files;
    std::string side = "all";
    auto* c_sum = app.add_subcommand("summarize", "Descriptive tape statistics");
    c_sum->add_option("files", sum_files, "Tape files")->required();
    c_sum->add_option("--side", side, "all, buy, sell or known");

    std::vector<std::string> panel_files;
    bool fine = false;
    auto* c_panels = app.add_subcommand("panels", "Daily bucket panels");
    c_panels->add_option("files", panel_files, "Tape files")->required();
    c_panels->add_flag("--fine", fine, "Also write sub-cell profiles");
    add_bucket_options(c_panels, bucket, false);

    std::vector<std::string> state_files;
    auto* c_state = app.add_subcommand("statespace", "Interday correlation state matrices");
    c_state->add_option("files", state_files, "Tape files")->required();
    add_bucket_options(c_state, bucket, true);

    FitOpts fit;
    auto* c_fit = app.add_subcommand("fit", "Dual-space operator regression");
    c_fit->add_option("--states", fit.states, "State matrix CSV files");
    c_fit->add_option("--tape", fit.tapes, "Tape files");
    c_fit->add_flag("--no-intercept", fit.no_intercept, "Fit without an intercept");
    c_fit->add_option("--rcond", fit.rcond, "Relative eigenvalue cutoff");
    c_fit->add_option("--imag-tol", fit.imag_tol, "Tolerated imaginary residue");
    add_bucket_options(c_fit, bucket, true);

    BackcastOpts bc;
    auto* c_bc = app.add_subcommand("backcast", "Neural backcast of monthly indexes from residuals");
    c_bc->add_option("--train", bc.train, "Training (informed) trader tapes");
    c_bc->add_option("--predict", bc.predict, "Prediction (uninformed) trader tapes");
    c_bc->add_option("--index", bc.indexes, "Index CSV files");
    c_bc->add_option("--protocol", bc.protocol, "shallow, deep10 or cnn7");
    c_bc->add_option("--runs", bc.runs, "Seeded runs (cnn7)");
    c_bc->add_option("--rounds", bc.rounds, "Training rounds (0: protocol default)");
    c_bc->add_option("--lr", bc.lr, "Learning rate (0: protocol default)");
    c_bc->add_option("--activation", bc.activation, "relu, tanh, logit or identity");
    c_bc->add_option("--hidden", bc.hidden, "Hidden dense width (cnn7)");
    add_bucket_options(c_bc, bucket, true);

    std::vector<std::string> liq_files;
    auto* c_liq = app.add_subcommand("liquidity", "Trading cost and dynamic Amihud lambda");
    c_liq->add_option("files", liq_files, "Tape files")->required();
    add_bucket_options(c_liq, bucket, false);

    EventOpts ev;
    auto* c_ev = app.add_subcommand("eventstudy", "Lambda-based index prediction and H0 tests");
    c_ev->add_option("--tape", ev.tape, "Tape file");
    c_ev->add_option("--index", ev.indexes, "Index CSV files");
    c_ev->add_option("--period", ev.cfg.period_length, "Period length in rows");
    c_ev->add_option("--periods", ev.cfg.n_periods, "Number of periods");
    c_ev->add_option("--train-first", ev.cfg.training_periods.first, "First of the two training periods");
    c_ev->add_option("--window", ev.windows, "Prediction window begin:end (repeatable)");
    c_ev->add_option("--rounds", ev.cfg.rounds, "Training rounds");
    c_ev->add_option("--lr", ev.cfg.learning_rate, "Learning rate");
    c_ev->add_option("--activation", ev.activation, "relu, tanh, logit or identity");
    c_ev->add_option("--nets", ev.nets, "Ensemble size");
    c_ev->add_option("--draws", ev.cfg.permutation_draws, "Permutation draws");
    c_ev->add_option("--min-month-rows", ev.cfg.min_month_rows, "Rows a month needs inside a window");
    add_bucket_options(c_ev, bucket, false);

    PdoOpts pdo;
    auto* c_pdo = app.add_subcommand("pdo-demo", "Spectral diffusion and propagator demo");
    c_pdo->add_option("--points", pdo.points, "Grid points");
    c_pdo->add_option("--length", pdo.length, "Periodic domain length");
    c_pdo->add_option("--variance", pdo.variance, "Initial Gaussian variance");
    c_pdo->add_option("--sigma2", pdo.sigma2, "Diffusion coefficient");
    c_pdo->add_option("--drift", pdo.drift, "Drift");
    c_pdo->add_option("--time", pdo.time, "Evolution time");
    c_pdo->add_option("--beta", pdo.beta, "Beta matrix CSV for the propagator symbol");
    c_pdo->add_option("--t0", pdo.t0, "Symbol start time");
    c_pdo->add_option("--t1", pdo.t1, "Symbol end time");

    std::string plot_input, plot_kind = "heatmap", plot_name;
    auto* c_plot = app.add_subcommand("plotdata", "Plot-ready long-format CSV");
    c_plot->add_option("input", plot_input, "Artifact CSV")->required();
    c_plot->add_option("--kind", plot_kind, "heatmap, series or bars");
    c_plot->add_option("--name", plot_name, "Output file name");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    Context ctx;
    ctx.g = g;
    ctx.command = sub->get_name();
    ctx.config_hash = hex64(fnv1a64(canonical_config(app, *sub)));

    try {
        json r;
        if (sub == c_synth) r = run_synth(ctx, synth);
        else if (sub == c_ingest) r = run_ingest(ctx, ingest_files, threshold);
        else if (sub == c_sum) r = run_summarize(ctx, sum_files, side);
        else if (sub == c_panels) r = run_panels(ctx, panel_files, bucket, fine);
        else if (sub == c_state) r = run_statespace(ctx, state_files, bucket);
        else if (sub == c_fit) r = run_fit(ctx, fit, bucket);
        else if (sub == c_bc) r = run_backcast(ctx, bc, bucket);
        else if (sub == c_liq) r = run_liquidity(ctx, liq_files, bucket);
        else if (sub == c_ev) r = run_eventstudy(ctx, ev, bucket);
        else if (sub == c_pdo) r = run_pdo(ctx, pdo);
        else r = run_plotdata(ctx, plot_input, plot_kind, plot_name);
        json line = {{"command", ctx.command}, {"status", "ok"}, {"config", ctx.config_hash}, {"seed", ctx.g.seed}};
        line["result"] = r;
        line["artifacts"] = ctx.artifacts;
        std::cout << line.dump() << std::endl;
        return 0;
    } catch (const Error& e) {
        std::cerr << "dualstate " << ctx.command << ": " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "dualstate " << ctx.command << ": " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    } catch (const std::exception& e) {
        std::cerr << "dualstate " << ctx.command << ": " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Numeric);
    }
}
