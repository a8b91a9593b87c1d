#include "dualstate/residual_study.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "dualstate/stats.hpp"

namespace dualstate {

namespace {

double corr_or_zero(const std::vector<double>& a, const std::vector<double>& b, bool* undefined) {
    const auto r = stats::pearson(a, b);
    if (!r) {
        if (undefined) *undefined = true;
        return 0.0;
    }
    return *r;
}

struct Standardizer {
    double mean = 0.0, sd = 1.0;
    static Standardizer fit(const std::vector<double>& v) {
        Standardizer s;
        if (v.empty()) return s;
        s.mean = stats::mean(v);
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(v.size()));
        s.sd = sd > 0.0 ? sd : 1.0;
        return s;
    }
    double to(double x) const { return (x - mean) / sd; }
    double from(double z) const { return z * sd + mean; }
};

double index_at(const IndexSeries& index, int month) {
    const auto v = index.at(month);
    if (!v) throw_data("index has no value for month " + date_from_month_key(month).iso().substr(0, 7));
    return *v;
}

void check_rows(const TraderResiduals& tr) {
    if (static_cast<std::size_t>(tr.residuals.rows()) != tr.dates.size())
        throw_usage("trader " + tr.id + ": residual rows and dates differ in length");
    if (!std::is_sorted(tr.dates.begin(), tr.dates.end())) throw_data("trader " + tr.id + ": dates not sorted");
}

std::vector<int> months_of(const TraderResiduals& tr) {
    std::vector<int> m;
    for (const auto& d : tr.dates)
        if (m.empty() || m.back() != d.month_key()) m.push_back(d.month_key());
    return m;
}

std::vector<double> row_of(const Eigen::MatrixXd& M, Eigen::Index t) {
    std::vector<double> r(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index k = 0; k < M.cols(); ++k) r[static_cast<std::size_t>(k)] = M(t, k);
    return r;
}

}  // namespace

const char* protocol_name(Protocol p) {
    switch (p) {
        case Protocol::Shallow: return "shallow";
        case Protocol::Deep10: return "deep10";
        default: return "cnn7";
    }
}

MonthlyMoments monthly_moments(const Eigen::MatrixXd& residuals, const std::vector<Date>& dates,
                               std::size_t min_values) {
    if (static_cast<std::size_t>(residuals.rows()) != dates.size()) throw_usage("residual rows and dates differ in length");
    std::map<int, std::vector<double>> pooled;
    for (Eigen::Index t = 0; t < residuals.rows(); ++t) {
        auto& v = pooled[dates[static_cast<std::size_t>(t)].month_key()];
        for (Eigen::Index k = 0; k < residuals.cols(); ++k) v.push_back(residuals(t, k));
    }
    MonthlyMoments out;
    out.table.resize(static_cast<Eigen::Index>(pooled.size()), 4);
    Eigen::Index i = 0;
    for (const auto& [month, v] : pooled) {
        const double n = static_cast<double>(v.size());
        double m = 0.0;
        for (double x : v) m += x;
        m /= n;
        double m2 = 0.0, m3 = 0.0, m4 = 0.0;
        for (double x : v) {
            const double d = x - m;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        const bool flat = !(m2 > 1e-24 * std::max(1.0, m * m));
        out.months.push_back(month);
        out.counts.push_back(v.size());
        out.low_sample.push_back(v.size() < min_values);
        out.degenerate.push_back(flat);
        out.table(i, 0) = m;
        out.table(i, 1) = flat ? 0.0 : m2;
        out.table(i, 2) = flat ? 0.0 : m3 / std::pow(m2, 1.5);
        out.table(i, 3) = flat ? 0.0 : m4 / (m2 * m2) - 3.0;
        ++i;
    }
    return out;
}

BackcastReport shallow_backcast(const MonthlyMoments& moments, const IndexSeries& index, const ShallowOptions& opt,
                                Exec exec) {
    const auto n = static_cast<long>(moments.months.size());
    if (n < 3) throw_data("shallow backcast needs at least three months");
    const int n_feat = static_cast<int>(moments.table.cols());
    BackcastReport rep;
    rep.protocol = Protocol::Shallow;
    rep.index = index.name;
    rep.months = moments.months;
    for (int m : moments.months) rep.actual.push_back(index_at(index, m));
    rep.predicted.assign(static_cast<std::size_t>(n), 0.0);

#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long hold = 0; hold < n; ++hold) {
        std::vector<Standardizer> fs(static_cast<std::size_t>(n_feat));
        for (int f = 0; f < n_feat; ++f) {
            std::vector<double> col;
            for (long i = 0; i < n; ++i)
                if (i != hold) col.push_back(moments.table(i, f));
            fs[static_cast<std::size_t>(f)] = Standardizer::fit(col);
        }
        std::vector<double> ys;
        for (long i = 0; i < n; ++i)
            if (i != hold) ys.push_back(rep.actual[static_cast<std::size_t>(i)]);
        const auto ts = Standardizer::fit(ys);
        auto features = [&](long i) {
            std::vector<double> x(static_cast<std::size_t>(n_feat));
            for (int f = 0; f < n_feat; ++f) x[static_cast<std::size_t>(f)] = fs[static_cast<std::size_t>(f)].to(moments.table(i, f));
            return x;
        };
        nn::Dataset data;
        for (long i = 0; i < n; ++i) {
            if (i == hold) continue;
            data.inputs.push_back(features(i));
            data.targets.push_back(ts.to(rep.actual[static_cast<std::size_t>(i)]));
        }
        auto net = nn::init_net(nn::shallow_net(n_feat, opt.hidden, opt.activation, opt.seed));
        net = nn::train(std::move(net), data, opt.rounds, opt.learning_rate);
        rep.predicted[static_cast<std::size_t>(hold)] = ts.from(nn::predict(net, features(hold)));
    }
    const double r = corr_or_zero(rep.predicted, rep.actual, &rep.undefined);
    rep.runs = {r};
    rep.mean_r = r;
    return rep;
}

BackcastReport deep_backcast(const TraderResiduals& train, const TraderResiduals& predict, const IndexSeries& index,
                             const DeepOptions& opt) {
    check_rows(train);
    check_rows(predict);
    const auto months = months_of(train);
    if (months != months_of(predict)) throw_data("training and prediction traders span different months");
    if (months.size() < 3) throw_data("deep backcast needs at least three months");

    std::vector<double> actual;
    for (int m : months) actual.push_back(index_at(index, m));
    const auto ts = Standardizer::fit(actual);

    // Last row of each month in the training trader.
    std::vector<bool> last(train.dates.size(), false);
    for (std::size_t t = 0; t < train.dates.size(); ++t)
        last[t] = t + 1 == train.dates.size() || train.dates[t + 1].month_key() != train.dates[t].month_key();

    double ss = 0.0;
    std::size_t cnt = 0;
    for (Eigen::Index t = 0; t < train.residuals.rows(); ++t)
        if (!last[static_cast<std::size_t>(t)])
            for (Eigen::Index k = 0; k < train.residuals.cols(); ++k) {
                ss += train.residuals(t, k) * train.residuals(t, k);
                ++cnt;
            }
    const double scale = cnt && ss > 0.0 ? std::sqrt(ss / static_cast<double>(cnt)) : 1.0;
    auto input = [&](const Eigen::MatrixXd& M, Eigen::Index t) {
        auto r = row_of(M, t);
        for (double& v : r) v /= scale;
        return r;
    };

    nn::Dataset data;
    for (Eigen::Index t = 0; t < train.residuals.rows(); ++t) {
        if (last[static_cast<std::size_t>(t)]) continue;
        data.inputs.push_back(input(train.residuals, t));
        data.targets.push_back(ts.to(index_at(index, train.dates[static_cast<std::size_t>(t)].month_key())));
    }
    if (data.inputs.empty()) throw_data("no training rows outside month ends");
    auto net = nn::init_net(nn::ten_layer_net(static_cast<int>(train.residuals.cols()), opt.activation, opt.seed));
    net = nn::train(std::move(net), data, opt.rounds, opt.learning_rate);

    BackcastReport rep;
    rep.protocol = Protocol::Deep10;
    rep.index = index.name;
    rep.months = months;
    rep.actual = actual;

    std::vector<double> held, held_actual;
    for (Eigen::Index t = 0; t < train.residuals.rows(); ++t) {
        if (!last[static_cast<std::size_t>(t)]) continue;
        held.push_back(ts.from(nn::predict(net, input(train.residuals, t))));
        held_actual.push_back(index_at(index, train.dates[static_cast<std::size_t>(t)].month_key()));
    }
    rep.in_sample_r = corr_or_zero(held, held_actual, nullptr);

    std::map<int, std::pair<double, int>> acc;
    for (Eigen::Index t = 0; t < predict.residuals.rows(); ++t) {
        auto& a = acc[predict.dates[static_cast<std::size_t>(t)].month_key()];
        a.first += ts.from(nn::predict(net, input(predict.residuals, t)));
        ++a.second;
    }
    for (int m : months) rep.predicted.push_back(acc[m].first / acc[m].second);
    const double r = corr_or_zero(rep.predicted, rep.actual, &rep.undefined);
    rep.runs = {r};
    rep.mean_r = r;
    return rep;
}

std::vector<std::vector<double>> month_windows(const TraderResiduals& tr, const std::vector<int>& months, int rows,
                                               std::size_t* padded) {
    check_rows(tr);
    if (rows < 1) throw_usage("window needs at least one row");
    const auto cols = static_cast<std::size_t>(tr.residuals.cols());
    std::vector<std::vector<double>> out;
    for (int m : months) {
        std::vector<double> w(static_cast<std::size_t>(rows) * cols, 0.0);
        int r = 0, seen = 0;
        for (Eigen::Index t = 0; t < tr.residuals.rows(); ++t) {
            if (tr.dates[static_cast<std::size_t>(t)].month_key() != m) continue;
            ++seen;
            if (r >= rows) continue;
            for (std::size_t k = 0; k < cols; ++k)
                w[static_cast<std::size_t>(r) * cols + k] = tr.residuals(t, static_cast<Eigen::Index>(k));
            ++r;
        }
        if (padded && seen != rows) ++*padded;
        out.push_back(std::move(w));
    }
    return out;
}

BackcastReport cnn_backcast(const std::vector<TraderResiduals>& training, const std::vector<TraderResiduals>& prediction,
                            const IndexSeries& index, const CnnOptions& opt, Exec exec) {
    if (training.empty() || prediction.empty()) throw_usage("cnn backcast needs training and prediction traders");
    std::set<std::string> train_ids;
    for (const auto& t : training) {
        check_rows(t);
        train_ids.insert(t.id);
    }
    for (const auto& p : prediction) {
        check_rows(p);
        if (train_ids.count(p.id)) throw_usage("trader " + p.id + " appears in both training and prediction roles");
    }
    const Eigen::Index cols = training.front().residuals.cols();
    for (const auto* group : {&training, &prediction})
        for (const auto& t : *group)
            if (t.residuals.cols() != cols) throw_usage("traders differ in bucket count");

    std::vector<std::uint64_t> seeds = opt.seeds;
    if (seeds.empty())
        for (int s = 1; s <= opt.runs; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    if (seeds.empty()) throw_usage("cnn backcast needs at least one run");
    const auto spec0 = nn::cnn7(opt.window_rows, static_cast<int>(cols), opt.activation, seeds.front(), opt.hidden, opt.pool);
    nn::layer_shapes(spec0);  // rejects windows below the receptive field

    std::set<int> month_set;
    for (const auto& t : training)
        for (int m : months_of(t)) month_set.insert(m);
    std::vector<int> months;
    for (int m : month_set)
        if (index.at(m)) months.push_back(m);
    if (months.size() < 3) throw_data("cnn backcast needs at least three indexed months");

    BackcastReport rep;
    rep.protocol = Protocol::CNN7;
    rep.index = index.name;
    rep.months = months;
    for (int m : months) rep.actual.push_back(index_at(index, m));
    const auto ts = Standardizer::fit(rep.actual);

    nn::Dataset data;
    for (const auto& t : training) {
        auto w = month_windows(t, months, opt.window_rows, &rep.padded_months);
        for (std::size_t i = 0; i < w.size(); ++i) {
            data.inputs.push_back(std::move(w[i]));
            data.targets.push_back(ts.to(rep.actual[i]));
        }
    }
    double ss = 0.0, sum = 0.0, cnt = 0.0;
    for (const auto& w : data.inputs)
        for (double v : w) {
            sum += v;
            ss += v * v;
            cnt += 1.0;
        }
    const double var = ss / cnt - (sum / cnt) * (sum / cnt);
    const double scale = var > 0.0 ? std::sqrt(var) : 1.0;
    for (auto& w : data.inputs)
        for (double& v : w) v /= scale;

    std::vector<std::vector<std::vector<double>>> pred_windows;
    for (const auto& p : prediction) {
        auto w = month_windows(p, months, opt.window_rows, &rep.padded_months);
        for (auto& x : w)
            for (double& v : x) v /= scale;
        pred_windows.push_back(std::move(w));
    }

    const auto n_runs = static_cast<long>(seeds.size());
    std::vector<std::vector<double>> run_pred(seeds.size());
    rep.runs.assign(seeds.size(), 0.0);
    std::vector<char> run_undefined(seeds.size(), 0);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long r = 0; r < n_runs; ++r) {
        const auto ri = static_cast<std::size_t>(r);
        auto net = nn::init_net(nn::cnn7(opt.window_rows, static_cast<int>(cols), opt.activation, seeds[ri], opt.hidden, opt.pool));
        net = nn::train(std::move(net), data, opt.rounds, opt.learning_rate);
        std::vector<double> pred(months.size(), 0.0);
        for (std::size_t m = 0; m < months.size(); ++m) {
            for (const auto& w : pred_windows) pred[m] += nn::predict(net, w[m]);
            pred[m] = ts.from(pred[m] / static_cast<double>(pred_windows.size()));
        }
        bool undef = false;
        rep.runs[ri] = corr_or_zero(pred, rep.actual, &undef);
        run_undefined[ri] = undef;
        run_pred[ri] = std::move(pred);
    }
    rep.undefined = std::any_of(run_undefined.begin(), run_undefined.end(), [](char c) { return c != 0; });
    rep.predicted.assign(months.size(), 0.0);
    for (const auto& p : run_pred)
        for (std::size_t m = 0; m < months.size(); ++m) rep.predicted[m] += p[m] / static_cast<double>(run_pred.size());
    rep.mean_r = stats::mean(rep.runs);
    rep.half_width = stats::student_half_width(rep.runs, 0.10);
    return rep;
}

std::string report_json(const BackcastReport& r) {
    nlohmann::json j;
    j["protocol"] = protocol_name(r.protocol);
    j["index"] = r.index;
    std::vector<std::string> months;
    for (int m : r.months) months.push_back(date_from_month_key(m).iso().substr(0, 7));
    j["months"] = months;
    j["actual"] = r.actual;
    j["predicted"] = r.predicted;
    j["runs"] = r.runs;
    j["mean_r"] = r.mean_r;
    j["half_width"] = r.half_width;
    j["undefined"] = r.undefined;
    if (r.protocol == Protocol::Deep10) j["in_sample_r"] = r.in_sample_r;
    if (r.protocol == Protocol::CNN7) j["padded_months"] = r.padded_months;
    return j.dump();
}

}  // namespace dualstate
