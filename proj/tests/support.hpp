// Generators and independent reference implementations shared by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dualstate/common.hpp"
#include "dualstate/neural_kit.hpp"
#include "dualstate/tape_io.hpp"

namespace testsupport {

using dualstate::Date;
using dualstate::Side;
using dualstate::TapeRecord;

struct Gen {
    std::mt19937_64 rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng); }
    double normal(double m = 0.0, double s = 1.0) { return std::normal_distribution<double>(m, s)(rng); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); }
    bool coin(double p = 0.5) { return uniform() < p; }

    std::vector<double> vec(std::size_t n, double a = -1.0, double b = 1.0) {
        std::vector<double> v(n);
        for (auto& x : v) x = uniform(a, b);
        return v;
    }

    Eigen::MatrixXd matrix(int r, int c, double scale = 1.0) {
        Eigen::MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = normal(0.0, scale);
        return m;
    }

    double price(double lo, double hi) { return std::round(uniform(lo, hi) * 100.0) / 100.0; }

    // Well-formed records on consecutive weekdays, two-decimal prices.
    std::vector<TapeRecord> records(int days, int per_day, double center = 10.0, double width = 3.0,
                                    double unknown = 0.05) {
        std::vector<TapeRecord> out;
        Date d{2009, 1, 5};
        for (int t = 0; t < days; ++t) {
            while (d.weekday() == 0 || d.weekday() == 6) d = Date::from_serial(d.serial() + 1);
            const int n = integer(std::max(1, per_day / 2), per_day);
            for (int i = 0; i < n; ++i) {
                const Side s = coin(unknown) ? Side::Unknown : (coin() ? Side::Buy : Side::Sell);
                out.push_back({d, std::max(0.01, price(center - width, center + width)), s, integer(1, 2000)});
            }
            d = Date::from_serial(d.serial() + 1);
        }
        return out;
    }
};

// ---- statistics ---------------------------------------------------------

inline double two_pass_mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double two_pass_var(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    const double m = two_pass_mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

// Welford single pass, the second opinion for summary statistics.
struct Welford {
    std::size_t n = 0;
    double m = 0.0, m2 = 0.0;
    void add(double x) {
        ++n;
        const double d = x - m;
        m += d / static_cast<double>(n);
        m2 += d * (x - m);
    }
    double var() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

inline double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

// ---- transforms -----------------------------------------------------------

inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x, int sign) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t w = 0; w < n; ++w) {
        std::complex<double> acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>((w * k) % n) / static_cast<double>(n);
            acc += x[k] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[w] = acc;
    }
    return out;
}

inline Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& m, int terms = 30) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m.rows(), m.cols());
    Eigen::MatrixXd term = out;
    for (int k = 1; k < terms; ++k) {
        term = term * m / static_cast<double>(k);
        out += term;
    }
    return out;
}

// ---- panels -----------------------------------------------------------------

inline std::map<Date, double> direct_vwap(const std::vector<TapeRecord>& recs) {
    std::map<Date, std::pair<double, double>> acc;
    for (const auto& r : recs) {
        acc[r.date].first += r.price * static_cast<double>(r.volume);
        acc[r.date].second += static_cast<double>(r.volume);
    }
    std::map<Date, double> out;
    for (const auto& [d, pv] : acc) out[d] = pv.first / pv.second;
    return out;
}

// ---- nets --------------------------------------------------------------------

inline double act(dualstate::nn::Activation a, double x) {
    using dualstate::nn::Activation;
    if (a == Activation::ReLU) return std::max(0.0, x);
    if (a == Activation::Tanh) return std::tanh(x);
    if (a == Activation::Logit) return 1.0 / (1.0 + std::exp(-x));
    return x;
}

// Tensor-of-vectors forward pass over the documented parameter layout:
// per trainable layer, weights then biases; dense weights [out][in],
// conv weights [filter][channel][row][col].
inline double oracle_forward(const dualstate::nn::TrainedNet& net, const std::vector<double>& input) {
    using namespace dualstate::nn;
    using Tensor = std::vector<std::vector<std::vector<double>>>;  // [c][h][w]
    const auto& spec = net.spec;
    Tensor cur(static_cast<std::size_t>(spec.input.c),
               std::vector<std::vector<double>>(static_cast<std::size_t>(spec.input.h),
                                                std::vector<double>(static_cast<std::size_t>(spec.input.w))));
    std::size_t idx = 0;
    for (auto& ch : cur)
        for (auto& row : ch)
            for (auto& v : row) v = input[idx++];

    std::size_t last = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (std::holds_alternative<Dense>(spec.layers[i]) || std::holds_alternative<Conv2D>(spec.layers[i])) last = i;

    std::size_t off = 0;
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const auto& layer = spec.layers[li];
        const bool activate = li < last;
        const std::size_t C = cur.size(), H = cur[0].size(), W = cur[0][0].size();
        if (const auto* d = std::get_if<Dense>(&layer)) {
            std::vector<double> flat;
            for (auto& ch : cur)
                for (auto& row : ch) flat.insert(flat.end(), row.begin(), row.end());
            std::vector<double> out(static_cast<std::size_t>(d->out));
            for (int o = 0; o < d->out; ++o) {
                double acc = 0.0;
                for (int k = 0; k < d->in; ++k) acc += net.params[off + static_cast<std::size_t>(o * d->in + k)] * flat[static_cast<std::size_t>(k)];
                out[static_cast<std::size_t>(o)] = acc;
            }
            off += static_cast<std::size_t>(d->in * d->out);
            for (int o = 0; o < d->out; ++o) {
                out[static_cast<std::size_t>(o)] += net.params[off + static_cast<std::size_t>(o)];
                if (activate) out[static_cast<std::size_t>(o)] = act(spec.activation, out[static_cast<std::size_t>(o)]);
            }
            off += static_cast<std::size_t>(d->out);
            cur = Tensor{{out}};
        } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
            const std::size_t OH = H - static_cast<std::size_t>(c->kh) + 1, OW = W - static_cast<std::size_t>(c->kw) + 1;
            Tensor out(static_cast<std::size_t>(c->channels), std::vector<std::vector<double>>(OH, std::vector<double>(OW)));
            const std::size_t bias_off = off + static_cast<std::size_t>(c->channels) * C * static_cast<std::size_t>(c->kh * c->kw);
            for (std::size_t f = 0; f < out.size(); ++f)
                for (std::size_t r = 0; r < OH; ++r)
                    for (std::size_t q = 0; q < OW; ++q) {
                        double acc = net.params[bias_off + f];
                        for (std::size_t ch = 0; ch < C; ++ch)
                            for (std::size_t u = 0; u < static_cast<std::size_t>(c->kh); ++u)
                                for (std::size_t v = 0; v < static_cast<std::size_t>(c->kw); ++v)
                                    acc += net.params[off + ((f * C + ch) * static_cast<std::size_t>(c->kh) + u) * static_cast<std::size_t>(c->kw) + v] *
                                           cur[ch][r + u][q + v];
                        out[f][r][q] = activate ? act(spec.activation, acc) : acc;
                    }
            off = bias_off + static_cast<std::size_t>(c->channels);
            cur = std::move(out);
        } else if (const auto* p = std::get_if<Pool>(&layer)) {
            const std::size_t OH = H / static_cast<std::size_t>(p->ph), OW = W / static_cast<std::size_t>(p->pw);
            Tensor out(C, std::vector<std::vector<double>>(OH, std::vector<double>(OW)));
            for (std::size_t ch = 0; ch < C; ++ch)
                for (std::size_t r = 0; r < OH; ++r)
                    for (std::size_t q = 0; q < OW; ++q) {
                        std::vector<double> cell;
                        for (int u = 0; u < p->ph; ++u)
                            for (int v = 0; v < p->pw; ++v) cell.push_back(cur[ch][r * static_cast<std::size_t>(p->ph) + static_cast<std::size_t>(u)][q * static_cast<std::size_t>(p->pw) + static_cast<std::size_t>(v)]);
                        out[ch][r][q] = p->kind == PoolKind::Max ? *std::max_element(cell.begin(), cell.end())
                                                                 : two_pass_mean(cell);
                    }
            cur = std::move(out);
        } else {
            std::vector<double> flat;
            for (auto& ch : cur)
                for (auto& row : ch) flat.insert(flat.end(), row.begin(), row.end());
            cur = Tensor{{flat}};
        }
    }
    return cur[0][0][0];
}

}  // namespace testsupport
