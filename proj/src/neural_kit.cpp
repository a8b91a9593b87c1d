#include "dualstate/neural_kit.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "dualstate/common.hpp"

namespace dualstate::nn {

namespace {

struct Step {
    Layer layer;
    Shape in, out;
    std::size_t w_off = 0, n_w = 0, b_off = 0, n_b = 0;
    bool has_params = false;
    bool activate = false;
};

struct Topology {
    std::vector<Step> steps;
    std::size_t n_params = 0;
};

std::string describe(const Layer& l) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Dense>) return "Dense(" + std::to_string(v.in) + "," + std::to_string(v.out) + ")";
            else if constexpr (std::is_same_v<T, Conv2D>)
                return "Conv2D(" + std::to_string(v.kh) + "x" + std::to_string(v.kw) + "x" + std::to_string(v.channels) + ")";
            else if constexpr (std::is_same_v<T, Pool>) return "Pool(" + std::to_string(v.ph) + "x" + std::to_string(v.pw) + ")";
            else return "Flatten";
        },
        l);
}

Topology build(const NetSpec& spec) {
    if (spec.layers.empty()) throw_usage("net spec has no layers");
    if (spec.input.size() <= 0) throw_usage("net input shape is empty");
    Topology topo;
    Shape cur = spec.input;
    int last_param = -1;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        Step s;
        s.layer = spec.layers[i];
        s.in = cur;
        const std::string where = "layer " + std::to_string(i + 1) + " " + describe(s.layer);
        const std::string prev = i == 0 ? "the input" : "layer " + std::to_string(i) + " " + describe(spec.layers[i - 1]);
        if (const auto* d = std::get_if<Dense>(&s.layer)) {
            if (cur.c != 1 || cur.h != 1) throw_usage(where + " needs a flat input; insert Flatten after " + prev);
            if (d->in != cur.w)
                throw_usage(where + " expects " + std::to_string(d->in) + " inputs but " + prev + " produces " +
                            std::to_string(cur.w));
            if (d->out < 1) throw_usage(where + " has no outputs");
            s.out = {1, 1, d->out};
            s.n_w = static_cast<std::size_t>(d->in) * static_cast<std::size_t>(d->out);
            s.n_b = static_cast<std::size_t>(d->out);
            s.has_params = true;
        } else if (const auto* c = std::get_if<Conv2D>(&s.layer)) {
            if (c->kh < 1 || c->kw < 1 || c->channels < 1) throw_usage(where + " has an empty kernel");
            s.out = {c->channels, cur.h - c->kh + 1, cur.w - c->kw + 1};
            if (s.out.h < 1 || s.out.w < 1) throw_usage(where + ": input smaller than the receptive field");
            s.n_w = static_cast<std::size_t>(c->channels * cur.c * c->kh * c->kw);
            s.n_b = static_cast<std::size_t>(c->channels);
            s.has_params = true;
        } else if (const auto* p = std::get_if<Pool>(&s.layer)) {
            if (p->ph < 1 || p->pw < 1) throw_usage(where + " has an empty window");
            s.out = {cur.c, cur.h / p->ph, cur.w / p->pw};
            if (s.out.h < 1 || s.out.w < 1) throw_usage(where + ": input smaller than the receptive field");
        } else {
            s.out = {1, 1, cur.size()};
        }
        if (s.has_params) {
            s.w_off = topo.n_params;
            s.b_off = s.w_off + s.n_w;
            topo.n_params = s.b_off + s.n_b;
            last_param = static_cast<int>(i);
        }
        cur = s.out;
        topo.steps.push_back(s);
    }
    if (last_param < 0) throw_usage("net has no trainable layer");
    for (int i = 0; i < last_param; ++i) topo.steps[static_cast<std::size_t>(i)].activate = topo.steps[static_cast<std::size_t>(i)].has_params;
    if (cur.size() != 1) throw_usage("net output must be a scalar, got " + std::to_string(cur.size()));
    return topo;
}

double act_f(Activation a, double x) {
    switch (a) {
        case Activation::ReLU: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Logit: return 1.0 / (1.0 + std::exp(-x));
        default: return x;
    }
}

// Derivative expressed through the activated value y.
double act_d(Activation a, double y) {
    switch (a) {
        case Activation::ReLU: return y > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: return 1.0 - y * y;
        case Activation::Logit: return y * (1.0 - y);
        default: return 1.0;
    }
}

struct Workspace {
    std::vector<std::vector<double>> outs;  // activated output of each step
    std::vector<std::vector<int>> argmax;   // max-pool winners
    std::vector<double> g, g_in;
};

void forward(const Topology& topo, const NetSpec& spec, const std::vector<double>& w, std::span<const double> x,
             Workspace& ws) {
    if (static_cast<int>(x.size()) != spec.input.size())
        throw_usage("input has " + std::to_string(x.size()) + " values, net expects " + std::to_string(spec.input.size()));
    ws.outs.resize(topo.steps.size());
    ws.argmax.resize(topo.steps.size());
    for (std::size_t i = 0; i < topo.steps.size(); ++i) {
        const Step& s = topo.steps[i];
        const double* in = i == 0 ? x.data() : ws.outs[i - 1].data();
        auto& out = ws.outs[i];
        out.assign(static_cast<std::size_t>(s.out.size()), 0.0);
        if (const auto* d = std::get_if<Dense>(&s.layer)) {
            const double* W = w.data() + s.w_off;
            const double* b = w.data() + s.b_off;
            for (int o = 0; o < d->out; ++o) {
                double acc = b[o];
                const double* row = W + static_cast<std::size_t>(o) * static_cast<std::size_t>(d->in);
                for (int k = 0; k < d->in; ++k) acc += row[k] * in[k];
                out[static_cast<std::size_t>(o)] = acc;
            }
        } else if (const auto* c = std::get_if<Conv2D>(&s.layer)) {
            const double* W = w.data() + s.w_off;
            const double* b = w.data() + s.b_off;
            const int C = s.in.c, H = s.in.h, Wd = s.in.w, OH = s.out.h, OW = s.out.w;
            for (int k = 0; k < c->channels; ++k) {
                double* o = out.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(OH * OW);
                for (int p = 0; p < OH * OW; ++p) o[p] = b[k];
                for (int ch = 0; ch < C; ++ch) {
                    const double* src = in + static_cast<std::size_t>(ch) * static_cast<std::size_t>(H * Wd);
                    for (int u = 0; u < c->kh; ++u) {
                        for (int v = 0; v < c->kw; ++v) {
                            const double wt = W[((k * C + ch) * c->kh + u) * c->kw + v];
                            for (int r = 0; r < OH; ++r) {
                                const double* srow = src + (r + u) * Wd + v;
                                double* orow = o + r * OW;
                                for (int q = 0; q < OW; ++q) orow[q] += wt * srow[q];
                            }
                        }
                    }
                }
            }
        } else if (const auto* p = std::get_if<Pool>(&s.layer)) {
            const int H = s.in.h, Wd = s.in.w, OH = s.out.h, OW = s.out.w;
            auto& am = ws.argmax[i];
            if (p->kind == PoolKind::Max) am.assign(static_cast<std::size_t>(s.out.size()), 0);
            const double inv = 1.0 / (p->ph * p->pw);
            for (int ch = 0; ch < s.in.c; ++ch) {
                for (int r = 0; r < OH; ++r) {
                    for (int q = 0; q < OW; ++q) {
                        const std::size_t oi = static_cast<std::size_t>((ch * OH + r) * OW + q);
                        double best = -INFINITY, sum = 0.0;
                        int arg = -1;
                        for (int u = 0; u < p->ph; ++u) {
                            for (int v = 0; v < p->pw; ++v) {
                                const int ii = (ch * H + r * p->ph + u) * Wd + q * p->pw + v;
                                const double val = in[ii];
                                sum += val;
                                if (val > best) {
                                    best = val;
                                    arg = ii;
                                }
                            }
                        }
                        if (p->kind == PoolKind::Max) {
                            out[oi] = best;
                            am[oi] = arg;
                        } else {
                            out[oi] = sum * inv;
                        }
                    }
                }
            }
        } else {
            std::copy(in, in + s.in.size(), out.begin());
        }
        if (s.activate)
            for (double& v : out) v = act_f(spec.activation, v);
    }
}

// Accumulates scale * d(output)/d(params) into grad.
void backward(const Topology& topo, const NetSpec& spec, const std::vector<double>& w, std::span<const double> x,
              Workspace& ws, double scale, std::vector<double>& grad) {
    ws.g.assign(1, scale);
    for (std::size_t ii = topo.steps.size(); ii-- > 0;) {
        const Step& s = topo.steps[ii];
        const double* in = ii == 0 ? x.data() : ws.outs[ii - 1].data();
        auto& g = ws.g;
        if (s.activate) {
            const auto& out = ws.outs[ii];
            for (std::size_t k = 0; k < g.size(); ++k) g[k] *= act_d(spec.activation, out[k]);
        }
        const bool need_in = ii > 0;
        auto& gi = ws.g_in;
        if (need_in) gi.assign(static_cast<std::size_t>(s.in.size()), 0.0);
        if (const auto* d = std::get_if<Dense>(&s.layer)) {
            const double* W = w.data() + s.w_off;
            double* gW = grad.data() + s.w_off;
            double* gb = grad.data() + s.b_off;
            for (int o = 0; o < d->out; ++o) {
                const double go = g[static_cast<std::size_t>(o)];
                gb[o] += go;
                const std::size_t base = static_cast<std::size_t>(o) * static_cast<std::size_t>(d->in);
                for (int k = 0; k < d->in; ++k) {
                    gW[base + static_cast<std::size_t>(k)] += go * in[k];
                    if (need_in) gi[static_cast<std::size_t>(k)] += W[base + static_cast<std::size_t>(k)] * go;
                }
            }
        } else if (const auto* c = std::get_if<Conv2D>(&s.layer)) {
            const double* W = w.data() + s.w_off;
            double* gW = grad.data() + s.w_off;
            double* gb = grad.data() + s.b_off;
            const int C = s.in.c, H = s.in.h, Wd = s.in.w, OH = s.out.h, OW = s.out.w;
            for (int k = 0; k < c->channels; ++k) {
                const double* go = g.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(OH * OW);
                double bsum = 0.0;
                for (int p = 0; p < OH * OW; ++p) bsum += go[p];
                gb[k] += bsum;
                for (int ch = 0; ch < C; ++ch) {
                    const double* src = in + static_cast<std::size_t>(ch) * static_cast<std::size_t>(H * Wd);
                    double* gsrc = need_in ? gi.data() + static_cast<std::size_t>(ch) * static_cast<std::size_t>(H * Wd) : nullptr;
                    for (int u = 0; u < c->kh; ++u) {
                        for (int v = 0; v < c->kw; ++v) {
                            const int widx = ((k * C + ch) * c->kh + u) * c->kw + v;
                            double acc = 0.0;
                            const double wt = W[widx];
                            for (int r = 0; r < OH; ++r) {
                                const double* srow = src + (r + u) * Wd + v;
                                const double* grow = go + r * OW;
                                for (int q = 0; q < OW; ++q) acc += grow[q] * srow[q];
                                if (gsrc) {
                                    double* gr = gsrc + (r + u) * Wd + v;
                                    for (int q = 0; q < OW; ++q) gr[q] += wt * grow[q];
                                }
                            }
                            gW[widx] += acc;
                        }
                    }
                }
            }
        } else if (const auto* p = std::get_if<Pool>(&s.layer)) {
            if (need_in) {
                const int H = s.in.h, Wd = s.in.w, OH = s.out.h, OW = s.out.w;
                const double inv = 1.0 / (p->ph * p->pw);
                for (int ch = 0; ch < s.in.c; ++ch)
                    for (int r = 0; r < OH; ++r)
                        for (int q = 0; q < OW; ++q) {
                            const std::size_t oi = static_cast<std::size_t>((ch * OH + r) * OW + q);
                            if (p->kind == PoolKind::Max) {
                                gi[static_cast<std::size_t>(ws.argmax[ii][oi])] += g[oi];
                            } else {
                                for (int u = 0; u < p->ph; ++u)
                                    for (int v = 0; v < p->pw; ++v)
                                        gi[static_cast<std::size_t>((ch * H + r * p->ph + u) * Wd + q * p->pw + v)] += g[oi] * inv;
                            }
                        }
            }
        } else if (need_in) {
            gi = g;
        }
        if (need_in) std::swap(ws.g, ws.g_in);
    }
}

std::vector<std::uint8_t> pattern(const Topology& topo, const NetSpec& spec, const Workspace& ws) {
    std::vector<std::uint8_t> p;
    for (std::size_t i = 0; i < topo.steps.size(); ++i) {
        if (topo.steps[i].activate && spec.activation == Activation::ReLU)
            for (double v : ws.outs[i]) p.push_back(v > 0.0);
        for (int a : ws.argmax[i]) {
            p.push_back(static_cast<std::uint8_t>(a & 0xff));
            p.push_back(static_cast<std::uint8_t>((a >> 8) & 0xff));
        }
    }
    return p;
}

}  // namespace

std::vector<Shape> layer_shapes(const NetSpec& spec) {
    const auto topo = build(spec);
    std::vector<Shape> out;
    for (const auto& s : topo.steps) out.push_back(s.out);
    return out;
}

std::size_t param_count(const NetSpec& spec) { return build(spec).n_params; }

TrainedNet init_net(const NetSpec& spec) {
    const auto topo = build(spec);
    TrainedNet net;
    net.spec = spec;
    net.params.assign(topo.n_params, 0.0);
    std::mt19937_64 rng(spec.seed);
    const double gain = spec.activation == Activation::ReLU ? 6.0 : 3.0;
    for (const auto& s : topo.steps) {
        if (!s.has_params) continue;
        int fan_in = 0;
        if (const auto* d = std::get_if<Dense>(&s.layer)) fan_in = d->in;
        else if (const auto* c = std::get_if<Conv2D>(&s.layer)) fan_in = s.in.c * c->kh * c->kw;
        const double lim = std::sqrt(gain / fan_in);
        std::uniform_real_distribution<double> U(-lim, lim);
        for (std::size_t k = 0; k < s.n_w; ++k) net.params[s.w_off + k] = U(rng);
    }
    return net;
}

double predict(const TrainedNet& net, std::span<const double> input) {
    const auto topo = build(net.spec);
    if (net.params.size() != topo.n_params) throw_usage("parameter count does not match the net spec");
    Workspace ws;
    forward(topo, net.spec, net.params, input, ws);
    return ws.outs.back()[0];
}

std::vector<double> loss_gradient(const TrainedNet& net, std::span<const double> input, double target) {
    const auto topo = build(net.spec);
    Workspace ws;
    forward(topo, net.spec, net.params, input, ws);
    std::vector<double> grad(topo.n_params, 0.0);
    backward(topo, net.spec, net.params, input, ws, 2.0 * (ws.outs.back()[0] - target), grad);
    return grad;
}

TrainedNet train(TrainedNet net, const Dataset& data, int rounds, double learning_rate) {
    if (rounds < 1) throw_usage("training needs at least one round");
    if (data.inputs.size() != data.targets.size() || data.inputs.empty())
        throw_usage("training inputs and targets must be non-empty and aligned");
    const auto topo = build(net.spec);
    if (net.params.size() != topo.n_params) throw_usage("parameter count does not match the net spec");
    const double n = static_cast<double>(data.inputs.size());
    Workspace ws;
    std::vector<double> grad(topo.n_params);
    net.loss_curve.clear();
    net.loss_curve.reserve(static_cast<std::size_t>(rounds));
    for (int r = 0; r < rounds; ++r) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < data.inputs.size(); ++i) {
            forward(topo, net.spec, net.params, data.inputs[i], ws);
            const double err = ws.outs.back()[0] - data.targets[i];
            loss += err * err;
            backward(topo, net.spec, net.params, data.inputs[i], ws, 2.0 * err / n, grad);
        }
        loss /= n;
        if (!std::isfinite(loss)) throw_numeric("non-finite loss at round " + std::to_string(r + 1));
        net.loss_curve.push_back(loss);
        for (std::size_t k = 0; k < grad.size(); ++k) net.params[k] -= learning_rate * grad[k];
    }
    return net;
}

GradCheck grad_check(const TrainedNet& net, std::span<const double> input, double target, double epsilon) {
    if (!(epsilon > 0.0)) throw_usage("grad_check needs epsilon > 0");
    const auto topo = build(net.spec);
    const auto analytic = loss_gradient(net, input, target);
    Workspace ws;
    forward(topo, net.spec, net.params, input, ws);
    const auto base = pattern(topo, net.spec, ws);

    GradCheck gc;
    std::vector<double> w = net.params;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double keep = w[k];
        w[k] = keep + epsilon;
        forward(topo, net.spec, w, input, ws);
        const double lp = std::pow(ws.outs.back()[0] - target, 2);
        const auto pp = pattern(topo, net.spec, ws);
        w[k] = keep - epsilon;
        forward(topo, net.spec, w, input, ws);
        const double lm = std::pow(ws.outs.back()[0] - target, 2);
        const auto pm = pattern(topo, net.spec, ws);
        w[k] = keep;
        if (pp != base || pm != base) {
            ++gc.skipped;
            continue;
        }
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double den = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-7});
        gc.max_rel_error = std::max(gc.max_rel_error, std::abs(analytic[k] - numeric) / den);
        ++gc.compared;
    }
    return gc;
}

NetSpec shallow_net(int n_in, int hidden, Activation act, std::uint64_t seed) {
    NetSpec s;
    s.input = {1, 1, n_in};
    s.layers = {Dense{n_in, hidden}, Dense{hidden, 1}};
    s.activation = act;
    s.seed = seed;
    return s;
}

NetSpec ten_layer_net(int n_in, Activation act, std::uint64_t seed) {
    NetSpec s;
    s.input = {1, 1, n_in};
    const int widths[] = {n_in, 32, 32, 24, 24, 16, 16, 8, 8, 4, 1};
    for (int i = 0; i < 10; ++i) s.layers.push_back(Dense{widths[i], widths[i + 1]});
    s.activation = act;
    s.seed = seed;
    return s;
}

NetSpec cnn7(int h, int w, Activation act, std::uint64_t seed, int hidden, PoolKind pool) {
    NetSpec s;
    s.input = {1, h, w};
    s.activation = act;
    s.seed = seed;
    s.layers = {Conv2D{3, 3, 8}, Pool{2, 2, pool}, Conv2D{3, 3, 16}, Pool{2, 2, pool}, Flatten{}};
    // Flatten width depends on the input; shapes are validated by build().
    const int h1 = (h - 2) / 2, w1 = (w - 2) / 2;
    const int flat = 16 * std::max(0, (h1 - 2) / 2) * std::max(0, (w1 - 2) / 2);
    s.layers.push_back(Dense{flat, hidden});
    s.layers.push_back(Dense{hidden, 1});
    return s;
}

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Logit: return "logit";
        default: return "identity";
    }
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "tanh") return Activation::Tanh;
    if (s == "logit") return Activation::Logit;
    if (s == "identity") return Activation::Identity;
    throw_usage("unknown activation '" + s + "'");
}

std::string to_json(const TrainedNet& net) {
    nlohmann::json j;
    j["input"] = {net.spec.input.c, net.spec.input.h, net.spec.input.w};
    j["activation"] = activation_name(net.spec.activation);
    j["seed"] = net.spec.seed;
    auto& layers = j["layers"] = nlohmann::json::array();
    for (const auto& l : net.spec.layers) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Dense>) layers.push_back({{"type", "dense"}, {"in", v.in}, {"out", v.out}});
                else if constexpr (std::is_same_v<T, Conv2D>)
                    layers.push_back({{"type", "conv2d"}, {"kh", v.kh}, {"kw", v.kw}, {"channels", v.channels}});
                else if constexpr (std::is_same_v<T, Pool>)
                    layers.push_back({{"type", "pool"}, {"ph", v.ph}, {"pw", v.pw}, {"kind", v.kind == PoolKind::Max ? "max" : "average"}});
                else layers.push_back({{"type", "flatten"}});
            },
            l);
    }
    j["params"] = net.params;
    j["loss_curve"] = net.loss_curve;
    return j.dump();
}

TrainedNet from_json(const std::string& text) {
    TrainedNet net;
    try {
        const auto j = nlohmann::json::parse(text);
        const auto in = j.at("input");
        net.spec.input = {in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
        net.spec.activation = parse_activation(j.at("activation").get<std::string>());
        net.spec.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& l : j.at("layers")) {
            const auto type = l.at("type").get<std::string>();
            if (type == "dense") net.spec.layers.push_back(Dense{l.at("in").get<int>(), l.at("out").get<int>()});
            else if (type == "conv2d")
                net.spec.layers.push_back(Conv2D{l.at("kh").get<int>(), l.at("kw").get<int>(), l.at("channels").get<int>()});
            else if (type == "pool")
                net.spec.layers.push_back(Pool{l.at("ph").get<int>(), l.at("pw").get<int>(),
                                               l.at("kind").get<std::string>() == "max" ? PoolKind::Max : PoolKind::Average});
            else if (type == "flatten") net.spec.layers.push_back(Flatten{});
            else throw_data("unknown layer type '" + type + "'");
        }
        net.params = j.at("params").get<std::vector<double>>();
        net.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw_data(std::string("bad net json: ") + e.what());
    }
    if (net.params.size() != param_count(net.spec)) throw_data("net json parameter count mismatch");
    return net;
}

}  // namespace dualstate::nn
