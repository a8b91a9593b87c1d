#include <doctest.h>

#include <cmath>

#include "dualstate/neural_kit.hpp"
#include "support.hpp"

using namespace dualstate;
using namespace dualstate::nn;
using testsupport::Gen;

namespace {

std::vector<double> random_input(const NetSpec& s, Gen& g) { return g.vec(static_cast<std::size_t>(s.input.size()), -1.0, 1.0); }

NetSpec linear(int n_in) {
    NetSpec s;
    s.input = {1, 1, n_in};
    s.layers = {Dense{n_in, 1}};
    s.activation = Activation::Identity;
    return s;
}

}  // namespace

TEST_CASE("init is deterministic and shaped") {
    const auto a = init_net(ten_layer_net(16, Activation::Tanh, 9));
    const auto b = init_net(ten_layer_net(16, Activation::Tanh, 9));
    CHECK(a.params == b.params);
    CHECK(init_net(ten_layer_net(16, Activation::Tanh, 10)).params != a.params);
    CHECK(param_count(linear(16)) == 17);
    CHECK(layer_shapes(cnn7()).back() == Shape{1, 1, 1});
}

TEST_CASE("shape mismatch names the layer pair") {
    NetSpec s;
    s.input = {1, 1, 16};
    s.layers = {Dense{16, 8}, Dense{4, 1}};
    CHECK_THROWS_WITH_AS(init_net(s), doctest::Contains("layer 2"), Error);
    NetSpec small = cnn7(4, 4);
    CHECK_THROWS_WITH_AS(init_net(small), doctest::Contains("receptive field"), Error);
    NetSpec vec_out;
    vec_out.input = {1, 1, 3};
    vec_out.layers = {Dense{3, 2}};
    CHECK_THROWS_AS(init_net(vec_out), Error);
}

TEST_CASE("zero rounds are rejected") {
    auto net = init_net(linear(2));
    Dataset d{{{1.0, 2.0}}, {1.0}};
    CHECK_THROWS_AS(train(net, d, 0, 0.1), Error);
}

TEST_CASE("zero weights predict the bias") {
    auto net = init_net(shallow_net(4, 8));
    std::fill(net.params.begin(), net.params.end(), 0.0);
    net.params.back() = 0.75;
    CHECK(predict(net, std::vector<double>{1, 2, 3, 4}) == 0.75);
}

TEST_CASE("identity dense layer passes input through") {
    NetSpec s = linear(1);
    auto net = init_net(s);
    net.params = {1.0, 0.0};
    CHECK(predict(net, std::vector<double>{-3.25}) == -3.25);
    CHECK_THROWS_AS(predict(net, std::vector<double>{1.0, 2.0}), Error);
}

TEST_CASE("forward pass matches the tensor oracle") {
    Gen g(81);
    std::vector<NetSpec> specs{shallow_net(4, 8, Activation::Tanh, 3), ten_layer_net(16, Activation::ReLU, 4),
                               ten_layer_net(16, Activation::Logit, 5), cnn7(21, 16, Activation::Tanh, 6),
                               cnn7(21, 16, Activation::ReLU, 7, 16, PoolKind::Max), cnn7(12, 10, Activation::Logit, 8)};
    for (const auto& s : specs) {
        const auto net = init_net(s);
        for (int rep = 0; rep < 3; ++rep) {
            const auto x = random_input(s, g);
            CHECK(predict(net, x) == doctest::Approx(testsupport::oracle_forward(net, x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("tanh gradients match finite differences") {
    Gen g(82);
    for (const auto& s : {shallow_net(4, 8, Activation::Tanh, 11), ten_layer_net(16, Activation::Tanh, 12),
                          cnn7(21, 16, Activation::Tanh, 13)}) {
        const auto net = init_net(s);
        const auto gc = grad_check(net, random_input(s, g), g.normal());
        CHECK(gc.max_rel_error < 1e-4);
        CHECK(gc.skipped == 0);
    }
}

TEST_CASE("relu gradients match away from kinks") {
    Gen g(83);
    for (const auto& s : {ten_layer_net(16, Activation::ReLU, 21), cnn7(21, 16, Activation::ReLU, 22, 16, PoolKind::Max)}) {
        const auto net = init_net(s);
        const auto gc = grad_check(net, random_input(s, g), g.normal());
        CHECK(gc.compared > 0);
        CHECK(gc.max_rel_error < 1e-4);
    }
}

TEST_CASE("zero net gradient lives on the output bias") {
    auto net = init_net(shallow_net(4, 8));
    std::fill(net.params.begin(), net.params.end(), 0.0);
    const std::vector<double> x(4, 0.0);
    const auto grad = loss_gradient(net, x, 1.5);
    for (std::size_t k = 0; k + 1 < grad.size(); ++k) CHECK(grad[k] == 0.0);
    CHECK(grad.back() == doctest::Approx(-3.0));
    const auto gc = grad_check(net, x, 1.5);
    CHECK(gc.max_rel_error < 1e-6);
}

TEST_CASE("training descends and recovers a planted linear map") {
    Gen g(84);
    const std::vector<double> w{0.5, -1.25, 2.0, 0.75};
    const double bias = 0.3;
    Dataset d;
    Eigen::MatrixXd A(60, 5);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) {
        auto x = g.vec(4, -1, 1);
        double t = bias;
        for (int k = 0; k < 4; ++k) {
            t += w[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(k)];
            A(i, k) = x[static_cast<std::size_t>(k)];
        }
        t += g.normal(0.0, 1e-4);
        A(i, 4) = 1.0;
        y(i) = t;
        d.inputs.push_back(x);
        d.targets.push_back(t);
    }
    const Eigen::VectorXd ls = A.colPivHouseholderQr().solve(y);
    const auto net = train(init_net(linear(4)), d, 500, 0.5);
    REQUIRE(net.loss_curve.size() == 500);
    CHECK(net.loss_curve.back() < net.loss_curve.front());
    for (int k = 0; k < 4; ++k) {
        CHECK(std::abs(net.params[static_cast<std::size_t>(k)] - w[static_cast<std::size_t>(k)]) < 1e-3);
        CHECK(std::abs(net.params[static_cast<std::size_t>(k)] - ls(k)) < 1e-8);
    }
    CHECK(std::abs(net.params[4] - ls(4)) < 1e-8);
}

TEST_CASE("deep net training reduces loss and is deterministic") {
    Gen g(85);
    Dataset d;
    for (int i = 0; i < 30; ++i) {
        auto x = g.vec(16);
        d.targets.push_back(std::sin(x[0]) + x[1] * x[2]);
        d.inputs.push_back(std::move(x));
    }
    const auto a = train(init_net(ten_layer_net(16, Activation::Tanh, 3)), d, 200, 0.02);
    const auto b = train(init_net(ten_layer_net(16, Activation::Tanh, 3)), d, 200, 0.02);
    CHECK(a.params == b.params);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(a.loss_curve.back() < a.loss_curve.front());
}

TEST_CASE("non-finite loss reports the round") {
    Dataset d{{{1e200, 1e200}}, {1.0}};
    CHECK_THROWS_WITH_AS(train(init_net(linear(2)), d, 5, 1.0), doctest::Contains("round 1"), Error);
}

TEST_CASE("property: linear net predictions scale with targets") {
    Gen g(86);
    for (int rep = 0; rep < 5; ++rep) {
        Dataset d;
        for (int i = 0; i < 20; ++i) {
            d.inputs.push_back(g.vec(3));
            d.targets.push_back(g.normal());
        }
        const double c = g.uniform(0.5, 5.0);
        auto base = init_net(linear(3));
        auto scaled = base;
        for (double& p : scaled.params) p *= c;
        Dataset dc = d;
        for (double& t : dc.targets) t *= c;
        const auto a = train(base, d, 50, 0.1);
        const auto b = train(scaled, dc, 50, 0.1);
        const auto probe = g.vec(3);
        CHECK(predict(b, probe) == doctest::Approx(c * predict(a, probe)).epsilon(1e-10));
    }
}

TEST_CASE("json round trip") {
    const auto net = init_net(cnn7(21, 16, Activation::ReLU, 5, 12, PoolKind::Max));
    const auto back = from_json(to_json(net));
    CHECK(back.params == net.params);
    CHECK(back.spec.activation == Activation::ReLU);
    CHECK(param_count(back.spec) == param_count(net.spec));
    CHECK(parse_activation("tanh") == Activation::Tanh);
    CHECK_THROWS_AS(parse_activation("swish"), Error);
}
