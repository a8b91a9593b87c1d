#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dualstate::nn {

enum class Activation { ReLU, Tanh, Logit, Identity };
enum class PoolKind { Max, Average };

struct Dense {
    int in = 0, out = 0;
};
struct Conv2D {
    int kh = 3, kw = 3, channels = 1;  // valid padding, stride 1
};
struct Pool {
    int ph = 2, pw = 2;  // non-overlapping, trailing rows/cols dropped
    PoolKind kind = PoolKind::Average;
};
struct Flatten {};

using Layer = std::variant<Dense, Conv2D, Pool, Flatten>;

struct Shape {
    int c = 1, h = 1, w = 1;
    int size() const { return c * h * w; }
    bool operator==(const Shape&) const = default;
};

// The activation follows every Dense/Conv layer except the last one, whose
// output is linear.
struct NetSpec {
    Shape input;
    std::vector<Layer> layers;
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 1;
};

struct TrainedNet {
    NetSpec spec;
    std::vector<double> params;
    std::vector<double> loss_curve;
};

// Throws ErrorKind::Usage naming the offending layer pair on a shape mismatch.
std::vector<Shape> layer_shapes(const NetSpec& spec);
std::size_t param_count(const NetSpec& spec);

TrainedNet init_net(const NetSpec& spec);

struct Dataset {
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;
};

// Full-batch gradient descent on mean squared error. loss_curve[r] is the loss
// before update r. Throws ErrorKind::Numeric on a non-finite loss.
TrainedNet train(TrainedNet net, const Dataset& data, int rounds, double learning_rate);

double predict(const TrainedNet& net, std::span<const double> input);

// Gradient of (predict - target)^2 with respect to every parameter.
std::vector<double> loss_gradient(const TrainedNet& net, std::span<const double> input, double target);

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t compared = 0;
    std::size_t skipped = 0;  // ReLU kinks or max-pool ties crossed by +-epsilon
};

// Relative error |a - n| / max(|a|, |n|, 1e-7).
GradCheck grad_check(const TrainedNet& net, std::span<const double> input, double target, double epsilon = 1e-5);

NetSpec shallow_net(int n_in = 4, int hidden = 8, Activation act = Activation::Tanh, std::uint64_t seed = 1);
NetSpec ten_layer_net(int n_in = 16, Activation act = Activation::Tanh, std::uint64_t seed = 1);
NetSpec cnn7(int h = 21, int w = 16, Activation act = Activation::Tanh, std::uint64_t seed = 1, int hidden = 16,
             PoolKind pool = PoolKind::Average);

const char* activation_name(Activation a);
Activation parse_activation(const std::string& s);

std::string to_json(const TrainedNet& net);
TrainedNet from_json(const std::string& text);

}  // namespace dualstate::nn
