#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rrl {

enum class OutputKind { linear, tanh_scaled };

// Dense ReLU network, value-like. Weights are row-major [out * in_dim + in].
// A tanh_scaled output maps the last pre-activation to [out_low, out_high].
struct MlpNet {
  std::vector<int> sizes;
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;
  OutputKind output = OutputKind::linear;
  double out_low = -1.0;
  double out_high = 1.0;

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
  std::size_t param_count() const;
};

// Seeded uniform fan-in initialization over the given layer widths.
MlpNet make_mlp(const std::vector<int>& sizes, std::uint64_t seed,
                OutputKind output = OutputKind::linear, double out_low = -1.0,
                double out_high = 1.0);

struct ForwardCache {
  std::vector<std::vector<double>> act;  // act[0] is the input, act[L] the output
  std::vector<std::vector<double>> pre;  // pre-activations per layer
};

std::vector<double> forward(const MlpNet& net, std::span<const double> input,
                            ForwardCache* cache = nullptr);

// Gradient arrays shaped exactly like a net's parameters.
struct GradBundle {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;
};

GradBundle zero_grads(const MlpNet& net);
void add_scaled(GradBundle& into, const GradBundle& g, double scale);
void scale_grads(GradBundle& g, double scale);

// Accumulates parameter gradients into grads and returns the input gradient,
// for the supplied d(loss)/d(output).
std::vector<double> backward(const MlpNet& net, const ForwardCache& cache,
                             std::span<const double> out_grad, GradBundle& grads);

struct AdamState {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  long t = 0;
};

AdamState make_adam(const MlpNet& net);

// One Adam step with bias correction. Returns false and leaves the net and
// state untouched when the update would produce a non-finite parameter.
bool adam_step(MlpNet& net, AdamState& state, const GradBundle& grads, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(MlpNet& target, const MlpNet& online, double tau);

struct GradCheckReport {
  bool pass = false;
  double worst_rel_err = 0.0;
  std::string worst_location;
};

// Computes d(loss)/d(parameters) for the squared-error loss against `target`
// and compares with central finite differences, parameter by parameter,
// plus the input gradient the same way. The provider hook substitutes a
// different analytic gradient (used to prove the check catches corruption).
using GradProvider =
    std::function<void(const MlpNet&, std::span<const double> input,
                       std::span<const double> target, GradBundle& grads,
                       std::vector<double>& input_grad)>;

GradCheckReport grad_check(const MlpNet& net, std::span<const double> input,
                           std::span<const double> target, double tolerance,
                           const GradProvider& provider = {});

// Checkpoint text: shape header plus hexfloat parameters; reload is bit-exact.
std::string net_to_text(const MlpNet& net);
MlpNet net_from_text(const std::string& text);
void save_net(const MlpNet& net, const std::string& path);
MlpNet load_net(const std::string& path);

}  // namespace rrl
