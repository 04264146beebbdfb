#include "rrl/neural.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rrl {

namespace {

void check_shapes(const MlpNet& net) {
  if (net.sizes.size() < 2) throw std::invalid_argument("net: needs two layers");
  for (int s : net.sizes)
    if (s <= 0) throw std::invalid_argument("net: non-positive layer size");
  if (net.w.size() != net.sizes.size() - 1 || net.b.size() != net.w.size())
    throw std::invalid_argument("net: layer count mismatch");
  for (int l = 0; l < net.layer_count(); ++l) {
    const std::size_t rows = net.sizes[l + 1], cols = net.sizes[l];
    if (net.w[l].size() != rows * cols || net.b[l].size() != rows)
      throw std::invalid_argument("net: parameter shape mismatch");
  }
  if (net.output == OutputKind::tanh_scaled && !(net.out_low < net.out_high))
    throw std::invalid_argument("net: empty output interval");
}

double tanh_scale_mid(const MlpNet& net) { return 0.5 * (net.out_low + net.out_high); }
double tanh_scale_half(const MlpNet& net) { return 0.5 * (net.out_high - net.out_low); }

}  // namespace

std::size_t MlpNet::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
  return n;
}

MlpNet make_mlp(const std::vector<int>& sizes, std::uint64_t seed,
                OutputKind output, double out_low, double out_high) {
  MlpNet net;
  net.sizes = sizes;
  net.output = output;
  net.out_low = out_low;
  net.out_high = out_high;
  if (sizes.size() < 2) throw std::invalid_argument("net: needs two layers");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1], cols = sizes[l];
    if (rows <= 0 || cols <= 0)
      throw std::invalid_argument("net: non-positive layer size");
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    net.w.emplace_back(static_cast<std::size_t>(rows) * cols);
    net.b.emplace_back(rows);
    for (double& x : net.w.back()) x = u(rng);
    for (double& x : net.b.back()) x = u(rng);
  }
  check_shapes(net);
  return net;
}

std::vector<double> forward(const MlpNet& net, std::span<const double> input,
                            ForwardCache* cache) {
  check_shapes(net);
  if (static_cast<int>(input.size()) != net.input_dim())
    throw std::invalid_argument("forward: input length mismatch");
  const int L = net.layer_count();
  std::vector<double> cur(input.begin(), input.end());
  if (cache) {
    cache->act.assign(1, cur);
    cache->pre.clear();
  }
  for (int l = 0; l < L; ++l) {
    const int rows = net.sizes[l + 1], cols = net.sizes[l];
    std::vector<double> z(rows);
    for (int r = 0; r < rows; ++r) {
      double acc = net.b[l][r];
      const double* wr = net.w[l].data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) acc += wr[c] * cur[c];
      z[r] = acc;
    }
    if (cache) cache->pre.push_back(z);
    if (l + 1 < L) {
      for (double& x : z) x = x > 0.0 ? x : 0.0;
    } else if (net.output == OutputKind::tanh_scaled) {
      const double mid = tanh_scale_mid(net), half = tanh_scale_half(net);
      for (double& x : z) x = mid + half * std::tanh(x);
    }
    cur = std::move(z);
    if (cache) cache->act.push_back(cur);
  }
  return cur;
}

GradBundle zero_grads(const MlpNet& net) {
  GradBundle g;
  for (int l = 0; l < net.layer_count(); ++l) {
    g.w.emplace_back(net.w[l].size(), 0.0);
    g.b.emplace_back(net.b[l].size(), 0.0);
  }
  return g;
}

void add_scaled(GradBundle& into, const GradBundle& g, double scale) {
  if (into.w.size() != g.w.size())
    throw std::invalid_argument("grads: layer count mismatch");
  for (std::size_t l = 0; l < g.w.size(); ++l) {
    if (into.w[l].size() != g.w[l].size() || into.b[l].size() != g.b[l].size())
      throw std::invalid_argument("grads: shape mismatch");
    for (std::size_t i = 0; i < g.w[l].size(); ++i) into.w[l][i] += scale * g.w[l][i];
    for (std::size_t i = 0; i < g.b[l].size(); ++i) into.b[l][i] += scale * g.b[l][i];
  }
}

void scale_grads(GradBundle& g, double scale) {
  for (auto& layer : g.w)
    for (double& x : layer) x *= scale;
  for (auto& layer : g.b)
    for (double& x : layer) x *= scale;
}

std::vector<double> backward(const MlpNet& net, const ForwardCache& cache,
                             std::span<const double> out_grad, GradBundle& grads) {
  const int L = net.layer_count();
  if (static_cast<int>(cache.pre.size()) != L ||
      static_cast<int>(cache.act.size()) != L + 1)
    throw std::invalid_argument("backward: cache does not match net");
  if (static_cast<int>(out_grad.size()) != net.output_dim())
    throw std::invalid_argument("backward: output gradient length mismatch");
  if (grads.w.size() != static_cast<std::size_t>(L))
    throw std::invalid_argument("backward: gradient bundle mismatch");

  std::vector<double> dz(out_grad.begin(), out_grad.end());
  if (net.output == OutputKind::tanh_scaled) {
    const double half = tanh_scale_half(net);
    for (int r = 0; r < net.output_dim(); ++r) {
      const double th = std::tanh(cache.pre[L - 1][r]);
      dz[r] *= half * (1.0 - th * th);
    }
  }
  for (int l = L - 1; l >= 0; --l) {
    const int rows = net.sizes[l + 1], cols = net.sizes[l];
    const std::vector<double>& in_act = cache.act[l];
    for (int r = 0; r < rows; ++r) {
      grads.b[l][r] += dz[r];
      double* gw = grads.w[l].data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gw[c] += dz[r] * in_act[c];
    }
    std::vector<double> din(cols, 0.0);
    for (int r = 0; r < rows; ++r) {
      const double* wr = net.w[l].data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) din[c] += wr[c] * dz[r];
    }
    if (l > 0)
      for (int c = 0; c < cols; ++c)
        if (cache.pre[l - 1][c] <= 0.0) din[c] = 0.0;
    dz = std::move(din);
  }
  return dz;
}

AdamState make_adam(const MlpNet& net) {
  AdamState st;
  for (int l = 0; l < net.layer_count(); ++l) {
    st.mw.emplace_back(net.w[l].size(), 0.0);
    st.vw.emplace_back(net.w[l].size(), 0.0);
    st.mb.emplace_back(net.b[l].size(), 0.0);
    st.vb.emplace_back(net.b[l].size(), 0.0);
  }
  return st;
}

bool adam_step(MlpNet& net, AdamState& state, const GradBundle& grads, double lr,
               double beta1, double beta2, double eps) {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: non-positive learning rate");
  if (state.mw.size() != net.w.size() || grads.w.size() != net.w.size())
    throw std::invalid_argument("adam: shape mismatch");
  MlpNet next = net;
  AdamState st = state;
  ++st.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  auto apply = [&](std::vector<double>& p, std::vector<double>& m,
                   std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  };
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    apply(next.w[l], st.mw[l], st.vw[l], grads.w[l]);
    apply(next.b[l], st.mb[l], st.vb[l], grads.b[l]);
  }
  for (std::size_t l = 0; l < next.w.size(); ++l) {
    for (double x : next.w[l])
      if (!std::isfinite(x)) return false;
    for (double x : next.b[l])
      if (!std::isfinite(x)) return false;
  }
  net = std::move(next);
  state = std::move(st);
  return true;
}

void soft_update(MlpNet& target, const MlpNet& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau out of (0,1]");
  if (target.sizes != online.sizes)
    throw std::invalid_argument("soft_update: shape mismatch");
  for (std::size_t l = 0; l < target.w.size(); ++l) {
    for (std::size_t i = 0; i < target.w[l].size(); ++i)
      target.w[l][i] = tau * online.w[l][i] + (1.0 - tau) * target.w[l][i];
    for (std::size_t i = 0; i < target.b[l].size(); ++i)
      target.b[l][i] = tau * online.b[l][i] + (1.0 - tau) * target.b[l][i];
  }
}

namespace {

double squared_error_loss(const MlpNet& net, std::span<const double> input,
                          std::span<const double> target) {
  const std::vector<double> y = forward(net, input);
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - target[i];
    loss += 0.5 * d * d;
  }
  return loss;
}

void analytic_gradient(const MlpNet& net, std::span<const double> input,
                       std::span<const double> target, GradBundle& grads,
                       std::vector<double>& input_grad) {
  ForwardCache cache;
  const std::vector<double> y = forward(net, input, &cache);
  std::vector<double> og(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) og[i] = y[i] - target[i];
  input_grad = backward(net, cache, og, grads);
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1e-4, std::fabs(a) + std::fabs(b));
}

}  // namespace

GradCheckReport grad_check(const MlpNet& net, std::span<const double> input,
                           std::span<const double> target, double tolerance,
                           const GradProvider& provider) {
  if (static_cast<int>(target.size()) != net.output_dim())
    throw std::invalid_argument("grad_check: target length mismatch");
  GradBundle grads = zero_grads(net);
  std::vector<double> input_grad;
  if (provider)
    provider(net, input, target, grads, input_grad);
  else
    analytic_gradient(net, input, target, grads, input_grad);

  const double h = 1e-5;
  GradCheckReport rep;
  rep.worst_rel_err = 0.0;
  auto consider = [&](double analytic, double numeric, const std::string& where) {
    const double e = rel_err(analytic, numeric);
    if (e >= rep.worst_rel_err) {
      rep.worst_rel_err = e;
      rep.worst_location = where;
    }
  };

  MlpNet probe = net;
  char label[64];
  for (int l = 0; l < net.layer_count(); ++l) {
    for (std::size_t i = 0; i < net.w[l].size(); ++i) {
      const double keep = probe.w[l][i];
      probe.w[l][i] = keep + h;
      const double up = squared_error_loss(probe, input, target);
      probe.w[l][i] = keep - h;
      const double dn = squared_error_loss(probe, input, target);
      probe.w[l][i] = keep;
      std::snprintf(label, sizeof label, "layer %d weights[%zu]", l, i);
      consider(grads.w[l][i], (up - dn) / (2.0 * h), label);
    }
    for (std::size_t i = 0; i < net.b[l].size(); ++i) {
      const double keep = probe.b[l][i];
      probe.b[l][i] = keep + h;
      const double up = squared_error_loss(probe, input, target);
      probe.b[l][i] = keep - h;
      const double dn = squared_error_loss(probe, input, target);
      probe.b[l][i] = keep;
      std::snprintf(label, sizeof label, "layer %d biases[%zu]", l, i);
      consider(grads.b[l][i], (up - dn) / (2.0 * h), label);
    }
  }
  std::vector<double> in(input.begin(), input.end());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double keep = in[i];
    in[i] = keep + h;
    const double up = squared_error_loss(net, in, target);
    in[i] = keep - h;
    const double dn = squared_error_loss(net, in, target);
    in[i] = keep;
    std::snprintf(label, sizeof label, "input[%zu]", i);
    consider(input_grad[i], (up - dn) / (2.0 * h), label);
  }
  rep.pass = rep.worst_rel_err < tolerance;
  return rep;
}

std::string net_to_text(const MlpNet& net) {
  check_shapes(net);
  std::ostringstream out;
  out << "mlp " << net.sizes.size();
  for (int s : net.sizes) out << ' ' << s;
  out << ' ' << (net.output == OutputKind::linear ? "linear" : "tanh");
  char buf[40];
  std::snprintf(buf, sizeof buf, " %a %a\n", net.out_low, net.out_high);
  out << buf;
  for (int l = 0; l < net.layer_count(); ++l) {
    out << "w" << l;
    for (double x : net.w[l]) {
      std::snprintf(buf, sizeof buf, " %a", x);
      out << buf;
    }
    out << "\nb" << l;
    for (double x : net.b[l]) {
      std::snprintf(buf, sizeof buf, " %a", x);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

namespace {

// operator>> does not accept hexfloat, so tokens go through strtod.
double parse_double_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw std::invalid_argument(std::string("net text: short ") + what);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size())
    throw std::invalid_argument(std::string("net text: bad number in ") + what);
  return v;
}

}  // namespace

MlpNet net_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  std::size_t n_sizes = 0;
  if (!(in >> tag >> n_sizes) || tag != "mlp" || n_sizes < 2)
    throw std::invalid_argument("net text: bad header");
  MlpNet net;
  net.sizes.resize(n_sizes);
  for (std::size_t i = 0; i < n_sizes; ++i)
    if (!(in >> net.sizes[i])) throw std::invalid_argument("net text: bad sizes");
  std::string kind;
  if (!(in >> kind)) throw std::invalid_argument("net text: bad output spec");
  if (kind == "linear")
    net.output = OutputKind::linear;
  else if (kind == "tanh")
    net.output = OutputKind::tanh_scaled;
  else
    throw std::invalid_argument("net text: unknown output kind");
  net.out_low = parse_double_token(in, "output bounds");
  net.out_high = parse_double_token(in, "output bounds");
  for (std::size_t l = 0; l + 1 < n_sizes; ++l) {
    const std::size_t rows = net.sizes[l + 1], cols = net.sizes[l];
    std::string wtag, btag;
    net.w.emplace_back(rows * cols);
    if (!(in >> wtag) || wtag != "w" + std::to_string(l))
      throw std::invalid_argument("net text: missing weight block");
    for (double& x : net.w.back()) x = parse_double_token(in, "weight block");
    net.b.emplace_back(rows);
    if (!(in >> btag) || btag != "b" + std::to_string(l))
      throw std::invalid_argument("net text: missing bias block");
    for (double& x : net.b.back()) x = parse_double_token(in, "bias block");
  }
  std::string extra;
  if (in >> extra) throw std::invalid_argument("net text: trailing tokens");
  check_shapes(net);
  return net;
}

void save_net(const MlpNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << net_to_text(net);
  if (!out.good()) throw std::runtime_error("write failed: " + path);
}

MlpNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return net_from_text(buf.str());
}

}  // namespace rrl
