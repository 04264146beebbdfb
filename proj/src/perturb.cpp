#include "rrl/perturb.hpp"

#include <random>
#include <stdexcept>

namespace rrl {

std::vector<std::string> validate_perturb(const PerturbSpec& spec) {
  std::vector<std::string> bad;
  if (spec.kind == PerturbSpec::Kind::action) {
    if (!(spec.action_noise_prob >= 0.0 && spec.action_noise_prob <= 1.0))
      bad.push_back("action noise probability out of [0,1]");
  } else {
    if (spec.parameter_scales.empty()) bad.push_back("no parameter scales given");
    for (const auto& [name, scale] : spec.parameter_scales)
      if (!(scale > 0.0)) bad.push_back("non-positive scale for '" + name + "'");
  }
  return bad;
}

namespace {

class NoisyTabular final : public TabularEnv {
 public:
  NoisyTabular(std::unique_ptr<TabularEnv> inner, double p)
      : inner_(std::move(inner)), p_(p) {}

  int n_states() const override { return inner_->n_states(); }
  int n_actions() const override { return inner_->n_actions(); }
  void seed(std::uint64_t s) override {
    inner_->seed(s);
    noise_rng_.seed(mix_seed(s, 0x6e6f6973));
  }
  int reset() override { return inner_->reset(); }
  StepOut step(int action) override {
    if (p_ > 0.0) {
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      if (u01(noise_rng_) < p_) {
        std::uniform_int_distribution<int> pick(0, n_actions() - 1);
        action = pick(noise_rng_);
      }
    }
    return inner_->step(action);
  }
  int state() const override { return inner_->state(); }
  void set_state(int s) override { inner_->set_state(s); }
  bool terminal(int s) const override { return inner_->terminal(s); }
  TabularMdp to_mdp(double gamma) const override {
    // fold the noise into the kernel: each action becomes a (1-p)/p mixture
    TabularMdp base = inner_->to_mdp(gamma);
    if (p_ <= 0.0) return base;
    TabularMdp out = base;
    const int na = base.n_actions;
    for (int s = 0; s < base.n_states; ++s)
      for (int a = 0; a < na; ++a) {
        double c_mix = 0.0;
        for (int b = 0; b < na; ++b) c_mix += base.c(s, b) / na;
        out.c(s, a) = (1.0 - p_) * base.c(s, a) + p_ * c_mix;
        for (int j = 0; j < base.n_states; ++j) {
          double p_mix = 0.0;
          for (int b = 0; b < na; ++b) p_mix += base.p(s, b, j) / na;
          out.p(s, a, j) = (1.0 - p_) * base.p(s, a, j) + p_ * p_mix;
        }
      }
    return out;
  }
  std::unique_ptr<TabularEnv> clone() const override {
    auto copy = std::make_unique<NoisyTabular>(inner_->clone(), p_);
    copy->noise_rng_ = noise_rng_;
    return copy;
  }

 private:
  std::unique_ptr<TabularEnv> inner_;
  double p_;
  std::mt19937_64 noise_rng_{0};
};

class NoisyPhysics final : public PhysicsEnv {
 public:
  NoisyPhysics(std::unique_ptr<PhysicsEnv> inner, double p)
      : inner_(std::move(inner)), p_(p) {}

  int obs_dim() const override { return inner_->obs_dim(); }
  bool discrete_actions() const override { return inner_->discrete_actions(); }
  int n_actions() const override { return inner_->n_actions(); }
  double action_low() const override { return inner_->action_low(); }
  double action_high() const override { return inner_->action_high(); }
  int step_limit() const override { return inner_->step_limit(); }
  void seed(std::uint64_t s) override {
    inner_->seed(s);
    noise_rng_.seed(mix_seed(s, 0x6e6f6973));
  }
  std::vector<double> reset() override { return inner_->reset(); }
  StepOut step_discrete(int action) override {
    if (hit()) {
      std::uniform_int_distribution<int> pick(0, n_actions() - 1);
      action = pick(noise_rng_);
    }
    return inner_->step_discrete(action);
  }
  StepOut step_continuous(double action) override {
    if (hit()) {
      std::uniform_real_distribution<double> pick(action_low(), action_high());
      action = pick(noise_rng_);
    }
    return inner_->step_continuous(action);
  }
  std::vector<double> observation() const override { return inner_->observation(); }
  std::vector<double> internal_state() const override { return inner_->internal_state(); }
  void set_internal_state(const std::vector<double>& s) override {
    inner_->set_internal_state(s);
  }
  std::vector<std::string> param_names() const override { return inner_->param_names(); }
  double param(const std::string& name) const override { return inner_->param(name); }
  void set_param(const std::string& name, double value) override {
    inner_->set_param(name, value);
  }
  long clamp_events() const override { return inner_->clamp_events(); }
  std::unique_ptr<PhysicsEnv> clone() const override {
    auto copy = std::make_unique<NoisyPhysics>(inner_->clone(), p_);
    copy->noise_rng_ = noise_rng_;
    return copy;
  }

 private:
  bool hit() {
    if (p_ <= 0.0) return false;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    return u01(noise_rng_) < p_;
  }

  std::unique_ptr<PhysicsEnv> inner_;
  double p_;
  std::mt19937_64 noise_rng_{0};
};

void check_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("action noise probability out of [0,1]");
}

}  // namespace

std::unique_ptr<TabularEnv> wrap_action_perturbation(std::unique_ptr<TabularEnv> env,
                                                     double p) {
  check_prob(p);
  return std::make_unique<NoisyTabular>(std::move(env), p);
}

std::unique_ptr<PhysicsEnv> wrap_action_perturbation(std::unique_ptr<PhysicsEnv> env,
                                                     double p) {
  check_prob(p);
  return std::make_unique<NoisyPhysics>(std::move(env), p);
}

std::unique_ptr<PhysicsEnv> wrap_parameter_perturbation(const PhysicsEnv& env,
                                                        const PerturbSpec& spec) {
  if (spec.kind != PerturbSpec::Kind::parameter)
    throw std::invalid_argument("wrap_parameter_perturbation: wrong spec kind");
  const auto bad = validate_perturb(spec);
  if (!bad.empty()) throw std::invalid_argument("perturb spec: " + bad.front());
  auto out = env.clone();
  for (const auto& [name, scale] : spec.parameter_scales)
    out->set_param(name, out->param(name) * scale);  // throws on unknown name
  return out;
}

}  // namespace rrl
