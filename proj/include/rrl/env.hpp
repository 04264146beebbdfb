#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rrl/mdp.hpp"

namespace rrl {

struct StepOut {
  double cost = 0.0;
  bool done = false;
};

// Discrete-state environment. step() must be callable from any state set via
// set_state, which is what the double-agent sampler relies on.
class TabularEnv {
 public:
  virtual ~TabularEnv() = default;

  virtual int n_states() const = 0;
  virtual int n_actions() const = 0;
  virtual void seed(std::uint64_t s) = 0;
  virtual int reset() = 0;  // draws from the internal rng stream
  virtual StepOut step(int action) = 0;
  virtual int state() const = 0;
  virtual void set_state(int s) = 0;
  virtual bool terminal(int s) const = 0;
  virtual TabularMdp to_mdp(double gamma) const = 0;
  virtual std::unique_ptr<TabularEnv> clone() const = 0;

  int reset_with_seed(std::uint64_t s) {
    seed(s);
    return reset();
  }
};

// Continuous-observation environment with either a discrete action set or a
// single bounded continuous action. Exposes its internal state so a second
// agent can branch from the same state, and its physical parameters by name
// so evaluation can perturb them.
class PhysicsEnv {
 public:
  virtual ~PhysicsEnv() = default;

  virtual int obs_dim() const = 0;
  virtual bool discrete_actions() const = 0;
  virtual int n_actions() const = 0;
  virtual double action_low() const = 0;
  virtual double action_high() const = 0;
  virtual int step_limit() const = 0;
  virtual void seed(std::uint64_t s) = 0;
  virtual std::vector<double> reset() = 0;
  virtual StepOut step_discrete(int action) = 0;
  virtual StepOut step_continuous(double action) = 0;
  virtual std::vector<double> observation() const = 0;
  virtual std::vector<double> internal_state() const = 0;
  virtual void set_internal_state(const std::vector<double>& s) = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual double param(const std::string& name) const = 0;
  virtual void set_param(const std::string& name, double value) = 0;
  virtual long clamp_events() const { return 0; }
  virtual std::unique_ptr<PhysicsEnv> clone() const = 0;

  std::vector<double> reset_with_seed(std::uint64_t s) {
    seed(s);
    return reset();
  }
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace rrl
