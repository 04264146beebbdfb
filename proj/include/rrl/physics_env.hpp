#pragma once

#include <random>

#include "rrl/env.hpp"

namespace rrl {

// Cart with a pole balanced on top, Euler-integrated. Two discrete actions
// push left/right. Episode ends when the cart leaves the track or the pole
// tips past the angle limit. Cost -1 per surviving step so the usual
// score-per-step reading carries over, capped at 500 steps.
class CartPoleEnv final : public PhysicsEnv {
 public:
  CartPoleEnv();

  int obs_dim() const override { return 4; }
  bool discrete_actions() const override { return true; }
  int n_actions() const override { return 2; }
  double action_low() const override { return 0.0; }
  double action_high() const override { return 1.0; }
  int step_limit() const override { return 500; }
  void seed(std::uint64_t s) override { rng_.seed(s); }
  std::vector<double> reset() override;
  StepOut step_discrete(int action) override;
  StepOut step_continuous(double action) override;
  std::vector<double> observation() const override;
  std::vector<double> internal_state() const override;
  void set_internal_state(const std::vector<double>& s) override;
  std::vector<std::string> param_names() const override;
  double param(const std::string& name) const override;
  void set_param(const std::string& name, double value) override;
  std::unique_ptr<PhysicsEnv> clone() const override;

 private:
  double gravity_ = 9.8;
  double cart_mass_ = 1.0;
  double pole_mass_ = 0.1;
  double pole_half_length_ = 0.5;
  double force_mag_ = 10.0;
  double time_step_ = 0.02;
  double x_limit_ = 2.4;
  double theta_limit_ = 12.0 * 3.14159265358979323846 / 180.0;

  double x_ = 0, x_dot_ = 0, theta_ = 0, theta_dot_ = 0;
  bool done_ = false;
  std::mt19937_64 rng_{0};
};

// Single-link pendulum driven by a bounded torque. Cost penalizes angle from
// upright, angular velocity and torque. Episodes run a fixed 200 steps with
// no early termination. Torque outside the bound is clamped and counted.
class PendulumEnv final : public PhysicsEnv {
 public:
  PendulumEnv();

  int obs_dim() const override { return 3; }  // cos(theta), sin(theta), theta_dot
  bool discrete_actions() const override { return false; }
  int n_actions() const override { return 0; }
  double action_low() const override { return -max_torque_; }
  double action_high() const override { return max_torque_; }
  int step_limit() const override { return 200; }
  void seed(std::uint64_t s) override { rng_.seed(s); }
  std::vector<double> reset() override;
  StepOut step_discrete(int action) override;
  StepOut step_continuous(double action) override;
  std::vector<double> observation() const override;
  std::vector<double> internal_state() const override;
  void set_internal_state(const std::vector<double>& s) override;
  std::vector<std::string> param_names() const override;
  double param(const std::string& name) const override;
  void set_param(const std::string& name, double value) override;
  long clamp_events() const override { return clamp_events_; }
  std::unique_ptr<PhysicsEnv> clone() const override;

 private:
  double gravity_ = 10.0;
  double mass_ = 1.0;
  double length_ = 1.0;
  double time_step_ = 0.05;
  double max_torque_ = 2.0;
  double max_speed_ = 8.0;

  double theta_ = 0, theta_dot_ = 0;
  long clamp_events_ = 0;
  std::mt19937_64 rng_{0};
};

std::unique_ptr<PhysicsEnv> make_cartpole();
std::unique_ptr<PhysicsEnv> make_pendulum();

}  // namespace rrl
