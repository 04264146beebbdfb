#include "rrl/physics_env.hpp"

#include <cmath>
#include <stdexcept>

namespace rrl {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
  // into [-pi, pi)
  double w = std::fmod(a + kPi, 2.0 * kPi);
  if (w < 0) w += 2.0 * kPi;
  return w - kPi;
}

[[noreturn]] void unknown_param(const std::string& name) {
  throw std::invalid_argument("unknown physics parameter '" + name + "'");
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

CartPoleEnv::CartPoleEnv() = default;

std::vector<double> CartPoleEnv::reset() {
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  x_ = u(rng_);
  x_dot_ = u(rng_);
  theta_ = u(rng_);
  theta_dot_ = u(rng_);
  done_ = false;
  return observation();
}

StepOut CartPoleEnv::step_discrete(int action) {
  if (action < 0 || action > 1) throw std::out_of_range("CartPoleEnv: action index");
  if (done_) throw std::runtime_error("CartPoleEnv: step after termination");
  const double force = action == 1 ? force_mag_ : -force_mag_;
  const double total_mass = cart_mass_ + pole_mass_;
  const double pml = pole_mass_ * pole_half_length_;
  const double cos_t = std::cos(theta_);
  const double sin_t = std::sin(theta_);
  const double temp = (force + pml * theta_dot_ * theta_dot_ * sin_t) / total_mass;
  const double theta_acc =
      (gravity_ * sin_t - cos_t * temp) /
      (pole_half_length_ * (4.0 / 3.0 - pole_mass_ * cos_t * cos_t / total_mass));
  const double x_acc = temp - pml * theta_acc * cos_t / total_mass;
  x_ += time_step_ * x_dot_;
  x_dot_ += time_step_ * x_acc;
  theta_ += time_step_ * theta_dot_;
  theta_dot_ += time_step_ * theta_acc;
  done_ = std::fabs(x_) > x_limit_ || std::fabs(theta_) > theta_limit_;
  return {-1.0, done_};
}

StepOut CartPoleEnv::step_continuous(double) {
  throw std::runtime_error("CartPoleEnv: continuous actions unsupported");
}

std::vector<double> CartPoleEnv::observation() const {
  return {x_, x_dot_, theta_, theta_dot_};
}

std::vector<double> CartPoleEnv::internal_state() const { return observation(); }

void CartPoleEnv::set_internal_state(const std::vector<double>& s) {
  if (s.size() != 4) throw std::invalid_argument("CartPoleEnv: state size");
  x_ = s[0];
  x_dot_ = s[1];
  theta_ = s[2];
  theta_dot_ = s[3];
  done_ = std::fabs(x_) > x_limit_ || std::fabs(theta_) > theta_limit_;
}

std::vector<std::string> CartPoleEnv::param_names() const {
  return {"gravity", "cart_mass", "pole_mass", "pole_half_length", "force_mag",
          "time_step"};
}

double CartPoleEnv::param(const std::string& name) const {
  if (name == "gravity") return gravity_;
  if (name == "cart_mass") return cart_mass_;
  if (name == "pole_mass") return pole_mass_;
  if (name == "pole_half_length") return pole_half_length_;
  if (name == "force_mag") return force_mag_;
  if (name == "time_step") return time_step_;
  unknown_param(name);
}

void CartPoleEnv::set_param(const std::string& name, double value) {
  if (!(value > 0.0))
    throw std::invalid_argument("physics parameter '" + name + "' must be positive");
  if (name == "gravity") gravity_ = value;
  else if (name == "cart_mass") cart_mass_ = value;
  else if (name == "pole_mass") pole_mass_ = value;
  else if (name == "pole_half_length") pole_half_length_ = value;
  else if (name == "force_mag") force_mag_ = value;
  else if (name == "time_step") time_step_ = value;
  else unknown_param(name);
}

std::unique_ptr<PhysicsEnv> CartPoleEnv::clone() const {
  return std::make_unique<CartPoleEnv>(*this);
}

PendulumEnv::PendulumEnv() = default;

std::vector<double> PendulumEnv::reset() {
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  theta_ = ang(rng_);
  theta_dot_ = vel(rng_);
  return observation();
}

StepOut PendulumEnv::step_discrete(int) {
  throw std::runtime_error("PendulumEnv: discrete actions unsupported");
}

StepOut PendulumEnv::step_continuous(double action) {
  double u = action;
  if (u < -max_torque_ || u > max_torque_) {
    ++clamp_events_;
    u = std::clamp(u, -max_torque_, max_torque_);
  }
  const double cost = theta_ * theta_ + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u;
  const double acc = 3.0 * gravity_ / (2.0 * length_) * std::sin(theta_) +
                     3.0 / (mass_ * length_ * length_) * u;
  theta_dot_ = std::clamp(theta_dot_ + acc * time_step_, -max_speed_, max_speed_);
  theta_ = wrap_angle(theta_ + theta_dot_ * time_step_);
  return {cost, false};
}

std::vector<double> PendulumEnv::observation() const {
  return {std::cos(theta_), std::sin(theta_), theta_dot_};
}

std::vector<double> PendulumEnv::internal_state() const { return {theta_, theta_dot_}; }

void PendulumEnv::set_internal_state(const std::vector<double>& s) {
  if (s.size() != 2) throw std::invalid_argument("PendulumEnv: state size");
  theta_ = wrap_angle(s[0]);
  theta_dot_ = std::clamp(s[1], -max_speed_, max_speed_);
}

std::vector<std::string> PendulumEnv::param_names() const {
  return {"gravity", "mass", "length", "time_step", "max_torque", "max_speed"};
}

double PendulumEnv::param(const std::string& name) const {
  if (name == "gravity") return gravity_;
  if (name == "mass") return mass_;
  if (name == "length") return length_;
  if (name == "time_step") return time_step_;
  if (name == "max_torque") return max_torque_;
  if (name == "max_speed") return max_speed_;
  unknown_param(name);
}

void PendulumEnv::set_param(const std::string& name, double value) {
  if (!(value > 0.0))
    throw std::invalid_argument("physics parameter '" + name + "' must be positive");
  if (name == "gravity") gravity_ = value;
  else if (name == "mass") mass_ = value;
  else if (name == "length") length_ = value;
  else if (name == "time_step") time_step_ = value;
  else if (name == "max_torque") max_torque_ = value;
  else if (name == "max_speed") max_speed_ = value;
  else unknown_param(name);
}

std::unique_ptr<PhysicsEnv> PendulumEnv::clone() const {
  return std::make_unique<PendulumEnv>(*this);
}

std::unique_ptr<PhysicsEnv> make_cartpole() { return std::make_unique<CartPoleEnv>(); }
std::unique_ptr<PhysicsEnv> make_pendulum() { return std::make_unique<PendulumEnv>(); }

}  // namespace rrl
