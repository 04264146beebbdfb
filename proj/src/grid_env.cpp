#include "rrl/grid_env.hpp"

#include <sstream>
#include <stdexcept>

namespace rrl {

std::vector<std::string> validate_grid(const GridSpec& spec) {
  std::vector<std::string> bad;
  if (spec.rows <= 0 || spec.cols <= 0) bad.push_back("non-positive grid size");
  auto inside = [&](int r, int c) {
    return r >= 0 && r < spec.rows && c >= 0 && c < spec.cols;
  };
  if (!bad.empty()) return bad;
  if (!inside(spec.start_row, spec.start_col)) bad.push_back("start outside grid");
  if (!inside(spec.goal_row, spec.goal_col)) bad.push_back("goal outside grid");
  for (auto [r, c] : spec.hazards) {
    if (!inside(r, c)) bad.push_back("hazard outside grid");
    if (r == spec.start_row && c == spec.start_col) bad.push_back("hazard on start");
    if (r == spec.goal_row && c == spec.goal_col) bad.push_back("hazard on goal");
  }
  if (spec.start_row == spec.goal_row && spec.start_col == spec.goal_col)
    bad.push_back("start equals goal");
  if (!(spec.step_cost >= 0.0)) bad.push_back("negative step cost");
  if (!(spec.hazard_cost >= spec.step_cost))
    bad.push_back("hazard cost below step cost");
  return bad;
}

std::string grid_ascii(const GridSpec& spec) {
  std::vector<std::string> rows(spec.rows, std::string(spec.cols, '.'));
  for (auto [r, c] : spec.hazards) rows[r][c] = 'H';
  rows[spec.start_row][spec.start_col] = 'S';
  rows[spec.goal_row][spec.goal_col] = 'G';
  std::ostringstream os;
  for (const auto& row : rows) os << row << "\n";
  return os.str();
}

GridEnv::GridEnv(GridSpec spec) : spec_(std::move(spec)) {
  const auto bad = validate_grid(spec_);
  if (!bad.empty()) throw std::invalid_argument("GridEnv: " + bad.front());
  hazard_mask_.assign(static_cast<std::size_t>(spec_.rows) * spec_.cols, false);
  for (auto [r, c] : spec_.hazards) hazard_mask_[cell(r, c)] = true;
  start_ = cell(spec_.start_row, spec_.start_col);
  goal_ = cell(spec_.goal_row, spec_.goal_col);
  state_ = start_;
}

bool GridEnv::hazard(int s) const { return hazard_mask_[s]; }

bool GridEnv::terminal(int s) const {
  if (s == goal_) return true;
  return spec_.hazard_terminal && hazard(s);
}

int GridEnv::reset() {
  state_ = start_;
  return state_;
}

void GridEnv::set_state(int s) {
  if (s < 0 || s >= n_states()) throw std::out_of_range("GridEnv: state index");
  state_ = s;
}

GridEnv::Outcome GridEnv::move(int s, int dir) const {
  const int row = s / spec_.cols, col = s % spec_.cols;
  int nr = row, nc = col;
  switch (dir) {
    case kLeft: nc -= 1; break;
    case kDown: nr += 1; break;
    case kRight: nc += 1; break;
    case kUp: nr -= 1; break;
    default: throw std::out_of_range("GridEnv: action index");
  }
  if (nr < 0 || nr >= spec_.rows || nc < 0 || nc >= spec_.cols) {
    nr = row;  // wall bump
    nc = col;
  }
  int next = cell(nr, nc);
  Outcome out;
  if (hazard(next)) {
    out.cost = spec_.hazard_cost;
    if (spec_.hazard_terminal) {
      out.next = next;
      out.done = true;
    } else {
      out.next = start_;
      out.done = false;
    }
  } else if (next == goal_) {
    out.cost = spec_.goal_cost;
    out.next = next;
    out.done = true;
  } else {
    out.cost = spec_.step_cost;
    out.next = next;
    out.done = false;
  }
  return out;
}

StepOut GridEnv::step(int action) {
  if (action < 0 || action >= 4) throw std::out_of_range("GridEnv: action index");
  if (terminal(state_)) throw std::runtime_error("GridEnv: step from terminal state");
  int dir = action;
  if (spec_.slippery) {
    // intended direction or either perpendicular, 1/3 each
    std::uniform_int_distribution<int> pick(0, 2);
    const int k = pick(rng_);
    if (k == 1) dir = (action + 1) & 3;
    else if (k == 2) dir = (action + 3) & 3;
  }
  const Outcome out = move(state_, dir);
  state_ = out.next;
  return {out.cost, out.done};
}

TabularMdp GridEnv::to_mdp(double gamma) const {
  TabularMdp mdp(n_states(), 4, gamma);
  for (int s = 0; s < n_states(); ++s) {
    if (terminal(s) || hazard(s)) {
      // absorbing; hazard cells are never occupied in the teleport variant
      // but still need well-formed rows
      for (int a = 0; a < 4; ++a) mdp.p(s, a, s) = 1.0;
      continue;
    }
    for (int a = 0; a < 4; ++a) {
      if (spec_.slippery) {
        const int dirs[3] = {a, (a + 1) & 3, (a + 3) & 3};
        for (int dir : dirs) {
          const Outcome out = move(s, dir);
          mdp.p(s, a, out.next) += 1.0 / 3.0;
          mdp.c(s, a) += out.cost / 3.0;
        }
      } else {
        const Outcome out = move(s, a);
        mdp.p(s, a, out.next) = 1.0;
        mdp.c(s, a) = out.cost;
      }
    }
  }
  return mdp;
}

std::unique_ptr<TabularEnv> GridEnv::clone() const {
  return std::make_unique<GridEnv>(*this);
}

GridSpec cliffwalking_spec() {
  GridSpec g;
  g.rows = 4;
  g.cols = 12;
  g.start_row = 3;
  g.start_col = 0;
  g.goal_row = 3;
  g.goal_col = 11;
  for (int c = 1; c <= 10; ++c) g.hazards.emplace_back(3, c);
  g.hazard_terminal = false;
  g.slippery = false;
  g.step_cost = 1.0;
  g.hazard_cost = 100.0;
  g.goal_cost = 1.0;
  return g;
}

GridSpec frozenlake_spec(bool slippery) {
  static const char* kMap[8] = {
      "SFFFFFFF", "FFFFFFFF", "FFFHFFFF", "FFFFFHFF",
      "FFFHFFFF", "FHHFFFHF", "FHFFHFHF", "FFFHFFFG",
  };
  GridSpec g;
  g.rows = 8;
  g.cols = 8;
  g.slippery = slippery;
  g.hazard_terminal = true;
  g.step_cost = 0.0;
  g.hazard_cost = 0.0;
  g.goal_cost = -1.0;  // reward 1 for reaching the goal
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      switch (kMap[r][c]) {
        case 'S': g.start_row = r; g.start_col = c; break;
        case 'G': g.goal_row = r; g.goal_col = c; break;
        case 'H': g.hazards.emplace_back(r, c); break;
        default: break;
      }
    }
  return g;
}

std::unique_ptr<TabularEnv> make_cliffwalking() {
  return std::make_unique<GridEnv>(cliffwalking_spec());
}

std::unique_ptr<TabularEnv> make_frozenlake(bool slippery) {
  return std::make_unique<GridEnv>(frozenlake_spec(slippery));
}

}  // namespace rrl
