#pragma once

// Simulated users choosing the next interaction kind, and the follow-up
// probability schedule used during training.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "interseg/prompts.hpp"
#include "interseg/rng.hpp"

namespace interseg {

enum class AgentKind { random, sunk_cost, single };

inline const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::random: return "random";
    case AgentKind::sunk_cost: return "sunkcost";
    case AgentKind::single: return "single";
  }
  return "?";
}

inline AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "random") return AgentKind::random;
  if (s == "sunkcost" || s == "sunk_cost") return AgentKind::sunk_cost;
  if (s == "single") return AgentKind::single;
  throw std::invalid_argument("unknown agent: " + s);
}

/// Session-local. `current` is always a member of `allowed`.
class Agent {
 public:
  Agent(AgentKind kind, std::vector<InteractionKind> allowed, InteractionKind initial, double keep_prob = 0.9,
        bool exclude_current = false)
      : kind_(kind), allowed_(std::move(allowed)), current_(initial), keep_prob_(keep_prob),
        exclude_current_(exclude_current) {
    if (allowed_.empty()) throw std::invalid_argument("Agent: allowed kinds empty");
    if (std::find(allowed_.begin(), allowed_.end(), initial) == allowed_.end())
      throw std::invalid_argument("Agent: initial kind not allowed");
    if (!(keep_prob_ >= 0 && keep_prob_ <= 1)) throw std::invalid_argument("Agent: keep_prob outside [0, 1]");
  }

  /// Initial kind drawn uniformly from `allowed`.
  static Agent with_random_start(AgentKind kind, std::vector<InteractionKind> allowed, Rng& rng,
                                 double keep_prob = 0.9, bool exclude_current = false) {
    if (allowed.empty()) throw std::invalid_argument("Agent: allowed kinds empty");
    const InteractionKind first = allowed[rng.below(allowed.size())];
    return Agent(kind, std::move(allowed), first, keep_prob, exclude_current);
  }

  AgentKind kind() const { return kind_; }
  InteractionKind current() const { return current_; }
  double keep_prob() const { return keep_prob_; }
  const std::vector<InteractionKind>& allowed() const { return allowed_; }

  /// Random redraws every step; SunkCost keeps with keep_prob and otherwise
  /// redraws (possibly the same kind); Single never consumes the rng.
  InteractionKind next(Rng& rng) {
    switch (kind_) {
      case AgentKind::single: break;
      case AgentKind::random: current_ = draw(rng); break;
      case AgentKind::sunk_cost:
        if (!rng.bernoulli(keep_prob_)) current_ = draw(rng);
        break;
    }
    return current_;
  }

 private:
  InteractionKind draw(Rng& rng) const {
    if (exclude_current_ && allowed_.size() > 1) {
      std::vector<InteractionKind> others;
      for (InteractionKind k : allowed_)
        if (k != current_) others.push_back(k);
      return others[rng.below(others.size())];
    }
    return allowed_[rng.below(allowed_.size())];
  }

  AgentKind kind_;
  std::vector<InteractionKind> allowed_;
  InteractionKind current_;
  double keep_prob_;
  bool exclude_current_;
};

struct FollowupSchedule {
  double p_start = 0.3;
  double p_end = 0.75;
  int total_epochs = 5000;
};

/// Linear in epoch between the two endpoints, inclusive.
inline double followup_probability(int epoch, const FollowupSchedule& s = {}) {
  if (!(0 <= s.p_start && s.p_start <= s.p_end && s.p_end <= 1))
    throw std::invalid_argument("followup_probability: need 0 <= p_start <= p_end <= 1");
  if (s.total_epochs <= 0) throw std::invalid_argument("followup_probability: total_epochs must be positive");
  if (epoch < 0 || epoch > s.total_epochs) throw std::out_of_range("followup_probability: epoch out of range");
  const double t = static_cast<double>(epoch) / s.total_epochs;
  return (1 - t) * s.p_start + t * s.p_end;
}

}  // namespace interseg
