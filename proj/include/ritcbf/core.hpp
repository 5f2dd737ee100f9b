#pragma once

// Timers, timing constants and the jump-set logic of the impulsive hybrid model.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>

namespace ritcbf {

/// Error categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  kConfig,
  kSingularity,
  kStepSize,
  kActuationLimit,
  kSafetyInfeasible,
  kDomainEmpty,
  kBracket,
  kZeno,
  kIterationLimit,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct TimingConfig {
  double T_s = 10.0;   // control sample period
  double T_a = 120.0;  // actuation dwell time
  double T_m = 30.0;   // blackout before a measurement
  double T_L = 360.0;  // min time between measurements
  double T_M = 360.0;  // max time between measurements
};

/// sigma_s in [0, T_s], sigma_a in (-inf, T_a], sigma_m in [0, T_M].
struct Timers {
  double sigma_s = 0.0;
  double sigma_a = 0.0;
  double sigma_m = 0.0;
};

struct HybridTime {
  double t = 0.0;
  std::int64_t j = 0;

  friend bool operator<=(const HybridTime& a, const HybridTime& b) {
    return a.t < b.t || (a.t == b.t && a.j <= b.j);
  }
};

enum class JumpLabel : std::uint8_t { Measure, Actuate, SampleReset };

inline const char* to_string(JumpLabel label) {
  switch (label) {
    case JumpLabel::Measure: return "Measure";
    case JumpLabel::Actuate: return "Actuate";
    case JumpLabel::SampleReset: return "SampleReset";
  }
  return "?";
}

/// Small bitset over JumpLabel. Empty means the point is in the flow set.
class JumpSet {
 public:
  constexpr JumpSet() = default;
  constexpr void insert(JumpLabel l) { bits_ |= mask(l); }
  constexpr bool contains(JumpLabel l) const { return (bits_ & mask(l)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const {
    return (bits_ & 1 ? 1 : 0) + (bits_ & 2 ? 1 : 0) + (bits_ & 4 ? 1 : 0);
  }
  friend constexpr bool operator==(JumpSet, JumpSet) = default;

  static constexpr JumpSet of(std::initializer_list<JumpLabel> labels) {
    JumpSet s;
    for (auto l : labels) s.insert(l);
    return s;
  }

 private:
  static constexpr std::uint8_t mask(JumpLabel l) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(l));
  }
  std::uint8_t bits_ = 0;
};

inline bool in_timer_set(const Timers& s, const TimingConfig& cfg) {
  return s.sigma_s >= 0.0 && s.sigma_s <= cfg.T_s && s.sigma_a <= cfg.T_a && s.sigma_m >= 0.0 &&
         s.sigma_m <= cfg.T_M;
}

// Timer zero tests are exact: the executor lands on event times exactly.
inline bool is_impulse_opportunity(const Timers& s, const TimingConfig& cfg) {
  return s.sigma_s == 0.0 && s.sigma_a <= 0.0 && s.sigma_m >= cfg.T_m;
}

inline bool is_guaranteed_opportunity(const Timers& s, const TimingConfig& cfg) {
  return s.sigma_s == 0.0 && s.sigma_a < 0.0 && s.sigma_m > cfg.T_m;
}

/// Labels of every jump set containing (b, sigma).
inline JumpSet classify_jumps(bool b, const Timers& s, const TimingConfig& cfg) {
  JumpSet out;
  if (s.sigma_m == 0.0) out.insert(JumpLabel::Measure);
  if (is_impulse_opportunity(s, cfg) && b) out.insert(JumpLabel::Actuate);
  if (s.sigma_s == 0.0 && (s.sigma_a >= 0.0 || s.sigma_m <= cfg.T_m || !b))
    out.insert(JumpLabel::SampleReset);
  return out;
}

/// Upper bound on the time to the next guaranteed opportunity after coasting.
inline double horizon_delta1(double sigma_m, const TimingConfig& cfg) {
  return sigma_m <= cfg.T_m + cfg.T_s ? sigma_m + cfg.T_s : cfg.T_s;
}

/// Same bound after firing an impulse now.
inline double horizon_delta2(double sigma_m, const TimingConfig& cfg) {
  return sigma_m <= cfg.T_a + cfg.T_m + cfg.T_s ? std::max(sigma_m, cfg.T_a) + cfg.T_s
                                                : cfg.T_a + cfg.T_s;
}

inline double delta_r(const TimingConfig& cfg) { return cfg.T_a + cfg.T_m + 2.0 * cfg.T_s; }

struct TimingViolation {
  std::string inequality;
  std::string detail;
};

/// Checks positivity, T_L <= T_M and T_L > T_m + T_s + max(T_a - T_m, 0).
inline std::optional<TimingViolation> validate_timing(const TimingConfig& cfg) {
  auto num = [](double v) { return std::to_string(v); };
  if (!(cfg.T_s > 0.0)) return TimingViolation{"T_s > 0", "T_s = " + num(cfg.T_s)};
  if (!(cfg.T_a > 0.0)) return TimingViolation{"T_a > 0", "T_a = " + num(cfg.T_a)};
  if (!(cfg.T_m >= 0.0)) return TimingViolation{"T_m >= 0", "T_m = " + num(cfg.T_m)};
  if (!(cfg.T_L > 0.0)) return TimingViolation{"T_L > 0", "T_L = " + num(cfg.T_L)};
  if (!(cfg.T_M > 0.0)) return TimingViolation{"T_M > 0", "T_M = " + num(cfg.T_M)};
  if (!(cfg.T_L <= cfg.T_M))
    return TimingViolation{"T_L <= T_M", "T_L = " + num(cfg.T_L) + ", T_M = " + num(cfg.T_M)};
  const double need = cfg.T_m + cfg.T_s + std::max(cfg.T_a - cfg.T_m, 0.0);
  if (!(cfg.T_L > need))
    return TimingViolation{"T_L > T_m + T_s + max(T_a - T_m, 0)",
                           "T_L = " + num(cfg.T_L) + " but the bound is " + num(need)};
  return std::nullopt;
}

}  // namespace ritcbf
