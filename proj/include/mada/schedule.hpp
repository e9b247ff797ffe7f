#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace mada {

enum class ScheduleKind { constant, inv_sqrt, cosine_warmup };

/// Learning-rate schedule; step indexing is 1-based (t=0 is pre-init only).
struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  double peak = 0.0;
  double final_lr = 0.0;
  long warmup_steps = 0;
  long total_steps = 1;

  static Schedule constant(double peak) {
    Schedule s;
    s.kind = ScheduleKind::constant;
    s.peak = peak;
    s.validate();
    return s;
  }

  static Schedule inv_sqrt(double peak) {
    Schedule s;
    s.kind = ScheduleKind::inv_sqrt;
    s.peak = peak;
    s.validate();
    return s;
  }

  static Schedule cosine_warmup(double peak, double final_lr, long warmup_steps,
                                long total_steps) {
    Schedule s;
    s.kind = ScheduleKind::cosine_warmup;
    s.peak = peak;
    s.final_lr = final_lr;
    s.warmup_steps = warmup_steps;
    s.total_steps = total_steps;
    s.validate();
    return s;
  }

  void validate() const {
    if (!(peak > 0.0)) throw std::invalid_argument("schedule: peak must be > 0");
    if (final_lr < 0.0) throw std::invalid_argument("schedule: final must be >= 0");
    if (warmup_steps < 0) throw std::invalid_argument("schedule: warmup_steps must be >= 0");
    if (total_steps <= 0) throw std::invalid_argument("schedule: total_steps must be > 0");
    if (kind == ScheduleKind::cosine_warmup && warmup_steps >= total_steps) {
      throw std::invalid_argument("schedule: warmup_steps must be < total_steps");
    }
  }
};

inline double schedule_at(const Schedule& s, long t) {
  if (t < 1) throw std::out_of_range("schedule_at: t must be >= 1");
  switch (s.kind) {
    case ScheduleKind::constant:
      return s.peak;
    case ScheduleKind::inv_sqrt:
      return s.peak / std::sqrt(double(t));
    case ScheduleKind::cosine_warmup: {
      if (t > s.total_steps) {
        throw std::out_of_range("schedule_at: t beyond total_steps for cosine-warmup");
      }
      if (t <= s.warmup_steps) {
        // linear from 0 to peak over the warmup window
        return s.peak * double(t) / double(s.warmup_steps);
      }
      double progress = double(t - s.warmup_steps) / double(s.total_steps - s.warmup_steps);
      return s.final_lr +
             (s.peak - s.final_lr) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
    }
  }
  throw std::logic_error("schedule_at: unknown kind");
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "inv-sqrt") return ScheduleKind::inv_sqrt;
  if (s == "cosine-warmup") return ScheduleKind::cosine_warmup;
  throw std::invalid_argument("unknown schedule kind '" + s + "'");
}

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::inv_sqrt: return "inv-sqrt";
    case ScheduleKind::cosine_warmup: return "cosine-warmup";
  }
  return "?";
}

}  // namespace mada
