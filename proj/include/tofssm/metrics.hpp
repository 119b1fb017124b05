#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tofssm/config.hpp"
#include "tofssm/sim.hpp"
#include "tofssm/ssm.hpp"

namespace tofssm {

/// Per-trial evaluation quantities. Undefined values (incomplete trial, no
/// events, no human) are NaN and excluded from aggregates.
struct TrialMetrics {
  Approach approach = Approach::ideal;
  SsmMode mode = SsmMode::vo;
  int trial = 0;
  bool completed = false;
  double duration = 0.0;
  double productivity = 0.0;     // baseline time / trial time
  double safety_avg = 0.0;       // time-average of d_gt^2 / max(v_tcp, 1e-3)
  double safety_min = 0.0;
  long safety_floored_ticks = 0; // ticks where the speed floor kicked in
  double rmse = 0.0;             // sensed distance vs ground truth
  double reaction_mean = 0.0;    // signed; negative = stopped before crossing
  int reaction_count = 0;
  int stop_events = 0;
  int reduce_events = 0;
  double stop_duration_mean = 0.0;
  double reduce_duration_mean = 0.0;
  double dv_stop_mean = 0.0;       // |speed at stop command - speed once ramped out|
  double sep_stop_mean = 0.0;      // ground-truth separation at stop commands
  double sep_reduce_mean = 0.0;
  double min_d_gt = 0.0;
};

constexpr double kSpeedFloor = 1e-3;

namespace metrics_detail {

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline bool has_event(const std::string& events, const char* name) {
  size_t pos = 0;
  const std::string needle(name);
  while (pos <= events.size()) {
    const size_t end = events.find(';', pos);
    const size_t n = (end == std::string::npos ? events.size() : end) - pos;
    if (events.compare(pos, n, needle) == 0) return true;
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return false;
}

}  // namespace metrics_detail

inline double productivity(double t_no_hri, double t_hri) {
  if (!(t_no_hri > 0.0) || !(t_hri > 0.0)) {
    throw std::invalid_argument("productivity: completion times must be positive");
  }
  return t_no_hri / t_hri;
}

struct SafetyAggregate {
  double average = std::numeric_limits<double>::quiet_NaN();
  double minimum = std::numeric_limits<double>::quiet_NaN();
  long floored_ticks = 0;
  long ticks = 0;
};

/// Separation-squared over tool speed, summed over ticks with a human in the
/// scene. The speed is floored so stopped phases score the parked separation
/// instead of dividing by zero.
inline SafetyAggregate safety_metric(const std::vector<TraceRow>& rows) {
  SafetyAggregate out;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (!std::isfinite(r.d_gt)) continue;
    const double v = std::max(r.tcp_speed, kSpeedFloor);
    if (r.tcp_speed < kSpeedFloor) ++out.floored_ticks;
    const double s = r.d_gt * r.d_gt / v;
    sum += s;
    lo = std::min(lo, s);
    ++out.ticks;
  }
  if (out.ticks > 0) {
    out.average = sum / static_cast<double>(out.ticks);
    out.minimum = lo;
  }
  return out;
}

inline double rmse_vs_ground_truth(const std::vector<TraceRow>& rows) {
  double sum = 0.0;
  long n = 0;
  for (const auto& r : rows) {
    if (!r.detect || !std::isfinite(r.d_gt) || !std::isfinite(r.d_est)) continue;
    const double e = r.d_est - r.d_gt;
    sum += e * e;
    ++n;
  }
  return n > 0 ? std::sqrt(sum / static_cast<double>(n))
               : std::numeric_limits<double>::quiet_NaN();
}

struct EventMetrics {
  std::vector<double> reaction_times;   // signed, per stop event with a crossing
  std::vector<double> stop_durations;
  std::vector<double> reduce_durations;
  std::vector<double> dv_at_stop;
  std::vector<double> sep_at_stop;
  std::vector<double> sep_at_reduce;
};

/// Event-level quantities. Reaction time for a stop event is the delay from
/// the ground-truth separation first dropping below the cell's rest-state
/// critical distance to the stop command; a stop commanded before that
/// crossing scores negative (the controller anticipated it). Each crossing is
/// matched to the nearest stop command.
inline EventMetrics event_metrics(const std::vector<TraceRow>& rows, const SsmParams& params) {
  using metrics_detail::has_event;
  EventMetrics out;
  if (rows.empty()) return out;
  const double d_ref = params.mode == SsmMode::sm
                           ? params.fixed_dC
                           : critical_distance(0.0, 0.0, params);

  std::vector<double> crossings;
  std::vector<size_t> stops, reduces;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (std::isfinite(rows[i].d_gt) && rows[i].d_gt < d_ref) {
      const bool was_above = i == 0 || !std::isfinite(rows[i - 1].d_gt) ||
                             rows[i - 1].d_gt >= d_ref;
      if (was_above) crossings.push_back(rows[i].t);
    }
    if (has_event(rows[i].events, "stop")) stops.push_back(i);
    if (has_event(rows[i].events, "reduce")) reduces.push_back(i);
  }

  for (const size_t si : stops) {
    const double t_stop = rows[si].t;
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const double tc : crossings) {
      const double r = t_stop - tc;
      if (!std::isfinite(best) || std::abs(r) < std::abs(best)) best = r;
    }
    if (std::isfinite(best)) out.reaction_times.push_back(best);

    if (std::isfinite(rows[si].d_gt)) out.sep_at_stop.push_back(rows[si].d_gt);

    const double v0 = rows[si].tcp_speed;
    size_t j = si;
    while (j + 1 < rows.size() && rows[j].rho > 0.0 && rows[j].psi == 0) ++j;
    out.dv_at_stop.push_back(std::abs(v0 - rows[j].tcp_speed));

    size_t k = si;
    while (k + 1 < rows.size() && rows[k].psi == 0) ++k;
    out.stop_durations.push_back(rows[k].t - t_stop);
  }

  for (const size_t ri : reduces) {
    if (std::isfinite(rows[ri].d_gt)) out.sep_at_reduce.push_back(rows[ri].d_gt);
    size_t k = ri;
    while (k + 1 < rows.size() && rows[k].psi == 1) ++k;
    out.reduce_durations.push_back(rows[k].t - rows[ri].t);
  }
  return out;
}

inline TrialMetrics compute_trial_metrics(const std::vector<TraceRow>& rows,
                                          const TrialSummary& summary,
                                          const SsmParams& params, double t_no_hri) {
  using metrics_detail::mean_of;
  TrialMetrics m;
  m.approach = summary.approach;
  m.mode = summary.mode;
  m.trial = summary.trial;
  m.completed = summary.completed;
  m.duration = summary.duration;
  m.min_d_gt = summary.min_d_gt;
  m.stop_events = summary.stop_events;
  m.reduce_events = summary.reduce_events;
  m.productivity = (summary.completed && t_no_hri > 0.0)
                       ? productivity(t_no_hri, summary.duration)
                       : std::numeric_limits<double>::quiet_NaN();
  const auto safety = safety_metric(rows);
  m.safety_avg = safety.average;
  m.safety_min = safety.minimum;
  m.safety_floored_ticks = safety.floored_ticks;
  m.rmse = rmse_vs_ground_truth(rows);
  const auto ev = event_metrics(rows, params);
  m.reaction_mean = mean_of(ev.reaction_times);
  m.reaction_count = static_cast<int>(ev.reaction_times.size());
  m.stop_duration_mean = mean_of(ev.stop_durations);
  m.reduce_duration_mean = mean_of(ev.reduce_durations);
  m.dv_stop_mean = mean_of(ev.dv_at_stop);
  m.sep_stop_mean = mean_of(ev.sep_at_stop);
  m.sep_reduce_mean = mean_of(ev.sep_at_reduce);
  return m;
}

struct Aggregate {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
  int n = 0;
};

/// Mean and sample standard deviation over the defined (finite) values.
inline Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    sum += v;
    ++a.n;
  }
  if (a.n == 0) return a;
  a.mean = sum / a.n;
  if (a.n == 1) {
    a.stddev = 0.0;
  } else {
    double ss = 0.0;
    for (double v : values) {
      if (!std::isfinite(v)) continue;
      ss += (v - a.mean) * (v - a.mean);
    }
    a.stddev = std::sqrt(ss / (a.n - 1));
  }
  return a;
}

struct CellReport {
  Approach approach = Approach::ideal;
  SsmMode mode = SsmMode::vo;
  std::vector<TrialMetrics> trials;

  std::vector<double> values_of(double TrialMetrics::* field) const {
    std::vector<double> v;
    v.reserve(trials.size());
    for (const auto& t : trials) v.push_back(t.*field);
    return v;
  }
  Aggregate agg(double TrialMetrics::* field) const { return aggregate(values_of(field)); }
  int completed_count() const {
    int n = 0;
    for (const auto& t : trials) n += t.completed ? 1 : 0;
    return n;
  }
};

struct MatrixReport {
  double t_no_hri = 0.0;
  std::uint64_t seed = 0;
  int trials_per_cell = 0;
  std::vector<CellReport> cells;

  const CellReport* find(Approach a, SsmMode m) const {
    for (const auto& c : cells) {
      if (c.approach == a && c.mode == m) return &c;
    }
    return nullptr;
  }
};

}  // namespace tofssm
