#include <algorithm>
#include <random>

#include "catch_amalgamated.hpp"
#include "tofssm/metrics.hpp"

using namespace tofssm;

namespace {

TraceRow row_at(double t, double d_gt, double tcp_speed = 1.0) {
  TraceRow r;
  r.t = t;
  r.d_gt = d_gt;
  r.tcp_speed = tcp_speed;
  r.d_est = d_gt;
  r.detect = 1;
  return r;
}

SsmParams vo_params() {
  SsmParams p;
  p.mode = SsmMode::vo;
  return p;
}

}  // namespace

TEST_CASE("productivity is the baseline-to-trial time ratio") {
  CHECK(productivity(50.0, 50.0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(productivity(40.0, 50.0) == Catch::Approx(0.8).margin(1e-12));
  CHECK_THROWS_AS(productivity(0.0, 50.0), std::invalid_argument);
  CHECK_THROWS_AS(productivity(50.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(productivity(50.0, -1.0), std::invalid_argument);
}

TEST_CASE("safety metric averages separation squared over tool speed") {
  std::vector<TraceRow> rows;
  rows.push_back(row_at(0.0, 1.0, 1.0));   // 1.0
  rows.push_back(row_at(0.1, 0.7, 2.0));   // 0.245
  rows.push_back(row_at(0.2, 0.7, 1.0));   // 0.49
  const auto s = safety_metric(rows);
  CHECK(s.ticks == 3);
  CHECK(s.average == Catch::Approx((1.0 + 0.245 + 0.49) / 3.0).margin(1e-9));
  CHECK(s.minimum == Catch::Approx(0.245).margin(1e-9));
  CHECK(s.floored_ticks == 0);
}

TEST_CASE("stopped ticks are floored and flagged, not divided by zero") {
  std::vector<TraceRow> rows;
  rows.push_back(row_at(0.0, 0.5, 0.0));  // parked
  const auto s = safety_metric(rows);
  CHECK(s.floored_ticks == 1);
  CHECK(s.average == Catch::Approx(0.25 / kSpeedFloor).margin(1e-6));

  // Rows without a human (nan ground truth) are excluded entirely.
  std::vector<TraceRow> none;
  TraceRow r = row_at(0.0, std::numeric_limits<double>::quiet_NaN());
  none.push_back(r);
  const auto e = safety_metric(none);
  CHECK(e.ticks == 0);
  CHECK(std::isnan(e.average));
}

TEST_CASE("rmse runs over detected ticks only") {
  std::vector<TraceRow> rows;
  auto r0 = row_at(0.0, 1.0);
  r0.d_est = 1.0;
  auto r1 = row_at(0.1, 1.0);
  r1.d_est = 1.1;
  auto r2 = row_at(0.2, 1.0);
  r2.d_est = 5.0;
  r2.detect = 0;  // clear tick: estimator saw nothing, excluded
  rows = {r0, r1, r2};
  CHECK(rmse_vs_ground_truth(rows) == Catch::Approx(std::sqrt(0.01 / 2.0)).margin(1e-9));

  rows[1].d_est = 1.0;
  CHECK(rmse_vs_ground_truth(rows) == Catch::Approx(0.0).margin(1e-12));

  std::vector<TraceRow> empty;
  CHECK(std::isnan(rmse_vs_ground_truth(empty)));
}

TEST_CASE("reaction time is the stop delay past the rest-state threshold") {
  const auto p = vo_params();
  const double d_ref = critical_distance(0.0, 0.0, p);  // 0.665 at rest

  std::vector<TraceRow> rows;
  const double dt = 0.01;
  for (int i = 0; i <= 200; ++i) {
    const double t = i * dt;
    // Separation falls linearly through the threshold at t = 1.0.
    const double d = d_ref + (1.0 - t) * 0.5;
    auto r = row_at(t, d);
    r.psi = 2;
    rows.push_back(r);
  }
  // Stop command fires three ticks after the crossing.
  rows[103].events = "stop";
  for (size_t i = 103; i <= 120; ++i) rows[i].psi = 0;
  for (size_t i = 103; i <= 110; ++i) rows[i].rho = 1.0 - 0.1 * (i - 103);
  for (size_t i = 111; i <= 200; ++i) rows[i].rho = 0.0;
  for (size_t i = 103; i <= 200; ++i) rows[i].tcp_speed = std::max(0.0, 1.0 - 0.2 * (i - 103.0));

  const auto ev = event_metrics(rows, p);
  REQUIRE(ev.reaction_times.size() == 1);
  // Crossing detected at the first row strictly below the threshold: t=1.01.
  CHECK(ev.reaction_times[0] == Catch::Approx(1.03 - 1.01).margin(1e-9));
  REQUIRE(ev.sep_at_stop.size() == 1);
  CHECK(ev.sep_at_stop[0] == Catch::Approx(rows[103].d_gt).margin(1e-12));
  REQUIRE(ev.stop_durations.size() == 1);
  // Duration runs to the first row where the fused state has left stop.
  CHECK(ev.stop_durations[0] == Catch::Approx(rows[121].t - rows[103].t).margin(1e-9));
}

TEST_CASE("a stop before the crossing scores a negative reaction time") {
  const auto p = vo_params();
  const double d_ref = critical_distance(0.0, 0.0, p);
  std::vector<TraceRow> rows;
  for (int i = 0; i <= 100; ++i) {
    const double t = i * 0.01;
    auto r = row_at(t, d_ref + (0.5 - t));  // crosses at t = 0.5
    rows.push_back(r);
  }
  rows[40].events = "stop";  // anticipated by 0.11 s
  const auto ev = event_metrics(rows, p);
  REQUIRE(ev.reaction_times.size() == 1);
  CHECK(ev.reaction_times[0] < 0.0);
  CHECK(ev.reaction_times[0] == Catch::Approx(0.40 - 0.51).margin(1e-9));
}

TEST_CASE("stops without any crossing yield no reaction sample") {
  const auto p = vo_params();
  std::vector<TraceRow> rows;
  for (int i = 0; i < 50; ++i) rows.push_back(row_at(i * 0.01, 3.0));
  rows[10].events = "stop";
  const auto ev = event_metrics(rows, p);
  CHECK(ev.reaction_times.empty());
  CHECK(ev.sep_at_stop.size() == 1);
}

TEST_CASE("speed drop at stop is measured once the override has ramped out") {
  const auto p = vo_params();
  std::vector<TraceRow> rows;
  for (int i = 0; i <= 60; ++i) {
    auto r = row_at(i * 0.01, 2.0, 1.5);
    rows.push_back(r);
  }
  rows[20].events = "stop";
  for (int i = 20; i <= 60; ++i) rows[i].psi = 0;
  // Override ramps from 1 to 0 over ten ticks; speed follows.
  for (int i = 20; i <= 30; ++i) {
    rows[i].rho = 1.0 - 0.1 * (i - 20);
    rows[i].tcp_speed = 1.5 * rows[i].rho;
  }
  for (int i = 31; i <= 60; ++i) {
    rows[i].rho = 0.0;
    rows[i].tcp_speed = 0.0;
  }
  const auto ev = event_metrics(rows, p);
  REQUIRE(ev.dv_at_stop.size() == 1);
  CHECK(ev.dv_at_stop[0] == Catch::Approx(1.5).margin(1e-9));
}

TEST_CASE("reduce durations last while the fused state stays reduced") {
  const auto p = vo_params();
  std::vector<TraceRow> rows;
  for (int i = 0; i <= 100; ++i) {
    auto r = row_at(i * 0.01, 2.0);
    r.psi = 2;
    rows.push_back(r);
  }
  rows[30].events = "reduce";
  for (int i = 30; i < 55; ++i) rows[i].psi = 1;
  const auto ev = event_metrics(rows, p);
  REQUIRE(ev.reduce_durations.size() == 1);
  CHECK(ev.reduce_durations[0] == Catch::Approx(rows[55].t - rows[30].t).margin(1e-9));
  REQUIRE(ev.sep_at_reduce.size() == 1);
  CHECK(ev.sep_at_reduce[0] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("fixed-threshold cells reference the static critical distance") {
  SsmParams p;
  p.mode = SsmMode::sm;
  std::vector<TraceRow> rows;
  for (int i = 0; i <= 100; ++i) {
    // Crosses fixed_dC = 0.5 at t = 0.5, never crosses the velocity form.
    rows.push_back(row_at(i * 0.01, 0.5 + (0.5 - i * 0.01) * 0.2));
  }
  rows[55].events = "stop";
  const auto ev = event_metrics(rows, p);
  REQUIRE(ev.reaction_times.size() == 1);
  CHECK(ev.reaction_times[0] == Catch::Approx(0.55 - 0.51).margin(1e-9));
}

TEST_CASE("event tags are matched exactly within the semicolon list") {
  using metrics_detail::has_event;
  CHECK(has_event("stop", "stop"));
  CHECK(has_event("pick;stop", "stop"));
  CHECK(has_event("stop;resume", "stop"));
  CHECK_FALSE(has_event("stopgap", "stop"));
  CHECK_FALSE(has_event("pick;stopgap", "stop"));
  CHECK_FALSE(has_event("", "stop"));
  CHECK(has_event("reduce;stop;place", "place"));
}

TEST_CASE("aggregate skips undefined values and uses the sample deviation") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto a = aggregate({1.0, 2.0, 3.0, nan});
  CHECK(a.n == 3);
  CHECK(a.mean == Catch::Approx(2.0).margin(1e-12));
  CHECK(a.stddev == Catch::Approx(1.0).margin(1e-12));

  const auto single = aggregate({5.0, nan});
  CHECK(single.n == 1);
  CHECK(single.stddev == 0.0);

  const auto none = aggregate({nan, nan});
  CHECK(none.n == 0);
  CHECK(std::isnan(none.mean));

  // Permutation invariance.
  std::vector<double> v{0.3, 1.7, 0.9, 2.4, 1.1};
  auto w = v;
  std::mt19937_64 rng(2);
  std::shuffle(w.begin(), w.end(), rng);
  const auto av = aggregate(v);
  const auto aw = aggregate(w);
  CHECK(av.mean == Catch::Approx(aw.mean).margin(1e-12));
  CHECK(av.stddev == Catch::Approx(aw.stddev).margin(1e-12));
}

TEST_CASE("trial metrics roll events, safety and productivity together") {
  const auto p = vo_params();
  std::vector<TraceRow> rows;
  for (int i = 0; i <= 100; ++i) rows.push_back(row_at(i * 0.01, 2.0, 1.0));

  TrialSummary summary;
  summary.approach = Approach::ideal;
  summary.mode = SsmMode::vo;
  summary.trial = 3;
  summary.completed = true;
  summary.duration = 62.5;
  summary.stop_events = 0;
  summary.reduce_events = 0;
  summary.min_d_gt = 2.0;

  const auto m = compute_trial_metrics(rows, summary, p, 50.0);
  CHECK(m.productivity == Catch::Approx(0.8).margin(1e-12));
  CHECK(m.safety_avg == Catch::Approx(4.0).margin(1e-9));
  CHECK(m.rmse == Catch::Approx(0.0).margin(1e-12));
  CHECK(std::isnan(m.reaction_mean));
  CHECK(m.reaction_count == 0);
  CHECK(std::isnan(m.dv_stop_mean));

  // Incomplete trials have undefined productivity.
  summary.completed = false;
  const auto mi = compute_trial_metrics(rows, summary, p, 50.0);
  CHECK(std::isnan(mi.productivity));
}

TEST_CASE("cell reports aggregate a chosen field across trials") {
  CellReport cell;
  cell.approach = Approach::real;
  cell.mode = SsmMode::vr;
  for (int k = 0; k < 3; ++k) {
    TrialMetrics t;
    t.trial = k;
    t.completed = k != 1;
    t.productivity = k == 1 ? std::numeric_limits<double>::quiet_NaN() : 0.8 + 0.1 * k;
    cell.trials.push_back(t);
  }
  CHECK(cell.completed_count() == 2);
  const auto a = cell.agg(&TrialMetrics::productivity);
  CHECK(a.n == 2);
  CHECK(a.mean == Catch::Approx((0.8 + 1.0) / 2.0).margin(1e-12));

  MatrixReport rep;
  rep.cells.push_back(cell);
  REQUIRE(rep.find(Approach::real, SsmMode::vr) != nullptr);
  CHECK(rep.find(Approach::ideal, SsmMode::vo) == nullptr);
}
