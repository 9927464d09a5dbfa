#pragma once

// Regenerative busy-period simulator for the preemptive M/G/1 queue.
//
// Each busy period is simulated from its own (seed, index) substream: an
// arrival into an empty system at t=0, Poisson arrivals while the server
// drains, until the system empties again.  Decision points are arrivals,
// completions and attained-service marks; between decision points the
// chosen job is served exclusively.  Sizes are drawn up front per job but
// revealed to the policy only via remaining-size spans when it opts in.

#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mg1/distribution.hpp"
#include "mg1/policy.hpp"
#include "mg1/rng.hpp"

namespace mg1 {

struct BusyPeriodRecord {
  // Total work = sum of drawn sizes.  For any work-conserving policy this
  // equals the busy-period length; summing sizes in arrival order makes the
  // value bit-identical across policies on a shared arrival stream.
  double W = 0;
  double end_time = 0;     // simulated drain instant (fp-accumulated)
  std::uint64_t N_B = 0;   // jobs served
  double sum_sojourn = 0;  // sum of completion - arrival over all jobs
  double sum_trunc = 0;    // truncated sojourns: arrival->mark for jobs
                           // larger than the mark, full sojourn otherwise
  double R = 0;            // residual sub-job sojourns: mark->completion
  std::uint64_t M = 0;     // demoted jobs when low priority first served
  double L = 0;            // time until low priority first served
  bool event_A = true;     // all sizes in the period < mark
  bool switched = false;   // trunc-switch discovery happened
};

struct TraceEvent {
  enum class Kind { Arrival, Completion, Mark, Switch };
  double t = 0;
  Kind kind = Kind::Arrival;
  std::uint64_t job_id = 0;
  double attained = 0;
};

struct SimOptions {
  std::uint64_t max_events = 100000000;  // divergence guard per period
  // Attainment mark used for event_A / R / sum_trunc accounting when the
  // policy itself has no threshold.
  double s_mark = kInf;
  std::vector<TraceEvent>* trace = nullptr;
};

// Thrown when a single busy period exceeds the event cap: in practice an
// unstable configuration (rho >= 1) or an idling policy with no arrivals.
struct DivergenceGuard : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct SimJob {
  double arrival = 0;
  double size = 0;
  double attained = 0;
  double demote_time = -1;
  bool demoted = false;
  bool reached_mark = false;
};

}  // namespace detail

inline BusyPeriodRecord run_busy_period(double lambda,
                                        const ServiceDistribution& dist,
                                        Policy& policy, Rng& rng,
                                        const SimOptions& opts = {}) {
  BusyPeriodRecord rec;
  const double mark = policy.attained_threshold().value_or(opts.s_mark);

  std::vector<detail::SimJob> jobs;
  std::vector<std::uint32_t> active;  // arrival-ordered indices
  std::vector<JobView> views;
  std::vector<double> remaining;

  auto admit = [&](double t) {
    detail::SimJob j;
    j.arrival = t;
    j.size = dist.sample(rng);
    rec.W += j.size;
    if (!(j.size < mark)) rec.event_A = false;
    active.push_back(static_cast<std::uint32_t>(jobs.size()));
    jobs.push_back(j);
    if (opts.trace)
      opts.trace->push_back({t, TraceEvent::Kind::Arrival,
                             jobs.size() - 1, 0.0});
  };

  policy.on_period_start();
  double t = 0;
  admit(0.0);
  double next_arrival = lambda > 0 ? rng.exp_time(lambda) : kInf;

  bool low_served = false;
  std::uint64_t events = 0;

  while (!active.empty()) {
    if (++events > opts.max_events)
      throw DivergenceGuard("busy period exceeded the event cap (" +
                            std::to_string(opts.max_events) + " events)");

    views.clear();
    for (auto idx : active) {
      const auto& j = jobs[idx];
      views.push_back({idx, j.arrival, j.attained, j.demoted, j.demote_time});
    }
    const bool sized = policy.uses_sizes();
    if (sized) {
      remaining.clear();
      for (auto idx : active)
        remaining.push_back(jobs[idx].size - jobs[idx].attained);
    }
    const auto choice =
        policy.pick(views, sized ? std::span<const double>(remaining)
                                 : std::span<const double>());

    if (!choice) {  // idling policy (test doubles only)
      if (std::isinf(next_arrival))
        throw DivergenceGuard("policy idles with no pending arrival");
      t = next_arrival;
      admit(t);
      next_arrival = t + rng.exp_time(lambda);
      continue;
    }
    if (*choice >= active.size())
      throw std::logic_error("policy picked an out-of-range job");

    detail::SimJob& job = jobs[active[*choice]];
    const std::uint64_t job_id = active[*choice];

    if (job.demoted && !low_served) {
      low_served = true;
      rec.L = t;
      for (const auto& j : jobs)
        if (j.demoted) ++rec.M;
    }

    const double dt_done = job.size - job.attained;
    const double dt_mark = (job.size > mark && job.attained < mark)
                               ? mark - job.attained
                               : kInf;
    const double dt_arrival = next_arrival - t;

    if (dt_done <= dt_mark && dt_done <= dt_arrival) {
      // completion
      t += dt_done;
      job.attained = job.size;
      rec.N_B += 1;
      rec.sum_sojourn += t - job.arrival;
      if (job.reached_mark)
        rec.R += t - job.demote_time;  // demote_time == mark instant
      else
        rec.sum_trunc += t - job.arrival;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(*choice));
      if (opts.trace)
        opts.trace->push_back(
            {t, TraceEvent::Kind::Completion, job_id, job.attained});
    } else if (dt_mark <= dt_arrival) {
      // attained service reaches the mark
      t += dt_mark;
      job.attained = mark;
      job.reached_mark = true;
      job.demote_time = t;
      job.demoted = policy.demotes_at_threshold();
      rec.sum_trunc += t - job.arrival;
      const bool was_switched = policy.switched();
      policy.on_threshold(
          {job_id, job.arrival, job.attained, job.demoted, job.demote_time},
          t);
      if (opts.trace) {
        const auto kind = (!was_switched && policy.switched())
                              ? TraceEvent::Kind::Switch
                              : TraceEvent::Kind::Mark;
        opts.trace->push_back({t, kind, job_id, job.attained});
      }
    } else {
      // arrival
      const double dt = dt_arrival;
      job.attained += dt;
      t = next_arrival;
      admit(t);
      next_arrival = t + rng.exp_time(lambda);
    }
  }

  rec.end_time = t;
  rec.switched = policy.switched();
  if (!low_served) rec.L = rec.end_time;
  return rec;
}

// Runs periods k = 0..n-1 from substreams (seed, k).  Results do not depend
// on the number of workers: each worker owns a policy clone and a chunk of
// the index range.
inline std::vector<BusyPeriodRecord> run_batch(
    double lambda, const ServiceDistribution& dist, const Policy& proto,
    std::uint64_t n_periods, std::uint64_t seed, const SimOptions& opts = {},
    unsigned n_threads = 1) {
  if (n_periods == 0)
    throw std::invalid_argument("run_batch: n_periods must be >= 1");
  std::vector<BusyPeriodRecord> out(n_periods);
  if (opts.trace && n_threads > 1)
    throw std::invalid_argument("run_batch: tracing requires a single worker");

  auto work = [&](std::uint64_t lo, std::uint64_t hi) {
    auto policy = proto.clone();
    for (std::uint64_t k = lo; k < hi; ++k) {
      Rng rng = Rng::substream(seed, k);
      out[k] = run_busy_period(lambda, dist, *policy, rng, opts);
    }
  };

  if (n_threads <= 1) {
    work(0, n_periods);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (unsigned w = 0; w < n_threads; ++w) {
    const std::uint64_t lo = n_periods * w / n_threads;
    const std::uint64_t hi = n_periods * (w + 1) / n_threads;
    pool.emplace_back([&, lo, hi] {
      try {
        work(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

struct InvarianceReport {
  bool pass = true;
  std::string detail;  // first divergence, if any
};

// Work-conservation check: on shared arrival streams every work-conserving
// policy must produce bit-identical (W, N_B) and drain at W up to roundoff.
inline InvarianceReport verify_workload_invariance(
    double lambda, const ServiceDistribution& dist,
    const std::vector<const Policy*>& policies, std::uint64_t n_periods,
    std::uint64_t seed, const SimOptions& opts = {}) {
  InvarianceReport rep;
  if (policies.empty()) return rep;
  std::vector<std::vector<BusyPeriodRecord>> runs;
  for (const Policy* p : policies)
    runs.push_back(run_batch(lambda, dist, *p, n_periods, seed, opts));
  for (std::uint64_t k = 0; k < n_periods; ++k) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto& r = runs[i][k];
      const double tol = 1e-9 * std::max(1.0, r.W);
      if (std::abs(r.end_time - r.W) > tol) {
        rep.pass = false;
        rep.detail = policies[i]->name() + " does not conserve work in period " +
                     std::to_string(k);
        return rep;
      }
      if (i > 0 && (r.W != runs[0][k].W || r.N_B != runs[0][k].N_B)) {
        rep.pass = false;
        rep.detail = "(W, N_B) diverges between " + policies[0]->name() +
                     " and " + policies[i]->name() + " in period " +
                     std::to_string(k);
        return rep;
      }
    }
  }
  return rep;
}

}  // namespace mg1
