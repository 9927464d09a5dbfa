// mg1lab: simulate M/G/1 scheduling policies and check the closed-form
// performance bounds that come with the truncation policies.
//
// Exit codes: 0 success, 1 bad configuration or usage, 2 a checked bound
// failed, 3 the simulation hit its event cap (divergence guard).

#include <cinttypes>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mg1/bounds.hpp"
#include "mg1/config.hpp"
#include "mg1/estimators.hpp"
#include "mg1/experiments.hpp"
#include "mg1/simulator.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  mg1::ExperimentConfig cfg;

  CLI::Option* lambda = nullptr;
  CLI::Option* dist = nullptr;
  CLI::Option* policy = nullptr;
  CLI::Option* reference = nullptr;
  CLI::Option* s = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* confidence = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* threads = nullptr;

  double lambda_v = 0;
  std::string dist_v, policy_v, reference_v, out_v;
  std::vector<double> s_v;
  std::uint64_t n_v = 0, seed_v = 0;
  double confidence_v = 0;
  int threads_v = 0;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file");
    lambda = app->add_option("--lambda", lambda_v, "arrival rate");
    dist = app->add_option("--dist", dist_v,
                           "service law, e.g. pareto:alpha=3 or exp:rate=1");
    policy = app->add_option("--policy", policy_v,
                             "policy spec, e.g. po-lcfs(lcfs,s=1)");
    reference = app->add_option("--reference", reference_v,
                                "reference policy for gap sweeps");
    s = app->add_option("--s", s_v, "truncation levels (repeatable)");
    n = app->add_option("--n", n_v, "busy periods per run");
    seed = app->add_option("--seed", seed_v, "master seed");
    confidence = app->add_option("--confidence", confidence_v,
                                 "CI confidence level");
    out = app->add_option("--out", out_v, "output directory for CSV files");
    threads = app->add_option("--threads", threads_v, "worker threads");
  }

  // JSON file first, explicit flags on top.
  mg1::ExperimentConfig resolve() {
    mg1::ExperimentConfig c;
    if (!config_path.empty())
      c = mg1::ExperimentConfig::from_json_file(config_path);
    if (lambda->count()) c.lambda = lambda_v;
    if (dist->count()) c.dist = dist_v;
    if (policy->count()) c.policy = policy_v;
    if (reference->count()) c.reference = reference_v;
    if (s->count()) c.s_list = s_v;
    if (n->count()) c.n_periods = n_v;
    if (seed->count()) c.seed = seed_v;
    if (confidence->count()) c.confidence = confidence_v;
    if (out->count()) c.out_dir = out_v;
    if (threads->count()) c.threads = threads_v;
    return c;
  }
};

void print_estimate(const char* name, const mg1::Estimate& e,
                    const char* note = "") {
  std::printf("  %-22s %14.6g  +/- %-12.4g %s\n", name, e.mean, e.ci_half,
              note);
}

int cmd_simulate(CommonOpts& co, std::uint64_t trace_events,
                 std::uint64_t max_events) {
  auto cfg = co.resolve();
  cfg.validate();
  const auto& d = *cfg.dist_parsed;
  auto pol = mg1::make_policy(*cfg.policy_parsed, d);
  mg1::SimOptions sim_opts;
  if (max_events > 0) sim_opts.max_events = max_events;

  if (trace_events > 0) {
    std::vector<mg1::TraceEvent> trace;
    mg1::SimOptions opts = sim_opts;
    opts.trace = &trace;
    auto rng = mg1::Rng::substream(cfg.seed, 0);
    mg1::run_busy_period(cfg.lambda, d, *pol, rng, opts);
    static const char* kind_names[] = {"arrival", "completion", "mark",
                                       "switch"};
    std::printf("first busy period, %zu events:\n", trace.size());
    std::uint64_t shown = 0;
    for (const auto& ev : trace) {
      if (shown++ == trace_events) break;
      std::printf("  t=%-12.6g %-10s job=%-4" PRIu64 " attained=%.6g\n",
                  ev.t, kind_names[static_cast<int>(ev.kind)], ev.job_id,
                  ev.attained);
    }
    return 0;
  }

  auto rs = mg1::run_batch(cfg.lambda, d, *pol, cfg.n_periods, cfg.seed,
                           sim_opts, static_cast<unsigned>(cfg.threads));
  const auto params = mg1::BoundParams::from(cfg.lambda, d);
  const bool heavy = !std::isfinite(params.EX2);

  std::printf("%s under %s, lambda=%g, %" PRIu64 " busy periods\n",
              d.spec_string().c_str(), pol->name().c_str(), cfg.lambda,
              cfg.n_periods);
  if (heavy)
    std::printf("  (infinite service variance: intervals are indicative "
                "only)\n");

  auto w = mg1::regen_mean(rs, [](const mg1::BusyPeriodRecord& r) {
    return r.W;
  }, cfg.confidence);
  auto nb = mg1::regen_mean(rs, [](const mg1::BusyPeriodRecord& r) {
    return static_cast<double>(r.N_B);
  }, cfg.confidence);
  auto v = mg1::ratio_mean(
      rs, [](const mg1::BusyPeriodRecord& r) { return r.sum_sojourn; },
      [](const mg1::BusyPeriodRecord& r) {
        return static_cast<double>(r.N_B);
      },
      cfg.confidence);
  print_estimate("E[W] per period", w);
  print_estimate("E[N_B] per period", nb);
  print_estimate("mean sojourn per job", v);
  std::printf("  %-22s %14.6g\n", "exact E[W]", mg1::mean_busy_work(params));
  std::printf("  %-22s %14.6g\n", "exact E[N_B]", mg1::mean_busy_jobs(params));
  if (!heavy)
    std::printf("  %-22s %14.6g\n", "FCFS sojourn (exact)",
                mg1::pk_mean_sojourn(params));

  if (cfg.policy_parsed->has_threshold()) {
    auto pac = mg1::regen_mean(rs, [](const mg1::BusyPeriodRecord& r) {
      return r.event_A ? 0.0 : 1.0;
    }, cfg.confidence);
    print_estimate("P(big job in period)", pac);
    if (cfg.policy_parsed->kind == mg1::PolicySpec::Kind::PoLcfs) {
      auto r_of = [](const mg1::BusyPeriodRecord& r) { return r.R; };
      if (heavy) {
        std::printf("  %-22s %14.6g  (batch-means median)\n",
                    "residual cost E[R]",
                    mg1::batch_means_median(rs, r_of));
      } else {
        print_estimate("residual cost E[R]",
                       mg1::regen_mean(rs, r_of, cfg.confidence));
      }
    }
    if (cfg.policy_parsed->kind == mg1::PolicySpec::Kind::TruncSwitch) {
      auto sw = mg1::regen_mean(rs, [](const mg1::BusyPeriodRecord& r) {
        return r.switched ? 1.0 : 0.0;
      }, cfg.confidence);
      print_estimate("P(switched)", sw);
    }
  }
  return 0;
}

int cmd_validate(CommonOpts& co) {
  auto rep = mg1::run_validate(co.resolve());
  std::printf("%-6s %-22s %14s %12s %14s  %s\n", "s", "quantity", "estimate",
              "ci_half", "bound", "verdict");
  for (const auto& r : rep.rows)
    std::printf("%-6g %-22s %14.6g %12.4g %14.6g  %s\n", r.s,
                r.quantity.c_str(), r.estimate, r.ci_half, r.bound,
                r.verdict.c_str());
  std::printf("report: %s\n", rep.csv_path.string().c_str());
  return rep.all_pass ? 0 : 2;
}

int cmd_sweep(CommonOpts& co) {
  auto rep = mg1::run_sweep(co.resolve());
  for (const auto& r : rep.gap)
    std::printf("s=%-8g gap=%12.6g +/-%-10.4g g=%12.6g  %s\n", r.s, r.gap,
                r.gap_ci, r.g_formula, r.verdict.c_str());
  for (const auto& r : rep.residual)
    std::printf("s=%-8g R=%12.6g bound=%12.6g condition=%10.4g  %s\n", r.s,
                r.r_hat, r.er_ub, r.condition, r.verdict.c_str());
  std::printf("report: %s\n", rep.csv_path.string().c_str());
  return rep.all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M/G/1 truncation-policy laboratory"};
  app.require_subcommand(1);

  CommonOpts co_sim, co_val, co_sweep, co_bounds, co_git;
  std::uint64_t trace_events = 0;
  std::uint64_t max_events = 0;

  auto* sim = app.add_subcommand("simulate",
                                 "run one policy and print estimates");
  co_sim.attach(sim);
  sim->add_option("--trace", trace_events,
                  "print up to N events of the first busy period");
  sim->add_option("--max-events", max_events,
                  "abort any period that exceeds this many events");

  auto* val = app.add_subcommand(
      "validate", "check per-period bounds against simulation");
  co_val.attach(val);

  auto* sweep = app.add_subcommand(
      "sweep", "sweep truncation levels: gap or residual study");
  co_sweep.attach(sweep);

  auto* bounds = app.add_subcommand("bounds",
                                    "tabulate closed-form bounds only");
  co_bounds.attach(bounds);

  auto* git = app.add_subcommand("gittins-table",
                                 "tabulate the index over attained service");
  co_git.attach(git);
  std::optional<double> git_s;
  git->add_option("--trunc-s", git_s,
                  "condition the law below this level first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return cmd_simulate(co_sim, trace_events, max_events);
    if (val->parsed()) return cmd_validate(co_val);
    if (sweep->parsed()) return cmd_sweep(co_sweep);
    if (bounds->parsed()) {
      auto path = mg1::write_bounds_csv(co_bounds.resolve());
      std::printf("wrote %s\n", path.string().c_str());
      return 0;
    }
    if (git->parsed()) {
      auto path = mg1::write_gittins_csv(co_git.resolve(), git_s);
      std::printf("wrote %s\n", path.string().c_str());
      return 0;
    }
  } catch (const mg1::DivergenceGuard& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
