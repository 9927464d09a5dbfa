#pragma once

// Scheduling policies.  The simulator asks the policy which live job to
// serve at every decision point (arrival / completion / attained-service
// mark).  Policies are size-blind unless they opt in via uses_sizes();
// size-blind ones only ever see JobView.
//
// Tie-breaking convention: the job list handed to pick() is in arrival
// order, and every argmin/argmax below uses strict improvement, so ties go
// to the earliest arrival.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mg1/distribution.hpp"
#include "mg1/gittins.hpp"

namespace mg1 {

struct JobView {
  std::uint64_t id = 0;
  double arrival = 0;
  double attained = 0;
  bool demoted = false;
  double demote_time = -1;  // valid only when demoted
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;

  virtual void on_period_start() {}

  // Attained level at which the simulator must create a decision point for
  // jobs larger than it (demotion / switch triggers).
  virtual std::optional<double> attained_threshold() const {
    return std::nullopt;
  }
  virtual bool demotes_at_threshold() const { return false; }
  virtual void on_threshold(const JobView&, double /*now*/) {}
  virtual bool switched() const { return false; }

  virtual bool uses_sizes() const { return false; }

  // Choose the index (into `jobs`) of the job to serve.  `remaining` holds
  // remaining sizes and is populated only for size-aware policies.
  // Returning nullopt means "idle"; no real policy idles, the escape hatch
  // exists so tests can probe the work-conservation checker.
  virtual std::optional<std::size_t> pick(
      std::span<const JobView> jobs, std::span<const double> remaining) = 0;
};

// --- elementary policies -----------------------------------------------

class FcfsPolicy final : public Policy {
 public:
  std::string name() const override { return "fcfs"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<FcfsPolicy>(*this);
  }
  std::optional<std::size_t> pick(std::span<const JobView> jobs,
                                  std::span<const double>) override {
    return jobs.empty() ? std::nullopt : std::optional<std::size_t>(0);
  }
};

class LcfsPreemptPolicy final : public Policy {
 public:
  std::string name() const override { return "lcfs-preempt"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<LcfsPreemptPolicy>(*this);
  }
  std::optional<std::size_t> pick(std::span<const JobView> jobs,
                                  std::span<const double>) override {
    if (jobs.empty()) return std::nullopt;
    return jobs.size() - 1;
  }
};

// Foreground-background / least-attained-service.
class FbPolicy final : public Policy {
 public:
  std::string name() const override { return "fb"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<FbPolicy>(*this);
  }
  std::optional<std::size_t> pick(std::span<const JobView> jobs,
                                  std::span<const double>) override {
    if (jobs.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < jobs.size(); ++i)
      if (jobs[i].attained < jobs[best].attained) best = i;
    return best;
  }
};

class SrptPolicy final : public Policy {
 public:
  std::string name() const override { return "srpt"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<SrptPolicy>(*this);
  }
  bool uses_sizes() const override { return true; }
  std::optional<std::size_t> pick(std::span<const JobView> jobs,
                                  std::span<const double> remaining) override {
    if (jobs.empty()) return std::nullopt;
    if (remaining.size() != jobs.size())
      throw std::logic_error("srpt: remaining sizes not supplied");
    std::size_t best = 0;
    for (std::size_t i = 1; i < remaining.size(); ++i)
      if (remaining[i] < remaining[best]) best = i;
    return best;
  }
};

class GittinsPolicy final : public Policy {
 public:
  explicit GittinsPolicy(std::shared_ptr<const GittinsTable> table)
      : table_(std::move(table)) {
    if (!table_) throw std::invalid_argument("gittins: null table");
  }
  std::string name() const override { return "gittins"; }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<GittinsPolicy>(*this);
  }
  std::optional<std::size_t> pick(std::span<const JobView> jobs,
                                  std::span<const double>) override {
    if (jobs.empty()) return std::nullopt;
    std::size_t best = 0;
    double best_g = (*table_)(jobs[0].attained);
    for (std::size_t i = 1; i < jobs.size(); ++i) {
      const double g = (*table_)(jobs[i].attained);
      if (g > best_g) {
        best = i;
        best_g = g;
      }
    }
    return best;
  }
  const GittinsTable& table() const { return *table_; }

 private:
  std::shared_ptr<const GittinsTable> table_;
};

namespace detail {

inline void check_composable(const Policy& inner, const char* outer) {
  if (inner.uses_sizes())
    throw std::invalid_argument(std::string(outer) +
                                ": size-aware inner policy not supported");
  if (inner.attained_threshold())
    throw std::invalid_argument(std::string(outer) +
                                ": nested threshold policies not supported");
}

}  // namespace detail

// Two priority classes split at attained service s.  Jobs start high and
// are demoted the instant their attained service reaches s.  High-priority
// jobs are scheduled by the inner policy (which therefore lives in the
// type-A truncated world: a demotion looks like a completion to it).  The
// low-priority queue is only touched when no high-priority job exists and
// is served preemptive-LCFS by demotion instant.
class PoLcfsPolicy final : public Policy {
 public:
  PoLcfsPolicy(std::unique_ptr<Policy> inner, double s)
      : inner_(std::move(inner)), s_(s) {
    if (!inner_) throw std::invalid_argument("po-lcfs: null inner policy");
    if (!(s_ > 0)) throw std::invalid_argument("po-lcfs: s must be > 0");
    detail::check_composable(*inner_, "po-lcfs");
  }
  PoLcfsPolicy(const PoLcfsPolicy& o) : inner_(o.inner_->clone()), s_(o.s_) {}

  std::string name() const override {
    return "po-lcfs(" + inner_->name() + ")";
  }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<PoLcfsPolicy>(*this);
  }
  void on_period_start() override { inner_->on_period_start(); }
  std::optional<double> attained_threshold() const override { return s_; }
  bool demotes_at_threshold() const override { return true; }

  std::optional<std::size_t> pick(std::span<const JobView> jobs,
                                  std::span<const double>) override {
    if (jobs.empty()) return std::nullopt;
    high_.clear();
    map_.clear();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (!jobs[i].demoted) {
        high_.push_back(jobs[i]);
        map_.push_back(i);
      }
    }
    if (!high_.empty()) {
      auto inner_pick = inner_->pick(high_, {});
      if (!inner_pick) return std::nullopt;
      return map_[*inner_pick];
    }
    // only demoted jobs: serve the most recently demoted
    std::size_t best = 0;
    for (std::size_t i = 1; i < jobs.size(); ++i)
      if (jobs[i].demote_time > jobs[best].demote_time) best = i;
    return best;
  }

 private:
  std::unique_ptr<Policy> inner_;
  double s_;
  std::vector<JobView> high_;
  std::vector<std::size_t> map_;
};

// Gittins for the type-B truncated law until the first job attains s
// ("discovery"), then an arbitrary work-conserving fallback for the rest of
// the busy period.
class TruncSwitchPolicy final : public Policy {
 public:
  TruncSwitchPolicy(std::shared_ptr<const GittinsTable> table,
                    std::unique_ptr<Policy> fallback, double s)
      : table_(std::move(table)), fallback_(std::move(fallback)), s_(s) {
    if (!table_) throw std::invalid_argument("trunc-switch: null table");
    if (!fallback_)
      throw std::invalid_argument("trunc-switch: null fallback policy");
    if (!(s_ > 0)) throw std::invalid_argument("trunc-switch: s must be > 0");
    detail::check_composable(*fallback_, "trunc-switch");
  }
  TruncSwitchPolicy(const TruncSwitchPolicy& o)
      : table_(o.table_),
        fallback_(o.fallback_->clone()),
        s_(o.s_),
        switched_(o.switched_) {}

  std::string name() const override {
    return "trunc-switch(" + fallback_->name() + ")";
  }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<TruncSwitchPolicy>(*this);
  }
  void on_period_start() override {
    switched_ = false;
    fallback_->on_period_start();
  }
  std::optional<double> attained_threshold() const override { return s_; }
  void on_threshold(const JobView&, double) override { switched_ = true; }
  bool switched() const override { return switched_; }

  std::optional<std::size_t> pick(std::span<const JobView> jobs,
                                  std::span<const double> remaining) override {
    if (jobs.empty()) return std::nullopt;
    if (switched_) return fallback_->pick(jobs, remaining);
    std::size_t best = 0;
    double best_g = (*table_)(jobs[0].attained);
    for (std::size_t i = 1; i < jobs.size(); ++i) {
      const double g = (*table_)(jobs[i].attained);
      if (g > best_g) {
        best = i;
        best_g = g;
      }
    }
    return best;
  }

 private:
  std::shared_ptr<const GittinsTable> table_;
  std::unique_ptr<Policy> fallback_;
  double s_;
  bool switched_ = false;
};

// --- policy specs ---------------------------------------------------------

// Grammar: fcfs | lcfs-preempt | fb | srpt | gittins
//          | po-lcfs(<inner>,s=NUM) | trunc-switch(<fallback>,s=NUM)
// The s parameter may be omitted when a sweep supplies it later.
struct PolicySpec {
  enum class Kind { Fcfs, LcfsPreempt, Fb, Srpt, Gittins, PoLcfs, TruncSwitch };

  Kind kind = Kind::Fcfs;
  double s = 0;  // 0 = not set
  std::shared_ptr<const PolicySpec> inner;  // po-lcfs inner / switch fallback

  bool has_threshold() const {
    return kind == Kind::PoLcfs || kind == Kind::TruncSwitch;
  }

  PolicySpec with_s(double new_s) const {
    PolicySpec p = *this;
    p.s = new_s;
    return p;
  }

  static PolicySpec parse(std::string_view text);
  std::string to_string() const;
};

inline PolicySpec PolicySpec::parse(std::string_view text) {
  std::string flat;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) flat.push_back(c);
  std::string_view sv = flat;
  auto fail = [&](const char* why) {
    throw std::invalid_argument("bad policy spec '" + std::string(text) +
                                "': " + why);
  };

  PolicySpec p;
  if (sv == "fcfs") {
    p.kind = Kind::Fcfs;
  } else if (sv == "lcfs-preempt" || sv == "lcfs") {
    p.kind = Kind::LcfsPreempt;
  } else if (sv == "fb") {
    p.kind = Kind::Fb;
  } else if (sv == "srpt") {
    p.kind = Kind::Srpt;
  } else if (sv == "gittins") {
    p.kind = Kind::Gittins;
  } else if (sv.starts_with("po-lcfs(") || sv.starts_with("trunc-switch(")) {
    const bool po = sv.starts_with("po-lcfs(");
    p.kind = po ? Kind::PoLcfs : Kind::TruncSwitch;
    const std::size_t open = sv.find('(');
    if (!sv.ends_with(")")) fail("missing ')'");
    std::string_view body = sv.substr(open + 1, sv.size() - open - 2);
    auto spos = body.rfind(",s=");
    std::string_view inner_text = body;
    if (spos != std::string_view::npos) {
      p.s = detail::parse_num(body.substr(spos + 3), "s");
      if (!(p.s > 0)) fail("s must be > 0");
      inner_text = body.substr(0, spos);
    }
    if (inner_text.empty()) fail("missing inner policy");
    p.inner = std::make_shared<const PolicySpec>(parse(inner_text));
    if (p.inner->has_threshold()) fail("nested threshold policies");
  } else {
    fail("unknown policy");
  }
  return p;
}

inline std::string PolicySpec::to_string() const {
  switch (kind) {
    case Kind::Fcfs: return "fcfs";
    case Kind::LcfsPreempt: return "lcfs-preempt";
    case Kind::Fb: return "fb";
    case Kind::Srpt: return "srpt";
    case Kind::Gittins: return "gittins";
    case Kind::PoLcfs:
    case Kind::TruncSwitch: {
      std::string head =
          kind == Kind::PoLcfs ? "po-lcfs(" : "trunc-switch(";
      head += inner ? inner->to_string() : "?";
      if (s > 0) head += ",s=" + detail::fmt_num(s);
      head += ")";
      return head;
    }
  }
  return {};
}

// Materialise a spec against a service distribution.  Index tables are
// built here: gittins uses the law itself, po-lcfs builds its inner policy
// against the type-A truncation, trunc-switch indexes the type-B truncation.
inline std::unique_ptr<Policy> make_policy(const PolicySpec& spec,
                                           const ServiceDistribution& d,
                                           const GittinsConfig& gcfg = {}) {
  using Kind = PolicySpec::Kind;
  switch (spec.kind) {
    case Kind::Fcfs: return std::make_unique<FcfsPolicy>();
    case Kind::LcfsPreempt: return std::make_unique<LcfsPreemptPolicy>();
    case Kind::Fb: return std::make_unique<FbPolicy>();
    case Kind::Srpt: return std::make_unique<SrptPolicy>();
    case Kind::Gittins:
      return std::make_unique<GittinsPolicy>(
          std::make_shared<GittinsTable>(build_table(d, gcfg)));
    case Kind::PoLcfs: {
      if (!(spec.s > 0))
        throw std::invalid_argument("po-lcfs: truncation level s not set");
      if (!spec.inner)
        throw std::invalid_argument("po-lcfs: inner policy not set");
      auto trunc = ServiceDistribution::truncated_a(d, spec.s);
      return std::make_unique<PoLcfsPolicy>(
          make_policy(*spec.inner, trunc, gcfg), spec.s);
    }
    case Kind::TruncSwitch: {
      if (!(spec.s > 0))
        throw std::invalid_argument(
            "trunc-switch: truncation level s not set");
      if (!spec.inner)
        throw std::invalid_argument("trunc-switch: fallback policy not set");
      auto table = std::make_shared<GittinsTable>(
          build_table(ServiceDistribution::truncated_b(d, spec.s), gcfg));
      return std::make_unique<TruncSwitchPolicy>(
          std::move(table), make_policy(*spec.inner, d, gcfg), spec.s);
    }
  }
  throw std::logic_error("unreachable policy kind");
}

}  // namespace mg1
