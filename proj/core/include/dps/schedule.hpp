#pragma once

#include <vector>

namespace dps {

/// (beta_start, beta_end) endpoints of a linear variance schedule. Kept next
/// to the built tables so a schedule can be rebuilt at a different step count
/// from the same endpoints.
struct ScheduleSpec {
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

/// Immutable per-timestep coefficient tables for forward and reverse
/// diffusion: beta_t, alpha_t = 1 - beta_t, the cumulative product
/// alpha_bar_t, and the reverse-step standard deviation
/// sigma_tilde_t = sqrt(beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)).
///
/// Timesteps are indexed 1..T. Safe for unrestricted concurrent reads.
class NoiseSchedule {
public:
    /// Linear beta schedule from spec.beta_start to spec.beta_end over
    /// step_count steps. Throws ConfigError on step_count == 0 or endpoints
    /// outside (0, 1) or beta_start > beta_end.
    static NoiseSchedule linear(int step_count, const ScheduleSpec& spec = {});

    /// Fresh schedule of length new_step_count over the same endpoints.
    /// Coefficients are re-derived, never sliced from the existing tables.
    NoiseSchedule rebuilt(int new_step_count) const;

    int step_count() const { return step_count_; }
    const ScheduleSpec& spec() const { return spec_; }

    double beta(int t) const { return beta_[check(t)]; }
    double alpha(int t) const { return alpha_[check(t)]; }
    double alpha_bar(int t) const { return alpha_bar_[check(t)]; }
    /// alpha_bar_{t-1}, with alpha_bar_0 = 1.
    double alpha_bar_prev(int t) const;
    double posterior_sigma(int t) const { return posterior_sigma_[check(t)]; }

private:
    NoiseSchedule() = default;
    int check(int t) const;

    int step_count_ = 0;
    ScheduleSpec spec_;
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
    std::vector<double> posterior_sigma_;
};

}  // namespace dps
