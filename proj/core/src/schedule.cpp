#include "dps/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dps/errors.hpp"

namespace dps {

NoiseSchedule NoiseSchedule::linear(int step_count, const ScheduleSpec& spec) {
    if (step_count < 1) {
        throw ConfigError("schedule step_count must be >= 1, got " +
                          std::to_string(step_count));
    }
    if (!(spec.beta_start > 0.0 && spec.beta_end < 1.0 &&
          spec.beta_start <= spec.beta_end)) {
        throw ConfigError("schedule requires 0 < beta_start <= beta_end < 1, got [" +
                          std::to_string(spec.beta_start) + ", " +
                          std::to_string(spec.beta_end) + "]");
    }

    NoiseSchedule s;
    s.step_count_ = step_count;
    s.spec_ = spec;
    s.beta_.resize(step_count);
    s.alpha_.resize(step_count);
    s.alpha_bar_.resize(step_count);
    s.posterior_sigma_.resize(step_count);

    double running = 1.0;
    for (int i = 0; i < step_count; ++i) {
        double frac = step_count == 1
                          ? 0.0
                          : static_cast<double>(i) / (step_count - 1);
        double prev_bar = running;
        s.beta_[i] = spec.beta_start + frac * (spec.beta_end - spec.beta_start);
        s.alpha_[i] = 1.0 - s.beta_[i];
        running *= s.alpha_[i];
        s.alpha_bar_[i] = running;
        s.posterior_sigma_[i] =
            i == 0 ? 0.0
                   : std::sqrt(s.beta_[i] * (1.0 - prev_bar) / (1.0 - running));
    }
    return s;
}

NoiseSchedule NoiseSchedule::rebuilt(int new_step_count) const {
    return linear(new_step_count, spec_);
}

double NoiseSchedule::alpha_bar_prev(int t) const {
    check(t);
    return t == 1 ? 1.0 : alpha_bar_[t - 2];
}

int NoiseSchedule::check(int t) const {
    if (t < 1 || t > step_count_) {
        throw std::out_of_range("timestep " + std::to_string(t) +
                                " outside 1.." + std::to_string(step_count_));
    }
    return t - 1;
}

}  // namespace dps
