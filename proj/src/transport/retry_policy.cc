#include "mlbridge/retry_policy.h"

#include <cmath>
#include <thread>

#include "mlbridge/runner_error.h"

namespace mlbridge {

void RetryPolicy::Validate() const {
  if (initial_delay.count() <= 0) {
    throw RunnerError::Malformed("initial_delay must be positive");
  }
  if (!(multiplier >= 1.0)) {
    throw RunnerError::Malformed("multiplier must be >= 1");
  }
  if (max_retries < 0) {
    throw RunnerError::Malformed("max_retries must be non-negative");
  }
  if (per_call_timeout.count() <= 0) {
    throw RunnerError::Malformed("per_call_timeout must be positive");
  }
}

std::chrono::milliseconds RetryPolicy::DelayBefore(int attempt) const {
  const double ms = static_cast<double>(initial_delay.count()) *
                    std::pow(multiplier, attempt - 1);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms)));
}

void RunWithBackoff(const RetryPolicy& policy,
                    const std::function<bool(int attempt)>& try_once) {
  policy.Validate();
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(policy.DelayBefore(attempt));
    if (try_once(attempt)) return;
  }
  throw RunnerError::RetriesExhausted(policy.max_retries + 1);
}

}  // namespace mlbridge
