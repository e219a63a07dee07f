#pragma once

#include <chrono>
#include <functional>

namespace mlbridge {

/// Exponential backoff for connection attempts plus the per-call deadline
/// used by every blocking exchange.
struct RetryPolicy {
  std::chrono::milliseconds initial_delay{50};
  double multiplier = 2.0;
  int max_retries = 5;
  std::chrono::milliseconds per_call_timeout{5000};

  /// Throws Malformed on a non-positive delay or timeout, multiplier < 1 or
  /// negative retries.
  void Validate() const;

  /// Sleep before retry `attempt` (1-based):
  /// initial_delay * multiplier^(attempt - 1).
  std::chrono::milliseconds DelayBefore(int attempt) const;
};

/// Calls `try_once(attempt)` for attempt = 0, 1, ..., max_retries, sleeping
/// DelayBefore(attempt) before each retry, until it returns true. Throws
/// RetriesExhausted{max_retries + 1} if every attempt fails.
void RunWithBackoff(const RetryPolicy& policy,
                    const std::function<bool(int attempt)>& try_once);

}  // namespace mlbridge
