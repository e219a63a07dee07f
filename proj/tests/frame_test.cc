#include <fcntl.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include "mlbridge/frame.h"
#include "mlbridge/retry_policy.h"
#include "test_util.h"

namespace mlbridge {
namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

struct PipePair {
  UniqueFd rd, wr;
  PipePair() {
    int fds[2];
    EXPECT_EQ(::pipe2(fds, O_CLOEXEC), 0);
    rd.Reset(fds[0]);
    wr.Reset(fds[1]);
  }
};

Bytes Drain(int fd) {
  Bytes out;
  std::uint8_t buf[4096];
  for (;;) {
    const ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n <= 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  return out;
}

void WriteRaw(int fd, const Bytes& bytes) {
  ASSERT_EQ(::write(fd, bytes.data(), bytes.size()),
            static_cast<ssize_t>(bytes.size()));
}

TEST(FrameTest, WireLayout) {
  PipePair p;
  WriteFrame(p.wr.get(), Bytes{0xAA, 0xBB, 0xCC});
  WriteFrame(p.wr.get(), Bytes{});
  p.wr.Reset();
  EXPECT_EQ(Drain(p.rd.get()),
            (Bytes{0x03, 0, 0, 0, 0xAA, 0xBB, 0xCC, 0, 0, 0, 0}));
}

TEST(FrameTest, OversizeWritesNothing) {
  PipePair p;
  EXPECT_RUNNER_ERROR(WriteFrame(p.wr.get(), Bytes(17), 16), kMalformed);
  EXPECT_NO_THROW(WriteFrame(p.wr.get(), Bytes(16), 16));
  p.wr.Reset();
  EXPECT_EQ(Drain(p.rd.get()).size(), 20u);
}

TEST(FrameTest, ReadOne) {
  PipePair p;
  WriteRaw(p.wr.get(), {0x02, 0, 0, 0, 0x01, 0x02});
  EXPECT_EQ(ReadFrame(p.rd.get(), 1000ms), (Bytes{0x01, 0x02}));
}

TEST(FrameTest, EofMidFrameIsPeerClosed) {
  PipePair p;
  WriteRaw(p.wr.get(), {0x05, 0, 0, 0, 0x01, 0x02});
  p.wr.Reset();
  EXPECT_RUNNER_ERROR(ReadFrame(p.rd.get(), 1000ms), kPeerClosed);
}

TEST(FrameTest, EofInLengthIsPeerClosed) {
  PipePair p;
  WriteRaw(p.wr.get(), {0x05, 0});
  p.wr.Reset();
  EXPECT_RUNNER_ERROR(ReadFrameOrEof(p.rd.get(), 1000ms), kPeerClosed);
}

TEST(FrameTest, CleanEof) {
  PipePair p;
  p.wr.Reset();
  EXPECT_FALSE(ReadFrameOrEof(p.rd.get(), 1000ms).has_value());
  PipePair q;
  q.wr.Reset();
  EXPECT_RUNNER_ERROR(ReadFrame(q.rd.get(), 1000ms), kPeerClosed);
}

TEST(FrameTest, DeclaredLengthTooLarge) {
  PipePair p;
  WriteRaw(p.wr.get(), {0x11, 0, 0, 0});
  EXPECT_RUNNER_ERROR(ReadFrame(p.rd.get(), 1000ms, 16), kMalformed);
}

TEST(FrameTest, TimeoutElapsed) {
  PipePair p;
  const auto t0 = Clock::now();
  try {
    ReadFrame(p.rd.get(), 150ms);
    ADD_FAILURE();
  } catch (const RunnerError& e) {
    ASSERT_EQ(e.kind(), RunnerError::Kind::kTimeout);
    EXPECT_GE(e.elapsed_ms(), 150);
    EXPECT_LE(e.elapsed_ms(), 180);
  }
  EXPECT_LT(Clock::now() - t0, 400ms);
}

TEST(FrameTest, TimeoutCoversWholeFrame) {
  PipePair p;
  WriteRaw(p.wr.get(), {0x04, 0, 0, 0, 0x01});
  EXPECT_RUNNER_ERROR(ReadFrame(p.rd.get(), 100ms), kTimeout);
}

TEST(FrameTest, WriteToClosedReaderIsPeerClosed) {
  IgnoreSigpipe();
  PipePair p;
  p.rd.Reset();
  EXPECT_RUNNER_ERROR(WriteFrame(p.wr.get(), Bytes{1}), kPeerClosed);
  int sv[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv), 0);
  UniqueFd a(sv[0]);
  ::close(sv[1]);
  EXPECT_RUNNER_ERROR(WriteFrame(a.get(), Bytes{1}), kPeerClosed);
}

TEST(FrameTest, LargeFrameThroughSocketWithConcurrentReader) {
  int sv[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv), 0);
  UniqueFd a(sv[0]), b(sv[1]);
  Bytes big(3 << 20);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<std::uint8_t>(i * 31);
  std::thread writer([&] { WriteFrame(a.get(), big); });
  EXPECT_EQ(ReadFrame(b.get(), 5000ms), big);
  writer.join();
}

// Concatenated frames read back one by one, for many random batches.
TEST(FrameTest, ConcatenatedFramesProperty) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> count(1, 100);
  std::uniform_int_distribution<int> len(0, 300);
  for (int trial = 0; trial < 50; ++trial) {
    int sv[2];
    ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv), 0);
    UniqueFd a(sv[0]), b(sv[1]);
    std::vector<Bytes> sent(static_cast<std::size_t>(count(rng)));
    for (auto& f : sent) {
      f.resize(static_cast<std::size_t>(len(rng)));
      for (auto& x : f) x = static_cast<std::uint8_t>(rng());
    }
    std::thread writer([&] {
      for (const auto& f : sent) WriteFrame(a.get(), f);
      a.Reset();
    });
    for (const auto& f : sent) EXPECT_EQ(ReadFrame(b.get(), 2000ms), f);
    EXPECT_FALSE(ReadFrameOrEof(b.get(), 2000ms).has_value());
    writer.join();
  }
}

TEST(RetryPolicyTest, Schedule) {
  RetryPolicy p{50ms, 2.0, 5, 5000ms};
  EXPECT_EQ(p.DelayBefore(1), 50ms);
  EXPECT_EQ(p.DelayBefore(2), 100ms);
  EXPECT_EQ(p.DelayBefore(5), 800ms);
  p.multiplier = 1.5;
  EXPECT_EQ(p.DelayBefore(3), 113ms);
}

TEST(RetryPolicyTest, Defaults) {
  const RetryPolicy p;
  EXPECT_EQ(p.initial_delay, 50ms);
  EXPECT_EQ(p.multiplier, 2.0);
  EXPECT_EQ(p.max_retries, 5);
  EXPECT_EQ(p.per_call_timeout, 5000ms);
}

TEST(RetryPolicyTest, Validate) {
  EXPECT_NO_THROW(RetryPolicy{}.Validate());
  EXPECT_RUNNER_ERROR((RetryPolicy{0ms, 2.0, 1, 10ms}.Validate()), kMalformed);
  EXPECT_RUNNER_ERROR((RetryPolicy{1ms, 0.5, 1, 10ms}.Validate()), kMalformed);
  EXPECT_RUNNER_ERROR((RetryPolicy{1ms, 2.0, -1, 10ms}.Validate()), kMalformed);
  EXPECT_RUNNER_ERROR((RetryPolicy{1ms, 2.0, 1, 0ms}.Validate()), kMalformed);
}

TEST(RetryPolicyTest, StopsOnSuccess) {
  std::vector<int> attempts;
  RunWithBackoff(RetryPolicy{1ms, 2.0, 5, 10ms}, [&](int a) {
    attempts.push_back(a);
    return a == 2;
  });
  EXPECT_EQ(attempts, (std::vector<int>{0, 1, 2}));
}

TEST(RetryPolicyTest, ExhaustionCountsAllAttempts) {
  int calls = 0;
  try {
    RunWithBackoff(RetryPolicy{1ms, 1.0, 3, 10ms}, [&](int) {
      ++calls;
      return false;
    });
    ADD_FAILURE();
  } catch (const RunnerError& e) {
    EXPECT_EQ(e.kind(), RunnerError::Kind::kRetriesExhausted);
    EXPECT_EQ(e.attempts(), 4);
  }
  EXPECT_EQ(calls, 4);
  try {
    RunWithBackoff(RetryPolicy{1ms, 1.0, 0, 10ms}, [](int) { return false; });
  } catch (const RunnerError& e) {
    EXPECT_EQ(e.attempts(), 1);
  }
}

// Gaps between attempts follow the policy and never shrink.
TEST(RetryPolicyTest, MeasuredGapsMonotone) {
  std::vector<Clock::time_point> at;
  EXPECT_RUNNER_ERROR(RunWithBackoff(RetryPolicy{20ms, 1.5, 4, 10ms},
                                     [&](int) {
                                       at.push_back(Clock::now());
                                       return false;
                                     }),
                      kRetriesExhausted);
  ASSERT_EQ(at.size(), 5u);
  double prev = 0;
  for (std::size_t k = 1; k < at.size(); ++k) {
    const double gap =
        std::chrono::duration<double, std::milli>(at[k] - at[k - 1]).count();
    const double want = 20.0 * std::pow(1.5, static_cast<double>(k) - 1);
    EXPECT_NEAR(gap, want, want * 0.3) << "gap " << k;
    EXPECT_GE(gap, prev * 0.95);
    prev = gap;
  }
}

}  // namespace
}  // namespace mlbridge
