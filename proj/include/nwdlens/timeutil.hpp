#pragma once

#include <chrono>
#include <string>

namespace nwdlens {

// "YYYY-MM-DDThh:mm:ssZ"
std::string format_rfc3339_utc(std::chrono::system_clock::time_point tp);

// Time source for providers. Injectable so the rate-limit contract is
// testable with a virtual clock.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::system_clock::time_point now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
 public:
  std::chrono::system_clock::time_point now() override;
  void sleep_for(std::chrono::milliseconds d) override;
};

// Virtual clock: sleep_for advances time instantly.
class FakeClock final : public Clock {
 public:
  explicit FakeClock(std::chrono::system_clock::time_point start =
                         std::chrono::system_clock::time_point{});
  std::chrono::system_clock::time_point now() override;
  void sleep_for(std::chrono::milliseconds d) override;
  void advance(std::chrono::milliseconds d);

 private:
  std::chrono::system_clock::time_point now_;
};

}  // namespace nwdlens
