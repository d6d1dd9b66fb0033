#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace cenic {

struct Stats {
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double mean = 0;
  double min = 0;
  double max = 0;
  std::size_t count = 0;

  double iqr() const { return q3 - q1; }
};

// Quartiles by linear interpolation between order statistics.
Stats summarize(std::vector<double> samples);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  void reset() { start_ = std::chrono::steady_clock::now(); }
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Restricts the calling thread to one CPU (the lowest it may run on).
// Returns false when the platform refuses.
bool pin_to_single_cpu();

// "model name | cores | kernel" style description of the machine.
std::string host_descriptor();

}  // namespace cenic
