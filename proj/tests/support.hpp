#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include <unistd.h>

#include "wristhar/recording.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("wristhar-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline wristhar::Recording constant_recording(double seconds, double fs, wristhar::Accel value,
                                              double t0 = 1.6e9) {
  wristhar::Recording r;
  r.participant_id = "T";
  r.sample_rate_hz = fs;
  r.t0 = t0;
  r.samples.assign(static_cast<std::size_t>(std::llround(seconds * fs)), value);
  return r;
}

// Gravity on z plus white noise of the given SD on every axis.
inline wristhar::Recording noisy_recording(double seconds, double fs, double sd, std::uint64_t seed,
                                           double t0 = 1.6e9) {
  wristhar::Recording r = constant_recording(seconds, fs, {0.0, 0.0, 1.0}, t0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  for (auto& s : r.samples) s = {s.x + n(rng), s.y + n(rng), s.z + n(rng)};
  return r;
}

}  // namespace testing
