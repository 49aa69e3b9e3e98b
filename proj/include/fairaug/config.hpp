#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fairaug/augment.hpp"
#include "fairaug/errors.hpp"
#include "fairaug/lightgcn.hpp"
#include "fairaug/report.hpp"

namespace fairaug {

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Everything a pipeline stage needs. `seed` and `k` are shared by training,
// augmentation and evaluation; the copies inside `model` and `augment` are
// overwritten by resolve().
struct RunConfig {
  // [data]
  std::filesystem::path interactions;
  std::filesystem::path attributes;
  // [model]
  TrainConfig model;
  // [augment]
  AugmentConfig augment;
  double psi_u = 0.35;
  double psi_i = 0.2;
  // [run]
  std::filesystem::path out = "out";
  std::uint64_t seed = 42;
  int k = 10;
  std::string policy = "zn";
  std::vector<std::string> policies{"bm", "zn", "ld", "sp", "fr", "ip", "zn+ip", "ld+ip", "sp+ip", "fr+ip"};
  int jobs = 1;
  EvaluationMode mode = EvaluationMode::kFrozen;
  std::string setting = "default";
};

/// Parses the sectioned `key = value` format. Blank lines and lines starting
/// with '#' or ';' are ignored. Unknown sections or keys, repeated keys and
/// bad values are ParseErrors. Relative paths are taken relative to `base`.
RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::filesystem::path& base = {}, RunConfig defaults = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig defaults = {});

// Copies the shared fields into the stage configs and checks every range.
void resolve(RunConfig& config);

// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& config);

}  // namespace fairaug
