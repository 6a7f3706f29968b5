#pragma once

#include <cstdlib>
#include <string>

#include <spdlog/spdlog.h>

// DRPIPE_LOG, when set, wins over the --log flag.
inline void apply_log_level(const std::string& flag_value) {
  const char* env = std::getenv("DRPIPE_LOG");
  const std::string level = env && *env ? env : flag_value;
  spdlog::set_level(spdlog::level::from_str(level));
}
