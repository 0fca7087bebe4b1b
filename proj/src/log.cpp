#include "semgraph/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace semgraph {

bool init_logging() {
  auto logger = spdlog::get("semgraph");
  if (!logger) logger = spdlog::stderr_logger_st("semgraph");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SEMGRAPH_LOG");
  const std::string level = env ? env : "off";
  if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else {
    spdlog::set_level(spdlog::level::off);
    return level == "off";
  }
  return true;
}

}  // namespace semgraph
