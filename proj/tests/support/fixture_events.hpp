#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dressguard/telemetry.hpp"

namespace dressguard::testing {

struct ParsedFixture {
  std::vector<ControlEvent> events;
  Clock clock;
};

/// Reads a log written in `dialect` back into events carrying the exact
/// printed values. Independent of the renderer; throws std::runtime_error on
/// a line it does not recognize.
ParsedFixture parse_fixture(const std::string& text, Dialect dialect);

std::string read_text(const std::string& path);

}  // namespace dressguard::testing
