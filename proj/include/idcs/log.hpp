#pragma once

#include <json.hpp>
#include <string_view>

namespace idcs::log {

enum class Level { quiet = 0, info = 1, debug = 2 };

void set_level(Level level) noexcept;
Level level() noexcept;

// Emits one JSON object per line on stderr: {"event": ..., <fields>}.
void event(std::string_view name, nlohmann::json fields = nlohmann::json::object());
void debug(std::string_view name, nlohmann::json fields = nlohmann::json::object());

}  // namespace idcs::log
