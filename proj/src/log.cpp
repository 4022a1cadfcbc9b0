#include "idcs/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace idcs::log {

namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;

void write(std::string_view name, nlohmann::json fields) {
    nlohmann::json line = nlohmann::json::object();
    line["event"] = name;
    for (auto& [k, v] : fields.items()) line[k] = std::move(v);
    std::lock_guard lock(g_mutex);
    std::cerr << line.dump() << '\n';
}
}  // namespace

void set_level(Level level) noexcept { g_level = level; }
Level level() noexcept { return g_level; }

void event(std::string_view name, nlohmann::json fields) {
    if (g_level >= Level::info) write(name, std::move(fields));
}

void debug(std::string_view name, nlohmann::json fields) {
    if (g_level >= Level::debug) write(name, std::move(fields));
}

}  // namespace idcs::log
