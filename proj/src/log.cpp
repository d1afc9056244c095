#include "stg3net/log.hpp"

#include <atomic>
#include <iostream>

namespace stg3net::logging {

namespace {
std::atomic<Level> current{Level::warn};
}

void set_level(Level l) { current = l; }

Level level() { return current; }

void warn(const std::string& message) {
    if (current >= Level::warn) {
        std::cerr << "warning: " << message << '\n';
    }
}

void info(const std::string& message) {
    if (current >= Level::info) {
        std::cerr << message << '\n';
    }
}

}
