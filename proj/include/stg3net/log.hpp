#ifndef STG3NET_LOG_HPP
#define STG3NET_LOG_HPP

#include <string>

namespace stg3net::logging {

enum class Level { quiet = 0, warn = 1, info = 2 };

void set_level(Level level);
Level level();

void warn(const std::string& message);
void info(const std::string& message);

}

#endif
