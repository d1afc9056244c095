#ifndef STG3NET_CLI_HPP
#define STG3NET_CLI_HPP

namespace stg3net::cli {

/** Exit codes shared by every subcommand. */
enum ExitCode : int { ok = 0, config_error = 2, data_error = 3, numeric_error = 4 };

int main(int argc, char** argv);

}

#endif
