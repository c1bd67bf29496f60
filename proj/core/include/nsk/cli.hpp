/// @file cli.hpp
/// @brief Subcommand front end: run | relax | wsu | check | fit. Exposed as a
///        library call so the binary stays a one-line wrapper and tests can
///        drive the exact production path.

#pragma once

namespace nsk {

/// Exit codes: 0 all assertions pass, 1 assertion failure, 2 config or
/// runtime/solver failure.
int cli_main(int argc, const char* const* argv);

}  // namespace nsk
