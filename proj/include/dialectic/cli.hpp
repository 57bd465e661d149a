#pragma once

// Command-line front end. Exit codes:
//   0 success, 1 invalid input, 2 backend/transport failure, 64 usage error.

namespace dialectic::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitTransport = 2;
inline constexpr int kExitUsage = 64;

int route(int argc, char** argv);

}  // namespace dialectic::cli
