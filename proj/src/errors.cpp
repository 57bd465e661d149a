#include "dialectic/errors.hpp"

namespace dialectic {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out;
  for (const auto& p : problems) {
    if (!out.empty()) out += '\n';
    out += p;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

HttpStatusError::HttpStatusError(int status, const std::string& body)
    : BackendError("HTTP " + std::to_string(status) + (body.empty() ? "" : ": " + body),
                   status == 429 || status >= 500),
      status_(status) {}

}  // namespace dialectic
