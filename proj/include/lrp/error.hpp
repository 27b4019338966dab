#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrp {

enum class ErrorCategory {
    usage,
    dimension,
    geometry,
    parse,
    schema,
    shape,
    value,
    io,
    policy,
    precondition,
    unsupported_fusion,
    invariant,
};

std::string_view category_name(ErrorCategory category);

/// Every failure raised by the library carries a category so that the CLI can
/// map it onto an exit code and a machine-parseable prefix.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

}  // namespace lrp
