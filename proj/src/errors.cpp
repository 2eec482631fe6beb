#include "erm/errors.hpp"

namespace erm {

const char* to_string(ErrorCategory category) noexcept
{
    switch (category) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::data: return "data";
    case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

} // namespace erm
