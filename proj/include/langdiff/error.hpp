#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace langdiff {

enum class Errc {
    MalformedRow,
    DuplicateCell,
    NonPositiveSurprisal,
    IntentBelowPairwiseMinimum,
    BlockTooSmall,
    MissingOriginMetadata,
    DomainError,
    EmptyTable,
    UnknownCorpus,
    LengthMismatch,
    InvalidConfig,
    DimensionMismatch,
    TooManyColumnsForExact,
    Infeasible,
    DegenerateInput,
    InsufficientOverlap,
    Io,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception; `code()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace langdiff
