#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gibbsrate {

enum class ErrorKind {
    NotPD,
    NotOrthonormalRows,
    NotOrthogonal,
    UnknownBlock,
    DimMismatch,
    RankDeficient,
    NoSuchM,
    DegenerateCondition,
    DegenerateMarginal,
    DegenerateDenominator,
    TooShort,
    LengthMismatch,
    InvalidPrior,
    InvalidSpec,
    InvalidConfig,
    Io,
    Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` carries the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace gibbsrate
