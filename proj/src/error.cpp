#include "gibbsrate/error.hpp"

namespace gibbsrate {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NotPD: return "NotPD";
        case ErrorKind::NotOrthonormalRows: return "NotOrthonormalRows";
        case ErrorKind::NotOrthogonal: return "NotOrthogonal";
        case ErrorKind::UnknownBlock: return "UnknownBlock";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::NoSuchM: return "NoSuchM";
        case ErrorKind::DegenerateCondition: return "DegenerateCondition";
        case ErrorKind::DegenerateMarginal: return "DegenerateMarginal";
        case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::InvalidPrior: return "InvalidPrior";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::Io: return "Io";
        case ErrorKind::Parse: return "Parse";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace gibbsrate
