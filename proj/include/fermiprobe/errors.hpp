// errors.hpp — typed error hierarchy shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace fermiprobe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : Error { using Error::Error; };
struct InvalidCoupling : Error { using Error::Error; };
struct UnitarityViolation : Error { using Error::Error; };
struct BracketFailure : Error { using Error::Error; };
struct TruncationOverflow : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
struct FockSpaceTooLarge : Error { using Error::Error; };
struct WindowTooWeak : Error { using Error::Error; };
struct NonConvergence : Error { using Error::Error; };
struct PolylogDivergence : Error { using Error::Error; };
struct ValidityViolation : Error { using Error::Error; };
struct BranchMisalignment : Error { using Error::Error; };
struct UndefinedAngle : Error { using Error::Error; };
struct DegenerateOutcome : Error { using Error::Error; };
struct ExtendGrid : Error { using Error::Error; };
struct BoundaryMaximum : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct UnknownPreset : Error { using Error::Error; };

} // namespace fermiprobe
