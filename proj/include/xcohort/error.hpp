#pragma once

#include <stdexcept>
#include <string>

namespace xcohort {

enum class ErrorCode {
    // ingestion / data model
    MissingColumn,
    NonNumericCell,
    DuplicateSampleId,
    FeatureMismatch,
    UnknownCohort,
    InvalidSplit,
    MissingScoreForSample,
    InvalidValue,
    // preprocessing
    InsufficientSamples,
    AllFeaturesConstant,
    BatchTooSmall,
    NoBatches,
    UnknownBatch,
    ZeroVariance,
    FingerprintMismatch,
    // labeling
    DegenerateDistribution,
    TooFewSamples,
    // selection / learners
    DimensionMismatch,
    NonStandardizedDesign,
    SingleClassLabels,
    IndexOutOfRange,
    ClassTooSmallForFolds,
    UnknownGridPoint,
    // evaluation
    LengthMismatch,
    EmptyInput,
    AlignmentError,
    CohortLeakage,
    // cohort statistics
    TooFewGroups,
    EmptyGroup,
    ZeroExpectedCell,
    NoEvents,
    NegativeTime,
    // synth / config / io
    ConfigInvalid,
    IoError,
    SchemaError,
    Internal,
};

const char* to_string(ErrorCode code);

/// Exit-code class for the CLI: 2 validation, 3 data, 4 internal.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace xcohort
