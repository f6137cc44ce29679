#include "xcohort/error.hpp"

namespace xcohort {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NonNumericCell: return "NonNumericCell";
        case ErrorCode::DuplicateSampleId: return "DuplicateSampleId";
        case ErrorCode::FeatureMismatch: return "FeatureMismatch";
        case ErrorCode::UnknownCohort: return "UnknownCohort";
        case ErrorCode::InvalidSplit: return "InvalidSplit";
        case ErrorCode::MissingScoreForSample: return "MissingScoreForSample";
        case ErrorCode::InvalidValue: return "InvalidValue";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::AllFeaturesConstant: return "AllFeaturesConstant";
        case ErrorCode::BatchTooSmall: return "BatchTooSmall";
        case ErrorCode::NoBatches: return "NoBatches";
        case ErrorCode::UnknownBatch: return "UnknownBatch";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
        case ErrorCode::DegenerateDistribution: return "DegenerateDistribution";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonStandardizedDesign: return "NonStandardizedDesign";
        case ErrorCode::SingleClassLabels: return "SingleClassLabels";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::ClassTooSmallForFolds: return "ClassTooSmallForFolds";
        case ErrorCode::UnknownGridPoint: return "UnknownGridPoint";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::AlignmentError: return "AlignmentError";
        case ErrorCode::CohortLeakage: return "CohortLeakage";
        case ErrorCode::TooFewGroups: return "TooFewGroups";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::ZeroExpectedCell: return "ZeroExpectedCell";
        case ErrorCode::NoEvents: return "NoEvents";
        case ErrorCode::NegativeTime: return "NegativeTime";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ConfigInvalid:
        case ErrorCode::InvalidSplit:
        case ErrorCode::SchemaError:
        case ErrorCode::UnknownGridPoint:
        case ErrorCode::CohortLeakage:
        case ErrorCode::FingerprintMismatch:
            return 2;
        case ErrorCode::Internal:
            return 4;
        default:
            return 3;
    }
}

}  // namespace xcohort
