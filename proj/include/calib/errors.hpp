#pragma once

#include <stdexcept>
#include <string>

namespace calib {

// Typed failures shared across the pipeline. Hypothesis rejection
// (no real focal length) is signalled by std::optional instead; only
// conditions a caller must handle or report are exceptions.

struct CalibError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateInput : CalibError {
    using CalibError::CalibError;
};

struct InsufficientLines : CalibError {
    using CalibError::CalibError;
};

struct SamplingExhausted : CalibError {
    using CalibError::CalibError;
};

struct EmptySelection : CalibError {
    using CalibError::CalibError;
};

struct AllScoresZero : CalibError {
    using CalibError::CalibError;
};

struct NoLabeledCandidates : CalibError {
    using CalibError::CalibError;
};

struct ShapeMismatch : CalibError {
    using CalibError::CalibError;
};

struct NoHorizontals : CalibError {
    using CalibError::CalibError;
};

struct InsufficientHypotheses : CalibError {
    using CalibError::CalibError;
};

struct NoHypotheses : CalibError {
    using CalibError::CalibError;
};

struct EmptyLineMap : CalibError {
    using CalibError::CalibError;
};

struct EmptyInput : CalibError {
    using CalibError::CalibError;
};

struct ImageTooSmall : CalibError {
    using CalibError::CalibError;
};

struct DegenerateScene : CalibError {
    using CalibError::CalibError;
};

struct MissingGroundTruth : CalibError {
    using CalibError::CalibError;
};

struct ParseError : CalibError {
    ParseError(const std::string& what, long line = -1)
        : CalibError(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_number(line) {}
    long line_number;
};

} // namespace calib
