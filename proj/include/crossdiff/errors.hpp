#pragma once

#include <stdexcept>
#include <string>

namespace crossdiff {

// Base class for every recoverable error raised by the library. Audits never
// throw these; they return structured reports instead. Operations with hard
// preconditions (mass, monotonicity, ranges) do throw.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- density / grid ---
struct ZeroMass : Error {
    explicit ZeroMass(const std::string& msg) : Error(msg) {}
};
struct NegativeEntry : Error {
    explicit NegativeEntry(const std::string& msg) : Error(msg) {}
};
struct NonMonotoneMap : Error {
    explicit NonMonotoneMap(const std::string& msg) : Error(msg) {}
};
struct ImageEscapesGrid : Error {
    explicit ImageEscapesGrid(const std::string& msg) : Error(msg) {}
};

// --- transport ---
struct DegenerateSupport : Error {
    explicit DegenerateSupport(const std::string& msg) : Error(msg) {}
};

// --- model ---
struct KindMismatch : Error {
    explicit KindMismatch(const std::string& msg) : Error(msg) {}
};

// --- minimizing-movement solver ---
struct InnerSolverStalled : Error {
    explicit InnerSolverStalled(const std::string& msg) : Error(msg) {}
};
struct BoundaryEscape : Error {
    explicit BoundaryEscape(const std::string& msg) : Error(msg) {}
};

// --- diagnostics ---
struct OutOfRange : Error {
    explicit OutOfRange(const std::string& msg) : Error(msg) {}
};
struct TooFewSteps : Error {
    explicit TooFewSteps(const std::string& msg) : Error(msg) {}
};
struct HeatStepUnstable : Error {
    explicit HeatStepUnstable(const std::string& msg) : Error(msg) {}
};
struct UnsupportedWindow : Error {
    explicit UnsupportedWindow(const std::string& msg) : Error(msg) {}
};
struct NonMonotonePerturbation : Error {
    explicit NonMonotonePerturbation(const std::string& msg) : Error(msg) {}
};

// --- finite-volume reference ---
struct StabilityViolation : Error {
    explicit StabilityViolation(const std::string& msg) : Error(msg) {}
};
struct NegativityClipExceeded : Error {
    explicit NegativityClipExceeded(const std::string& msg) : Error(msg) {}
};

// --- configuration / io ---
struct SchemaError : Error {
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};
struct RangeError : Error {
    explicit RangeError(const std::string& msg) : Error(msg) {}
};
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace crossdiff
