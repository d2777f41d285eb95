#pragma once

#include <stdexcept>
#include <string>

namespace benes {

class TrainingFailure : public std::runtime_error {
public:
    TrainingFailure(int epoch, const std::string& what)
        : std::runtime_error("training failed at epoch " + std::to_string(epoch) + ": " + what),
          epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

class NormalizationFailure : public std::runtime_error {
public:
    NormalizationFailure(int step, const std::string& what)
        : std::runtime_error("normalisation failed at step " + std::to_string(step) + ": " + what),
          step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

// Wraps any failure inside run_filter with the step index it occurred at.
class StepFailure : public std::runtime_error {
public:
    StepFailure(int step, const std::string& what)
        : std::runtime_error("filter step " + std::to_string(step) + ": " + what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

class DegenerateEnsemble : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace benes
