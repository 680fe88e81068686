#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gtnc/errors.hpp"

namespace gtnc {

class Mps;

/// Outcome of one sweep attempt, as seen by observers and the history table.
struct SweepRecord {
    std::size_t sweep = 0;   // 1-based attempt number
    double cost = 0.0;       // Gamma after the attempt was resolved
    double step_size = 0.0;  // alpha in effect during the attempt
    bool accepted = true;
    double seconds = 0.0;
};

/// Hyperparameters shared by the generative and discriminative trainers.
struct TrainConfig {
    std::size_t max_bond = 16;   // chi
    double step_size = 0.05;     // alpha
    double step_decay = 2.0;     // beta; alpha /= beta on a cost increase
    std::size_t max_sweeps = 50;
    double convergence_tol = 1e-4; // relative cost change between accepted sweeps
    std::size_t batch_size = 0;    // samples per gradient estimate; 0 = full batch
    std::uint64_t seed = 0;

    /// Diagnostic hook invoked after each resolved sweep attempt with the
    /// current (post-rollback) model. Not part of the persisted provenance.
    std::function<void(const Mps&, const SweepRecord&)> sweep_observer;

    void validate() const {
        if (max_bond < 1) throw ArgumentError("train config: chi must be >= 1");
        if (!(step_size > 0.0)) throw ArgumentError("train config: alpha must be > 0");
        if (!(step_decay > 1.0)) throw ArgumentError("train config: beta must be > 1");
        if (!(convergence_tol > 0.0)) throw ArgumentError("train config: tol must be > 0");
    }
};

struct TrainReport {
    std::vector<double> cost_history;     // Gamma after each sweep attempt
    std::vector<double> step_history;     // alpha used by each attempt
    std::vector<bool> accepted_history;
    std::vector<double> seconds_history;
    std::vector<double> discarded_weight_history; // two-site trainer only
    double initial_cost = std::numeric_limits<double>::quiet_NaN();
    double final_cost = std::numeric_limits<double>::quiet_NaN(); // best accepted Gamma
    std::size_t sweeps_run = 0;
    double wall_time_seconds = 0.0;
};

/// Training diverged; carries the partial report for diagnosis.
struct TrainingFailure : TrainingError {
    TrainReport report;
    TrainingFailure(const std::string& msg, TrainReport r)
        : TrainingError(msg), report(std::move(r)) {}
};

} // namespace gtnc
