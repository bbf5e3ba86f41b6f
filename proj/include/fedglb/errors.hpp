#pragma once

#include <stdexcept>
#include <string>

namespace fedglb {

// Bad values fed into a numeric kernel (non-finite input, unsupported label, ...).
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// Internal bookkeeping went out of sync (corrupted inverse cache, negative
// log-det ratio, failed inline invariant). Always a bug, never user input.
struct consistency_error : std::logic_error {
  explicit consistency_error(const std::string& what) : std::logic_error(what) {}
};

// An iterative routine failed to converge or bracket.
struct convergence_error : std::runtime_error {
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

// Caller violated an interaction contract (e.g. rewarded an arm that is not
// part of the current round's arm set).
struct protocol_error : std::logic_error {
  explicit protocol_error(const std::string& what) : std::logic_error(what) {}
};

// Corpus/file content problems, reported with row numbers where known.
struct data_error : std::runtime_error {
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration (bad knob value, missing field, unknown key).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedglb
