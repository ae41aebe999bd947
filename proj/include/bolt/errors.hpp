#pragma once

#include <stdexcept>
#include <string>

namespace bolt {

// Malformed or invariant-violating input data (corpus, lexicon, config, script).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// LLM backend failures: transport, auth, malformed responses, missing mock entries.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bolt
