#pragma once

#include <stdexcept>
#include <string>

namespace coverbench {

// Fatal pipeline errors. Record-level problems (a missing image, an
// unparseable model reply) are collected into reports instead of thrown.

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Provider returned something structurally inconsistent with its own
// history (e.g. embedding dimension changed between calls).
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Provider declined to answer (content refusal). Not a transport failure;
// callers downgrade the affected record instead of aborting the run.
struct RefusalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coverbench
