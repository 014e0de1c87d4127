#pragma once

#include <string>

#include "hyperball/train.hpp"

namespace hyperball {

// Versioned binary checkpoint of a full TrainState: every parameter, momentum
// buffer, the PRNG state and the step counter. Doubles are stored as raw
// little-endian IEEE-754 bytes, so save/load round-trips bit-exactly.

void save_checkpoint(const TrainState& state, const std::string& path);

TrainState load_checkpoint(const std::string& path);

}  // namespace hyperball
