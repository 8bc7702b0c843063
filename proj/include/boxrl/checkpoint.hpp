#pragma once
// Versioned flat-text checkpoint: named arrays with shapes, values printed
// with %.17g so doubles round-trip exactly. Layout is documented in the
// README. Resuming from a checkpoint plus the original config replays the
// remaining steps bit-exactly because all randomness is derived from
// (seed, step) rather than serialized generator state.

#include <string>

#include "boxrl/trainer.hpp"

namespace boxrl {

void save_checkpoint(const TrainerCheckpoint& ckpt, const std::string& path);
TrainerCheckpoint load_checkpoint(const std::string& path);

}  // namespace boxrl
