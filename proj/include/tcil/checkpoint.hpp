#pragma once

#include <string>
#include <string_view>

#include "tcil/trainer.hpp"

namespace tcil {

inline constexpr int kCheckpointVersion = 1;

// JSON snapshot of a learner between tasks:
//
//   { "format": "tcil-checkpoint", "version": 1, "tasks_done": t,
//     "mode": ..., "rng": "<engine state>",
//     "backbone": { "input_dim", "hidden",
//                   "extractors": [ { "frozen", "blocks": [ {name, rows, cols, value[]} ] } ] },
//     "classifier": { "rows", "cols", "value", "frozen_mask", "gate_mask",
//                     "row_labels", "segments",
//                     "perturbation_log": [ [ {task, node, v[]} ] ] },
//     "buffer": { "capacity", "entries": { "<class>": [indices] } } }
//
// Doubles are written with round-trip precision, so save/load is exact.
std::string save_checkpoint(const IncrementalLearner& learner);

// Restores into a learner built with the same tree, curriculum and config.
void load_checkpoint(IncrementalLearner& learner, std::string_view text);

// Explicit I, E and R of the classifier's last inheritance step (JSON).
std::string inheritance_dump(const StructuredClassifier& cls);

}  // namespace tcil
