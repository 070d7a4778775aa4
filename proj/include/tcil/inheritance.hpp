#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tcil/curriculum.hpp"
#include "tcil/numerics.hpp"
#include "tcil/random.hpp"
#include "tcil/taxonomy.hpp"

namespace tcil {

// ---- Explicit inheritance algebra -------------------------------------

// Shift matrix of shape (k-1) x k: entry (i, i+1) is one.
Mat sigma(std::size_t k);

// Row-removal generalization of sigma: (k-1) x k, keeps every row of a
// k-row matrix except `removed`, in order. removed == 0 gives sigma(k).
Mat sigma_without(std::size_t k, std::size_t removed);

// n x k matrix copying row `source`: ones in column `source`.
Mat psi(std::size_t n, std::size_t k, std::size_t source);

// [sigma_without(k, row); psi(n_children, k, row)]
Mat tc_inheritance_matrix(std::size_t prev_rows, std::size_t expanded_row, std::size_t n_children);

// [Id(prev_rows); 0_{n_new x prev_rows}]
Mat cil_inheritance_matrix(std::size_t prev_rows, std::size_t n_new);

// [Id(d_a) 0_{d_a x (d_b - d_a)}]
Mat expansion_matrix(std::size_t d_a, std::size_t d_b);

// M E: zero-pads M on the right to d_b columns.
Mat pad_columns(const Mat& m, std::size_t d_b);

// ---- Feature-selection gates ------------------------------------------

enum class GateStrategy { Full, Hierarchical, Orthogonal };

std::string to_string(GateStrategy s);
GateStrategy parse_gate_strategy(std::string_view name);

// g_t over feature extractors 1..t for task `t` (1-based) of a taxonomic
// curriculum. Hierarchical keeps extractors whose task expanded an ancestor
// of N_t or N_t itself; Orthogonal keeps only extractor t.
std::vector<bool> make_gate(const Curriculum& curriculum, const TaxonomyTree& tree, int t,
                            GateStrategy strategy);

// ---- Structured classifier --------------------------------------------

enum class InheritKind { Initial, Cil, CilTaxonomic, Tc, Tcil };

std::string to_string(InheritKind k);

struct PerturbationEntry {
  int task = 0;
  NodeId node = kNoNode;
  std::vector<double> v;  // width = feature dimension at that task
};

// Parameters of the last inheritance step, enough to rebuild the explicit
// I, E and R matrices.
struct InheritanceRecord {
  InheritKind kind = InheritKind::Initial;
  int task = 0;
  std::size_t prev_rows = 0;
  std::size_t expanded_row = 0;
  std::size_t n_new = 0;
  std::size_t d_prev = 0;
  std::size_t d_new = 0;
  std::vector<bool> gate;  // per feature segment
  Mat r_init;              // R at initialization, rows x d_new
};

// Classifier matrix M (rows = label set, columns = feature dimension) with
// entry-level freeze and gate masks.
//
// Invariants maintained by the inherit_* builders:
//   * frozen entries are never updated (weights.update_mask excludes them)
//   * gate-off entries are exactly zero and never updated
//   * for Tc/Tcil, row r equals the gate-masked, zero-padded sum of
//     perturbation_log[r] once finalize_task() has run
struct StructuredClassifier {
  ParamBlock weights;
  std::vector<std::uint8_t> frozen_mask;
  std::vector<std::uint8_t> gate_mask;
  std::vector<NodeId> row_labels;
  std::vector<std::vector<PerturbationEntry>> perturbation_log;
  std::vector<std::size_t> segments;  // feature widths delta_1..delta_t
  InheritanceRecord last;

  std::size_t rows() const { return weights.value.rows; }
  std::size_t cols() const { return weights.value.cols; }
  bool frozen(std::size_t i, std::size_t j) const { return frozen_mask[i * cols() + j] != 0; }
  bool gated(std::size_t i, std::size_t j) const { return gate_mask[i * cols() + j] != 0; }

  // Pins gate-off values to zero and rebuilds weights.update_mask.
  void apply_masks();

  // Logs V = row - inherited base for the rows created by the last
  // inheritance step. Call once training of the task is complete.
  void finalize_task();

  // Gate-masked, zero-padded sum of the row's logged perturbations.
  std::vector<double> reconstruct_row(std::size_t r) const;

  // Explicit matrices of the last step: M_t = G (I M_{t-1} E) + R.
  Mat inheritance_matrix() const;
  Mat expansion() const;
  Mat refinement() const;

  // Inherited part of each new row (padded parent row), kept for logging.
  std::vector<std::vector<double>> new_row_base;
};

// Single zero row for the root over `d` features (taxonomic start).
StructuredClassifier initial_classifier(NodeId root, std::size_t d);

// Empty classifier over `d` features (flat CIL start).
StructuredClassifier empty_classifier(std::size_t d);

struct InitOptions {
  double scale = 1.0;  // multiplier on the fan-in uniform init; 0 = exact inheritance
  std::uint64_t seed = 0;
};

// Flat CIL: old rows copied top-left, everything else drawn from the init;
// no entry is frozen.
StructuredClassifier inherit_cil(const StructuredClassifier& prev, const std::vector<NodeId>& new_classes,
                                 std::size_t delta, int task, const InitOptions& init);

// Flat classifier on a taxonomic curriculum: rows move as in the TC scheme
// for initialization only; no entry is frozen.
StructuredClassifier inherit_cil_taxonomic(const StructuredClassifier& prev, std::size_t expanded_row,
                                           const std::vector<NodeId>& children, std::size_t delta,
                                           int task, const InitOptions& init);

// Taxonomic classifier on a static feature space.
StructuredClassifier inherit_tc(const StructuredClassifier& prev, std::size_t expanded_row,
                                const std::vector<NodeId>& children, int task, const InitOptions& init);

// Taxonomic classifier over an expanded feature space; only the new rows
// are trainable, restricted to gated segments.
StructuredClassifier inherit_tcil(const StructuredClassifier& prev, std::size_t expanded_row,
                                  const std::vector<NodeId>& children, std::size_t delta,
                                  const std::vector<bool>& gate, int task, const InitOptions& init);

}  // namespace tcil
