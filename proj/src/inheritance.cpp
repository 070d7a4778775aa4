#include "tcil/inheritance.hpp"

#include <cmath>
#include <stdexcept>

#include "tcil/error.hpp"

namespace tcil {

Mat sigma(std::size_t k) {
  if (k < 2) throw std::invalid_argument("sigma needs k >= 2");
  return sigma_without(k, 0);
}

Mat sigma_without(std::size_t k, std::size_t removed) {
  if (k == 0 || removed >= k) throw std::invalid_argument("sigma_without: bad row");
  Mat m(k - 1, k);
  for (std::size_t i = 0; i + 1 < k; ++i) m(i, i < removed ? i : i + 1) = 1.0;
  return m;
}

Mat psi(std::size_t n, std::size_t k, std::size_t source) {
  if (source >= k) throw std::invalid_argument("psi: bad source row");
  Mat m(n, k);
  for (std::size_t i = 0; i < n; ++i) m(i, source) = 1.0;
  return m;
}

Mat tc_inheritance_matrix(std::size_t prev_rows, std::size_t expanded_row, std::size_t n_children) {
  Mat top = sigma_without(prev_rows, expanded_row);
  Mat bottom = psi(n_children, prev_rows, expanded_row);
  Mat out(top.rows + bottom.rows, prev_rows);
  std::copy(top.data.begin(), top.data.end(), out.data.begin());
  std::copy(bottom.data.begin(), bottom.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(top.size()));
  return out;
}

Mat cil_inheritance_matrix(std::size_t prev_rows, std::size_t n_new) {
  Mat out(prev_rows + n_new, prev_rows);
  for (std::size_t i = 0; i < prev_rows; ++i) out(i, i) = 1.0;
  return out;
}

Mat expansion_matrix(std::size_t d_a, std::size_t d_b) {
  if (d_b < d_a) throw std::invalid_argument("expansion needs d_b >= d_a");
  Mat e(d_a, d_b);
  for (std::size_t i = 0; i < d_a; ++i) e(i, i) = 1.0;
  return e;
}

Mat pad_columns(const Mat& m, std::size_t d_b) {
  if (d_b < m.cols) throw std::invalid_argument("pad_columns needs d_b >= cols");
  Mat out(m.rows, d_b);
  for (std::size_t i = 0; i < m.rows; ++i)
    std::copy(m.row(i).begin(), m.row(i).end(), out.row(i).begin());
  return out;
}

std::string to_string(GateStrategy s) {
  switch (s) {
    case GateStrategy::Full: return "full";
    case GateStrategy::Hierarchical: return "hierarchical";
    case GateStrategy::Orthogonal: return "orthogonal";
  }
  return "?";
}

GateStrategy parse_gate_strategy(std::string_view name) {
  for (GateStrategy s : {GateStrategy::Full, GateStrategy::Hierarchical, GateStrategy::Orthogonal})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown gate strategy '" + std::string(name) + "'");
}

std::vector<bool> make_gate(const Curriculum& curriculum, const TaxonomyTree& tree, int t,
                            GateStrategy strategy) {
  if (t < 1 || t > curriculum.n_tasks()) throw std::out_of_range("task index out of range");
  std::vector<bool> g(static_cast<std::size_t>(t), false);
  switch (strategy) {
    case GateStrategy::Full:
      g.assign(g.size(), true);
      break;
    case GateStrategy::Orthogonal:
      g.back() = true;
      break;
    case GateStrategy::Hierarchical: {
      const NodeId node = curriculum.tasks[static_cast<std::size_t>(t - 1)].expanded_node;
      for (int i = 1; i <= t; ++i) {
        const NodeId ni = curriculum.tasks[static_cast<std::size_t>(i - 1)].expanded_node;
        g[static_cast<std::size_t>(i - 1)] = ni == node || tree.is_ancestor(ni, node);
      }
      break;
    }
  }
  return g;
}

std::string to_string(InheritKind k) {
  switch (k) {
    case InheritKind::Initial: return "initial";
    case InheritKind::Cil: return "cil";
    case InheritKind::CilTaxonomic: return "cil-taxonomic";
    case InheritKind::Tc: return "tc";
    case InheritKind::Tcil: return "tcil";
  }
  return "?";
}

void StructuredClassifier::apply_masks() {
  auto& value = weights.value.data;
  weights.update_mask.assign(value.size(), 0);
  for (std::size_t k = 0; k < value.size(); ++k) {
    if (!gate_mask[k]) value[k] = 0.0;
    weights.update_mask[k] = (!frozen_mask[k] && gate_mask[k]) ? 1 : 0;
  }
}

void StructuredClassifier::finalize_task() {
  if (last.kind != InheritKind::Tc && last.kind != InheritKind::Tcil) return;
  if (new_row_base.empty()) return;
  const std::size_t first = rows() - last.n_new;
  for (std::size_t k = 0; k < last.n_new; ++k) {
    const std::size_t r = first + k;
    PerturbationEntry e{last.task, row_labels[r], std::vector<double>(cols())};
    for (std::size_t j = 0; j < cols(); ++j) e.v[j] = weights.value(r, j) - new_row_base[k][j];
    perturbation_log[r].push_back(std::move(e));
  }
  new_row_base.clear();
}

std::vector<double> StructuredClassifier::reconstruct_row(std::size_t r) const {
  std::vector<double> out(cols(), 0.0);
  for (const auto& e : perturbation_log.at(r))
    for (std::size_t j = 0; j < e.v.size(); ++j) out[j] += e.v[j];
  for (std::size_t j = 0; j < cols(); ++j)
    if (!gated(r, j)) out[j] = 0.0;
  return out;
}

Mat StructuredClassifier::inheritance_matrix() const {
  switch (last.kind) {
    case InheritKind::Initial: return Mat::identity(rows());
    case InheritKind::Cil: return cil_inheritance_matrix(last.prev_rows, last.n_new);
    default: return tc_inheritance_matrix(last.prev_rows, last.expanded_row, last.n_new);
  }
}

Mat StructuredClassifier::expansion() const { return expansion_matrix(last.d_prev, last.d_new); }

Mat StructuredClassifier::refinement() const { return last.r_init; }

namespace {

StructuredClassifier make_classifier(std::size_t rows, std::size_t cols) {
  StructuredClassifier c;
  c.weights = ParamBlock("classifier", rows, cols);
  c.frozen_mask.assign(rows * cols, 0);
  c.gate_mask.assign(rows * cols, 1);
  c.perturbation_log.assign(rows, {});
  return c;
}

std::vector<bool> segment_columns(const std::vector<std::size_t>& segments, const std::vector<bool>& gate) {
  std::vector<bool> cols;
  for (std::size_t s = 0; s < segments.size(); ++s) cols.insert(cols.end(), segments[s], gate[s]);
  return cols;
}

// Shared construction for all inheritance kinds.
StructuredClassifier build(const StructuredClassifier& prev, InheritKind kind, std::size_t expanded_row,
                           const std::vector<NodeId>& new_labels, std::size_t delta,
                           std::vector<bool> gate, int task, const InitOptions& init) {
  const bool taxonomic = kind != InheritKind::Cil;
  const bool freeze_old = kind == InheritKind::Tc || kind == InheritKind::Tcil;
  if (taxonomic && expanded_row >= prev.rows())
    throw std::invalid_argument("expanded row " + std::to_string(expanded_row) + " out of range");

  const std::size_t d_prev = prev.cols();
  const std::size_t d_new = d_prev + delta;
  std::vector<std::size_t> segments = prev.segments;
  if (delta > 0) segments.push_back(delta);
  if (gate.empty()) gate.assign(segments.size(), true);
  if (gate.size() != segments.size())
    throw std::invalid_argument("gate length " + std::to_string(gate.size()) + " does not match " +
                                std::to_string(segments.size()) + " feature segments");
  const std::vector<bool> col_gate = segment_columns(segments, gate);

  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < prev.rows(); ++r)
    if (!taxonomic || r != expanded_row) kept.push_back(r);
  const std::size_t n_new = new_labels.size();
  const std::size_t rows = kept.size() + n_new;

  StructuredClassifier c = make_classifier(rows, d_new);
  c.segments = segments;
  c.last = {kind, task, prev.rows(), taxonomic ? expanded_row : 0, n_new, d_prev, d_new, gate,
            Mat(rows, d_new)};

  Rng rng(init.seed);
  const double bound = init.scale * std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(d_new, 1)));
  auto draw = [&]() { return bound == 0.0 ? 0.0 : rng.uniform(-bound, bound); };

  // Inherited rows keep their position order; new columns are zero.
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const std::size_t src = kept[i];
    c.row_labels.push_back(prev.row_labels[src]);
    c.perturbation_log[i] = prev.perturbation_log[src];
    for (std::size_t j = 0; j < d_new; ++j) {
      const std::size_t k = i * d_new + j;
      if (j < d_prev) {
        c.weights.value.data[k] = prev.weights.value(src, j);
        c.gate_mask[k] = prev.gate_mask[src * d_prev + j];
      } else if (!freeze_old) {
        const double v = draw();
        c.weights.value.data[k] = v;
        c.last.r_init(i, j) = v;
      }
      c.frozen_mask[k] = freeze_old ? 1 : 0;
    }
  }

  // New rows: (gated) inherited base plus the initial refinement.
  for (std::size_t n = 0; n < n_new; ++n) {
    const std::size_t i = kept.size() + n;
    c.row_labels.push_back(new_labels[n]);
    if (taxonomic) c.perturbation_log[i] = prev.perturbation_log[expanded_row];
    std::vector<double> base(d_new, 0.0);
    for (std::size_t j = 0; j < d_new; ++j) {
      const std::size_t k = i * d_new + j;
      const bool on = kind == InheritKind::Tcil ? static_cast<bool>(col_gate[j]) : true;
      if (taxonomic && j < d_prev && on) base[j] = prev.weights.value(expanded_row, j);
      const double v = on ? draw() : 0.0;
      c.weights.value.data[k] = base[j] + v;
      c.last.r_init(i, j) = v;
      c.gate_mask[k] = on ? 1 : 0;
      c.frozen_mask[k] = 0;
    }
    c.new_row_base.push_back(std::move(base));
  }
  c.apply_masks();
  return c;
}

}  // namespace

StructuredClassifier initial_classifier(NodeId root, std::size_t d) {
  StructuredClassifier c = make_classifier(1, d);
  c.row_labels = {root};
  if (d > 0) c.segments = {d};
  c.last.d_new = d;
  c.last.d_prev = d;
  c.last.prev_rows = 1;
  c.last.r_init = Mat(1, d);
  c.apply_masks();
  return c;
}

StructuredClassifier empty_classifier(std::size_t d) {
  StructuredClassifier c = make_classifier(0, d);
  if (d > 0) c.segments = {d};
  c.last.d_new = d;
  c.last.d_prev = d;
  c.apply_masks();
  return c;
}

StructuredClassifier inherit_cil(const StructuredClassifier& prev, const std::vector<NodeId>& new_classes,
                                 std::size_t delta, int task, const InitOptions& init) {
  return build(prev, InheritKind::Cil, 0, new_classes, delta, {}, task, init);
}

StructuredClassifier inherit_cil_taxonomic(const StructuredClassifier& prev, std::size_t expanded_row,
                                           const std::vector<NodeId>& children, std::size_t delta,
                                           int task, const InitOptions& init) {
  return build(prev, InheritKind::CilTaxonomic, expanded_row, children, delta, {}, task, init);
}

StructuredClassifier inherit_tc(const StructuredClassifier& prev, std::size_t expanded_row,
                                const std::vector<NodeId>& children, int task, const InitOptions& init) {
  return build(prev, InheritKind::Tc, expanded_row, children, 0, {}, task, init);
}

StructuredClassifier inherit_tcil(const StructuredClassifier& prev, std::size_t expanded_row,
                                  const std::vector<NodeId>& children, std::size_t delta,
                                  const std::vector<bool>& gate, int task, const InitOptions& init) {
  if (gate.empty()) throw std::invalid_argument("tcil inheritance needs a gate");
  return build(prev, InheritKind::Tcil, expanded_row, children, delta, gate, task, init);
}

}  // namespace tcil
