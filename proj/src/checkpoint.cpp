#include "tcil/checkpoint.hpp"

#include <json.hpp>
#include <stdexcept>

#include "tcil/error.hpp"

namespace tcil {

using nlohmann::json;

namespace {

json block_json(const ParamBlock& b) {
  return {{"name", b.name}, {"rows", b.value.rows}, {"cols", b.value.cols}, {"value", b.value.data}};
}

void read_block(const json& j, ParamBlock& b) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  if (rows != b.value.rows || cols != b.value.cols)
    throw ParseError("checkpoint block " + b.name + " has the wrong shape");
  auto value = j.at("value").get<std::vector<double>>();
  if (value.size() != rows * cols) throw ParseError("checkpoint block " + b.name + " is truncated");
  b.value.data = std::move(value);
  b.zero_grad();
  std::fill(b.velocity.data.begin(), b.velocity.data.end(), 0.0);
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

}  // namespace

std::string save_checkpoint(const IncrementalLearner& learner) {
  json j;
  j["format"] = "tcil-checkpoint";
  j["version"] = kCheckpointVersion;
  j["tasks_done"] = learner.tasks_done();
  j["mode"] = to_string(learner.config().mode);
  j["rng"] = learner.rng().state();

  const auto& bb = learner.backbone();
  json exts = json::array();
  for (std::size_t i = 0; i < bb.size(); ++i) {
    const auto& e = bb.extractor(i);
    json blocks = json::array();
    for (const ParamBlock* p : e.params()) blocks.push_back(block_json(*p));
    exts.push_back({{"frozen", e.frozen()}, {"delta", e.delta()}, {"blocks", blocks}});
  }
  j["backbone"] = {{"input_dim", bb.input_dim()}, {"hidden", bb.hidden()}, {"extractors", exts}};

  const auto& c = learner.classifier();
  json log = json::array();
  for (const auto& entries : c.perturbation_log) {
    json row = json::array();
    for (const auto& e : entries) row.push_back({{"task", e.task}, {"node", e.node}, {"v", e.v}});
    log.push_back(row);
  }
  j["classifier"] = {{"rows", c.rows()},           {"cols", c.cols()},
                     {"value", c.weights.value.data}, {"frozen_mask", c.frozen_mask},
                     {"gate_mask", c.gate_mask},    {"row_labels", c.row_labels},
                     {"segments", c.segments},      {"perturbation_log", log}};

  json entries = json::object();
  for (const auto& [cls, idx] : learner.buffer().entries) entries[std::to_string(cls)] = idx;
  j["buffer"] = {{"capacity", learner.buffer().capacity}, {"entries", entries}};
  return j.dump(1) + "\n";
}

void load_checkpoint(IncrementalLearner& learner, std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "tcil-checkpoint") throw ParseError("not a checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ParseError("unsupported checkpoint version " + std::to_string(version));
    if (j.at("mode").get<std::string>() != to_string(learner.config().mode))
      throw ParseError("checkpoint was written for mode " + j.at("mode").get<std::string>());

    const json& jb = j.at("backbone");
    ExpandingBackbone bb(jb.at("input_dim").get<std::size_t>(), jb.at("hidden").get<std::size_t>());
    if (bb.input_dim() != learner.backbone().input_dim() || bb.hidden() != learner.backbone().hidden())
      throw ParseError("checkpoint backbone shape differs from the learner");
    for (const json& je : jb.at("extractors")) {
      bb.expand(je.at("delta").get<std::size_t>(), 0);
      auto& e = bb.extractor(bb.size() - 1);
      auto params = e.params();
      const json& blocks = je.at("blocks");
      if (blocks.size() != params.size()) throw ParseError("extractor block count mismatch");
      for (std::size_t k = 0; k < params.size(); ++k) read_block(blocks[k], *params[k]);
    }
    // expand() freezes older extractors; flags come from the file.
    std::size_t i = 0;
    for (const json& je : jb.at("extractors")) bb.extractor(i++).set_frozen(je.at("frozen").get<bool>());

    const json& jc = j.at("classifier");
    StructuredClassifier c;
    const auto rows = jc.at("rows").get<std::size_t>();
    const auto cols = jc.at("cols").get<std::size_t>();
    c.weights = ParamBlock("classifier", rows, cols);
    c.weights.value.data = jc.at("value").get<std::vector<double>>();
    c.frozen_mask = jc.at("frozen_mask").get<std::vector<std::uint8_t>>();
    c.gate_mask = jc.at("gate_mask").get<std::vector<std::uint8_t>>();
    c.row_labels = jc.at("row_labels").get<std::vector<NodeId>>();
    c.segments = jc.at("segments").get<std::vector<std::size_t>>();
    if (c.weights.value.data.size() != rows * cols || c.frozen_mask.size() != rows * cols ||
        c.gate_mask.size() != rows * cols || c.row_labels.size() != rows)
      throw ParseError("classifier arrays do not match its shape");
    for (const json& jr : jc.at("perturbation_log")) {
      std::vector<PerturbationEntry> row;
      for (const json& je : jr)
        row.push_back({je.at("task").get<int>(), je.at("node").get<NodeId>(), je.at("v").get<std::vector<double>>()});
      c.perturbation_log.push_back(std::move(row));
    }
    if (c.perturbation_log.size() != rows) throw ParseError("perturbation log does not match rows");
    c.last.d_prev = c.last.d_new = cols;
    c.last.prev_rows = rows;
    c.last.r_init = Mat(rows, cols);
    c.apply_masks();

    RehearsalBuffer buffer;
    buffer.capacity = j.at("buffer").at("capacity").get<std::size_t>();
    for (const auto& [key, idx] : j.at("buffer").at("entries").items())
      buffer.entries[static_cast<NodeId>(std::stoi(key))] = idx.get<std::vector<std::size_t>>();

    Rng rng;
    rng.set_state(j.at("rng").get<std::string>());

    learner.backbone() = std::move(bb);
    learner.classifier() = std::move(c);
    learner.buffer() = std::move(buffer);
    learner.rng() = rng;
    learner.restore_position(j.at("tasks_done").get<int>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

std::string inheritance_dump(const StructuredClassifier& cls) {
  json j;
  j["task"] = cls.last.task;
  j["kind"] = to_string(cls.last.kind);
  j["expanded_row"] = cls.last.expanded_row;
  j["gate"] = cls.last.gate;
  j["I"] = mat_json(cls.inheritance_matrix());
  j["E"] = mat_json(cls.expansion());
  j["R"] = mat_json(cls.refinement());
  return j.dump() + "\n";
}

}  // namespace tcil
