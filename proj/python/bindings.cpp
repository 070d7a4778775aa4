#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tcil/curriculum.hpp"
#include "tcil/datagen.hpp"
#include "tcil/error.hpp"
#include "tcil/eval.hpp"
#include "tcil/experiment.hpp"
#include "tcil/inheritance.hpp"
#include "tcil/taxonomy.hpp"
#include "tcil/verify.hpp"

namespace py = pybind11;
using namespace tcil;

namespace {

std::vector<std::vector<double>> to_lists(const Mat& m) {
  std::vector<std::vector<double>> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

py::dict task_dict(const Task& t) {
  py::dict d;
  d["index"] = t.index;
  d["expanded_node"] = t.expanded_node;
  d["expanded_row"] = t.expanded_row;
  d["new_classes"] = t.new_classes;
  d["label_set"] = t.label_set;
  return d;
}

py::dict curriculum_dict(const Curriculum& c) {
  py::list tasks;
  for (const auto& t : c.tasks) tasks.append(task_dict(t));
  py::dict d;
  d["policy"] = to_string(c.policy);
  d["n_coarse"] = c.n_coarse;
  d["n_fine"] = c.n_fine;
  d["tasks"] = tasks;
  return d;
}

}  // namespace

PYBIND11_MODULE(_tcil, m) {
  m.doc() = "taxonomic class-incremental learning core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<TaxonomyTree>(m, "TaxonomyTree")
      .def_static("from_shape", [](const std::string& s) { return make_balanced_tree(parse_shape(s)); })
      .def_static("parse", [](const std::string& text) { return parse_taxonomy(text); })
      .def("serialize", [](const TaxonomyTree& t) { return serialize_taxonomy(t); })
      .def("__len__", &TaxonomyTree::size)
      .def_property_readonly("root", &TaxonomyTree::root)
      .def_property_readonly("height", &TaxonomyTree::height)
      .def("parent", &TaxonomyTree::parent)
      .def("children", &TaxonomyTree::children)
      .def("depth", &TaxonomyTree::depth)
      .def("name", &TaxonomyTree::name)
      .def("is_leaf", &TaxonomyTree::is_leaf)
      .def("leaves", &TaxonomyTree::leaves)
      .def("internal_nodes", &TaxonomyTree::internal_nodes)
      .def("ancestors", &TaxonomyTree::ancestors);

  m.def(
      "curriculum",
      [](const TaxonomyTree& tree, const std::string& policy, std::uint64_t seed, std::size_t group_size) {
        const Traversal p = parse_traversal(policy);
        return curriculum_dict(is_taxonomic(p) ? generate_taxonomic(tree, p, seed)
                                               : generate_flat(tree, p, group_size, seed));
      },
      py::arg("tree"), py::arg("policy") = "bfs", py::arg("seed") = 0, py::arg("group_size") = 0,
      "Task sequence as a dict with n_coarse, n_fine and a task list.");

  m.def(
      "split",
      [](const TaxonomyTree& tree, const std::vector<NodeId>& labels, const std::vector<double>& rates,
         std::uint64_t seed) {
        LabeledDataset d;
        d.labels = labels;
        return split(d, tree, rates, seed).samples;
      },
      py::arg("tree"), py::arg("labels"), py::arg("rates"), py::arg("seed") = 0,
      "Per-node index lists for examples labeled with leaf ids.");

  m.def(
      "summarize",
      [](const std::vector<double>& acc, int n_coarse, int n_fine) {
        const Summary s = summarize({acc, n_coarse, n_fine});
        return py::make_tuple(s.acc_last, s.avg_acc);
      },
      py::arg("accuracies"), py::arg("n_coarse"), py::arg("n_fine"), "(Acc@1, AvgAcc)");

  m.def("sigma", [](std::size_t k) { return to_lists(sigma(k)); });
  m.def("tc_inheritance_matrix",
        [](std::size_t prev_rows, std::size_t row, std::size_t n) { return to_lists(tc_inheritance_matrix(prev_rows, row, n)); });
  m.def("expansion_matrix", [](std::size_t a, std::size_t b) { return to_lists(expansion_matrix(a, b)); });

  m.def(
      "run",
      [](const std::string& config_text, const std::filesystem::path& base_dir, bool write_files) {
        ExperimentConfig c = parse_experiment_config(config_text, base_dir);
        std::vector<MetricRecord> records;
        {
          py::gil_scoped_release release;
          if (write_files) {
            records = run_experiment(c).records;
          } else {
            const TaxonomyTree tree = experiment_tree(c);
            for (const auto& name : c.modes)
              for (std::uint64_t seed : c.seeds) {
                auto arm = run_arm(c, tree, parse_mode_spec(name), seed);
                records.insert(records.end(), arm.records.begin(), arm.records.end());
              }
          }
        }
        py::list out;
        for (const auto& r : records) {
          py::dict d;
          d["seed"] = r.seed;
          d["mode"] = r.mode;
          d["task"] = r.task;
          d["n_classes"] = r.n_classes;
          d["accuracy"] = r.accuracy;
          out.append(d);
        }
        return out;
      },
      py::arg("config_text"), py::arg("base_dir") = std::filesystem::path(), py::arg("write_files") = false,
      "Runs an experiment from config text; returns one record per (mode, seed, task).");

  m.def(
      "verify",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : run_verification(seed)) out.append(py::make_tuple(r.name, r.passed, r.detail));
        return out;
      },
      py::arg("seed") = 0);
}
