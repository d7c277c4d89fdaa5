#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "advmt/baselines.hpp"
#include "advmt/checkpoint.hpp"
#include "advmt/commands.hpp"
#include "advmt/evalkit.hpp"
#include "advmt/evaluation.hpp"

#include <iostream>

namespace py = pybind11;
using namespace advmt;

namespace {

py::tuple as_tuple(const Correlation& c) { return py::make_tuple(c.coefficient, c.p_value); }

BleuSmoothing smoothing_from(bool smooth) { return smooth ? BleuSmoothing::AddOne : BleuSmoothing::None; }

// A loaded checkpoint; scoring takes whitespace-tokenized strings.
class Scorer {
 public:
  explicit Scorer(const std::filesystem::path& path) : ck_(load_checkpoint(path)) {}

  std::vector<std::string> tasks() const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < ck_.model.task_count(); ++k) out.push_back(ck_.model.task(static_cast<int>(k)).name);
    return out;
  }

  double score(const std::string& task, const std::string& query, const std::string& reply) const {
    const int k = index(task);
    const auto& v = ck_.model.task(k).vocab;
    return ck_.model.score(k, v.encode(split_tokens(query)), v.encode(split_tokens(reply)));
  }

  std::vector<double> score_many(const std::string& task, const std::vector<std::pair<std::string, std::string>>& rows,
                                 unsigned threads) const {
    std::vector<TokenizedPair> pairs;
    for (const auto& [q, r] : rows) pairs.push_back({split_tokens(q), split_tokens(r)});
    py::gil_scoped_release release;
    return score_pairs(ck_.model, index(task), pairs, threads);
  }

  std::vector<double> shared_features(const std::string& task, const std::string& query,
                                      const std::string& reply) const {
    const int k = index(task);
    const auto& v = ck_.model.task(k).vocab;
    const Tensor t = ck_.model.shared_features(k, {v.encode(split_tokens(query)), v.encode(split_tokens(reply))});
    return {t.values().begin(), t.values().end()};
  }

  std::string architecture() const { return architecture_str(ck_.model.config().architecture); }

 private:
  int index(const std::string& task) const {
    try {
      return ck_.model.task_index(task);
    } catch (const std::out_of_range&) {
      throw py::key_error("unknown task '" + task + "'");
    }
  }

  LoadedCheckpoint ck_;
};

}  // namespace

PYBIND11_MODULE(_advmt, m) {
  m.doc() = "Adversarial multi-task neural dialogue evaluation metric";

  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<UndefinedCorrelation>(m, "UndefinedCorrelation", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", data_error.ptr());

  m.def("bleu", [](const std::vector<std::string>& hyp, const std::vector<std::string>& ref, int max_n,
                   bool smooth) { return bleu(hyp, ref, max_n, smoothing_from(smooth)); },
        py::arg("hypothesis"), py::arg("reference"), py::arg("max_n") = 4, py::arg("smooth") = true);
  m.def("rouge_l", [](const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    return rouge_l(hyp, ref);
  }, py::arg("hypothesis"), py::arg("reference"));

  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return as_tuple(pearson(x, y)); },
        "(coefficient, two-sided p-value)");
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) {
    return as_tuple(spearman(x, y));
  }, "(coefficient, two-sided p-value); ties get average ranks");
  m.def("minmax_normalize", [](const std::vector<double>& s) { return minmax_normalize(s); });
  m.def("blend", [](double referenced, double unreferenced, const std::string& strategy) {
    return blend(referenced, unreferenced, parse_blend_strategy(strategy));
  }, py::arg("referenced"), py::arg("unreferenced"), py::arg("strategy") = "geometric");

  m.def("build_vocab", [](const std::filesystem::path& corpus, int min_frequency) {
    return build_vocab(corpus, min_frequency).tokens();
  }, py::arg("corpus"), py::arg("min_frequency") = 1, "Token list of a corpus, index = id");

  m.def("train", [](const std::filesystem::path& config, const std::string& checkpoint, const std::string& log) {
    const Config c = read_config(config);
    TrainResult r = [&] {
      py::gil_scoped_release release;
      return train_from_config(c, checkpoint, log);
    }();
    py::dict out;
    out["steps"] = r.log.size();
    out["best_step"] = r.best_step;
    out["best_dev_accuracy"] = r.best_dev_accuracy;
    out["warnings"] = r.warnings;
    return out;
  }, py::arg("config"), py::arg("checkpoint"), py::arg("log") = "");

  m.def("gradcheck", [](std::uint64_t seed) {
    GradCheckOptions o;
    o.seed = seed;
    const auto r = check_model_gradient(o);
    return py::make_tuple(r.max_relative_error, r.coordinates);
  }, py::arg("seed") = 7, "(max relative error, coordinates checked) on the tiny default model");

  m.def("cli", [](const std::vector<std::string>& args) {
    py::gil_scoped_release release;
    return run_cli(args, std::cout, std::cerr);
  }, "Run the advmt command line with the given arguments; returns the exit status");

  py::class_<Scorer>(m, "Scorer")
      .def(py::init<const std::filesystem::path&>(), py::arg("checkpoint"))
      .def_property_readonly("tasks", &Scorer::tasks)
      .def_property_readonly("architecture", &Scorer::architecture)
      .def("score", &Scorer::score, py::arg("task"), py::arg("query"), py::arg("reply"))
      .def("score_many", &Scorer::score_many, py::arg("task"), py::arg("rows"), py::arg("threads") = 1)
      .def("shared_features", &Scorer::shared_features, py::arg("task"), py::arg("query"), py::arg("reply"));
}
