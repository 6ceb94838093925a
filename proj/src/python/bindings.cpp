// Python bindings. Configs cross the boundary as plain dicts in the same
// shape as the JSON config files; corpora and models stay opaque.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include <json.hpp>

#include "coldsan/commands.hpp"
#include "coldsan/config.hpp"
#include "coldsan/corpus_io.hpp"
#include "coldsan/error.hpp"
#include "coldsan/experiment.hpp"
#include "coldsan/stats.hpp"
#include "coldsan/synthetic.hpp"
#include "coldsan/trainer.hpp"

namespace py = pybind11;
using namespace coldsan;

// a corpus is a std::vector; keep it a bound class rather than a converted list
PYBIND11_MAKE_OPAQUE(coldsan::Corpus)

namespace {

nlohmann::json to_nlohmann(const py::object& obj) {
    if (obj.is_none())
        return nlohmann::json::object();
    const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return nlohmann::json::parse(text);
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

RunConfig run_config(const py::object& config) {
    RunConfig rc;
    apply_json(rc, to_nlohmann(config));
    rc.training.validate();
    return rc;
}

py::dict metrics_dict(const Metrics& m) {
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["macro_f1"] = m.macro_f1;
    d["f1_fake"] = m.f1_fake;
    d["f1_real"] = m.f1_real;
    d["weighted_f1"] = m.weighted_f1;
    return d;
}

std::vector<Label> parse_labels(const std::vector<std::string>& names) {
    std::vector<Label> out;
    for (const auto& n : names)
        out.push_back(parse_label(n));
    return out;
}

std::pair<Corpus, Corpus> halves(DatasetSplit s) { return {std::move(s.train), std::move(s.test)}; }

py::object report_dict(const ExperimentReport& report) {
    py::list records;
    std::istringstream lines(serialize_report(report));
    for (std::string line; std::getline(lines, line);)
        records.append(to_python(nlohmann::json::parse(line)));
    return records;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "cold-start fake news detection with a structure adversarial network";

    // exception types live as long as the interpreter; the handles are never released
    static PyObject* const base = py::exception<Error>(m, "Error").release().ptr();
    static PyObject* const config_error = py::exception<Error>(m, "ConfigError", base).release().ptr();
    static PyObject* const data_error = py::exception<Error>(m, "DataError", base).release().ptr();
    static PyObject* const numeric_error = py::exception<Error>(m, "NumericError", base).release().ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            PyObject* type = e.kind() == ErrorKind::config    ? config_error
                             : e.kind() == ErrorKind::numeric ? numeric_error
                                                              : data_error;
            PyErr_SetString(type, e.what());
        }
    });

    py::class_<Corpus>(m, "Corpus")
        .def_static("load", &load_dataset, py::arg("path"))
        .def_static(
            "synthetic",
            [](const py::object& config, std::uint64_t seed) {
                SyntheticConfig sc;
                apply_json(sc, to_nlohmann(config));
                return generate_synthetic(sc, seed);
            },
            py::arg("config") = py::none(), py::arg("seed") = 0)
        .def("save", [](const Corpus& c, const std::filesystem::path& p) { save_dataset(c, p); }, py::arg("path"))
        .def("__len__", &Corpus::size)
        .def_property_readonly("ids",
                               [](const Corpus& c) {
                                   std::vector<std::string> out;
                                   for (const auto& s : c)
                                       out.push_back(s.id);
                                   return out;
                               })
        .def_property_readonly("labels",
                               [](const Corpus& c) {
                                   std::vector<std::string> out;
                                   for (const auto& s : c)
                                       out.emplace_back(to_string(s.label));
                                   return out;
                               })
        .def_property_readonly("events",
                               [](const Corpus& c) {
                                   std::vector<std::optional<std::string>> out;
                                   for (const auto& s : c)
                                       out.push_back(s.event);
                                   return out;
                               })
        .def_property_readonly("dimension", &corpus_dimension)
        .def("summary",
             [](const Corpus& c) {
                 const auto s = summarize(c);
                 py::dict d;
                 d["fake"] = s.fake;
                 d["real"] = s.real;
                 d["with_tree"] = s.with_tree;
                 d["per_event"] = s.per_event;
                 d["mean_depth_fake"] = s.mean_depth_fake;
                 d["mean_depth_real"] = s.mean_depth_real;
                 return d;
             })
        .def("stripped", [](const Corpus& c) { return strip_propagation(c); })
        .def(
            "split",
            [](const Corpus& c, double ratio, std::uint64_t seed, bool stratified) {
                return halves(split_general(c, ratio, seed, stratified));
            },
            py::arg("train_ratio") = 0.75, py::arg("seed") = 0, py::arg("stratified") = false)
        .def("hold_out", [](const Corpus& c, const std::string& event) { return halves(split_event_aware(c, event)); },
             py::arg("event"));

    py::class_<Model>(m, "Model")
        .def_static("load", &load_checkpoint, py::arg("path"))
        .def("save", [](const Model& model, const std::filesystem::path& p) { save_checkpoint(model, p); },
             py::arg("path"))
        .def_property_readonly("encoder", [](const Model& model) { return std::string(to_string(model.config.encoder)); })
        .def_property_readonly("d_h", [](const Model& model) { return model.config.d_h; })
        .def(
            "predict",
            [](const Model& model, const Corpus& c) {
                const auto r = predict(model, c);
                std::vector<std::string> labels;
                for (auto l : r.labels)
                    labels.emplace_back(to_string(l));
                return py::make_tuple(labels, r.probabilities);
            },
            py::arg("corpus"), "Predicted labels and (fake, real) probabilities.")
        .def(
            "encode",
            [](const Model& model, const Corpus& c) {
                std::vector<std::vector<double>> out;
                for (auto& h : encode_samples(model, c))
                    out.push_back(std::move(h.h));
                return out;
            },
            py::arg("corpus"), "Hidden representation of every sample.");

    m.def(
        "train",
        [](const Corpus& train, const py::object& config, std::optional<std::uint64_t> seed) {
            RunConfig rc = run_config(config);
            if (seed)
                rc.training.seed = *seed;
            DatasetSplit split;
            split.train = train;
            py::gil_scoped_release release;
            return rc.mode == TrainMode::san ? train_san(split, rc.training).model
                                             : train_vanilla(split, rc.training).model;
        },
        py::arg("corpus"), py::arg("config") = py::none(), py::arg("seed") = py::none(),
        "Train on every sample of `corpus`; `config` follows the JSON config layout.");

    m.def(
        "evaluate",
        [](const Model& model, const Corpus& test) {
            const auto r = evaluate_model(model, test);
            py::dict d;
            d["cold"] = metrics_dict(r.cold);
            d["warm"] = r.warm ? py::object(metrics_dict(*r.warm)) : py::none();
            return d;
        },
        py::arg("model"), py::arg("test"), "Cold-start metrics, plus warm ones when the test set has trees.");

    m.def(
        "run_experiment",
        [](const Corpus& corpus, const py::object& config) {
            const RunConfig rc = run_config(config);
            ExperimentReport report;
            {
                py::gil_scoped_release release;
                report = run_experiment(corpus, rc);
            }
            return report_dict(report);
        },
        py::arg("corpus"), py::arg("config") = py::none(), "Report records as written to a report file.");

    m.def(
        "metrics",
        [](const std::vector<std::string>& predictions, const std::vector<std::string>& labels) {
            return metrics_dict(metrics(confusion(parse_labels(predictions), parse_labels(labels))));
        },
        py::arg("predictions"), py::arg("labels"));

    m.def(
        "paired_t_test",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            const auto r = paired_t_test(a, b);
            py::dict d;
            d["t"] = r.t;
            d["df"] = r.df;
            d["p_value"] = r.p_value;
            d["mean_difference"] = r.mean_difference;
            return d;
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "gradcheck",
        [](const py::object& config, std::uint64_t seed) {
            const auto rows = run_gradcheck(run_config(config), seed);
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["encoder"] = std::string(to_string(r.encoder));
                d["max_relative_error"] = r.result.max_relative_error;
                d["parameters"] = r.result.checked;
                d["passed"] = r.passed;
                out.append(d);
            }
            return out;
        },
        py::arg("config") = py::none(), py::arg("seed") = 0);

    m.def(
        "default_config", [] { return to_python(to_json(RunConfig{})); }, "The full default configuration.");

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "coldsan");
            std::vector<const char*> argv;
            for (const auto& a : args)
                argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command line; returns (exit code, stdout, stderr).");
}
