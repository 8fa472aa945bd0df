// SPDX-License-Identifier: Apache-2.0
//
// Thin Python layer over the C++ core. Models and datasets stay opaque C++
// objects; reports come back as plain dicts.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rnngen/bounds.hpp"
#include "rnngen/cells.hpp"
#include "rnngen/data.hpp"
#include "rnngen/errors.hpp"
#include "rnngen/model_io.hpp"
#include "rnngen/norm_audit.hpp"
#include "rnngen/train.hpp"
#include "rnngen/verify.hpp"

namespace py = pybind11;
using namespace rnngen;

namespace {

py::dict bound_dict(const BoundReport& r) {
  py::dict d;
  d["id"] = r.id;
  d["value"] = r.value;
  d["log_value"] = r.log_value;
  d["overflow"] = r.overflow;
  d["order_only"] = r.order_only;
  d["regime"] = std::string(to_string(r.regime));
  d["beta"] = r.beta;
  d["t"] = r.t;
  d["m"] = r.m;
  d["gamma"] = r.gamma;
  return d;
}

py::dict trial_dict(const TrialReport& r) {
  py::dict d;
  d["kind"] = r.kind;
  d["trials"] = r.trials;
  d["violations"] = r.violations;
  d["worst_ratio"] = r.worst_ratio;
  d["seed"] = r.seed;
  return d;
}

NormProfile profile_for(const Model& model, const SequenceDataset* data) {
  return data ? audit(model, *data) : audit(model);
}

}  // namespace

PYBIND11_MODULE(_rnngen, m) {
  m.doc() = "Norm audits, generalization bounds and inequality checks for recurrent cells.";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<Model>(m, "Model")
      .def_property_readonly("cell_type", [](const Model& x) { return std::string(to_string(x.cell())); })
      .def("to_json", [](const Model& x) { return model_to_json(x); })
      .def("forward",
           [](const Model& x, const Sequence& xs) { return forward(x, xs).y; },
           py::arg("inputs"), "Outputs y_1..y_T for one input sequence.");

  py::class_<SequenceDataset>(m, "Dataset")
      .def_property_readonly("m", &SequenceDataset::m)
      .def_property_readonly("T", &SequenceDataset::T)
      .def_readonly("d_x", &SequenceDataset::d_x)
      .def_readonly("K", &SequenceDataset::K)
      .def_readonly("B_x", &SequenceDataset::B_x)
      .def_readonly("inputs", &SequenceDataset::inputs)
      .def_readonly("labels", &SequenceDataset::labels)
      .def("to_json", [](const SequenceDataset& x) { return dataset_to_json(x); });

  m.def("model_from_json", [](const std::string& s) { return model_from_json(s); });
  m.def("load_model", &load_model, py::arg("path"));
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("dataset_from_json", [](const std::string& s) { return dataset_from_json(s); });
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_dataset", &save_dataset, py::arg("data"), py::arg("path"));

  m.def(
      "audit",
      [](const Model& model, const SequenceDataset* data) {
        const NormProfile p = profile_for(model, data);
        py::list rows;
        for (const MatrixNorms& n : p.matrices) {
          py::dict d;
          d["matrix"] = n.name;
          d["rows"] = n.rows;
          d["cols"] = n.cols;
          d["spectral"] = n.spectral;
          d["frobenius"] = n.frobenius;
          d["two_one"] = n.two_one;
          rows.append(d);
        }
        return rows;
      },
      py::arg("model"), py::arg("data") = nullptr);

  m.def("spectral_norm",
        [](const std::vector<std::vector<double>>& rows) {
          const std::size_t r = rows.size(), c = r ? rows.front().size() : 0;
          std::vector<double> flat;
          for (const auto& row : rows) {
            if (row.size() != c) throw InvalidInput("spectral_norm: ragged rows");
            flat.insert(flat.end(), row.begin(), row.end());
          }
          return spectral_norm(Matrix(r, c, std::move(flat)));
        },
        py::arg("rows"));

  m.def(
      "bound",
      [](const Model& model, double gamma, int t, std::size_t m_samples, double delta,
         const SequenceDataset* data) {
        const BoundQuery q = make_query(model, profile_for(model, data), t, m_samples, gamma, delta);
        py::dict out;
        switch (model.cell()) {
          case CellType::vanilla:
            out["vanilla_erc"] = bound_dict(vanilla_erc_bound(q));
            out["refined_21"] = bound_dict(refined_21_bound(q));
            out["pacbayes"] = bound_dict(pacbayes_bound(q));
            break;
          case CellType::mgu: out["mgu"] = bound_dict(mgu_bound(q)); break;
          case CellType::lstm: out["lstm"] = bound_dict(lstm_bound(q)); break;
          case CellType::conv: out["conv"] = bound_dict(conv_bound(q)); break;
        }
        return out;
      },
      py::arg("model"), py::arg("gamma"), py::arg("t"), py::arg("m"), py::arg("delta") = 0.05,
      py::arg("data") = nullptr,
      "Bounds for the model's cell. Gated cells need `data` for gate statistics.");

  m.def(
      "compare",
      [](const Model& model, double gamma, int t, std::size_t m_samples, double delta) {
        const BoundQuery q = make_query(model, audit(model), t, m_samples, gamma, delta);
        py::list out;
        for (const BoundReport& r : comparison_bounds(q)) out.append(bound_dict(r));
        return out;
      },
      py::arg("model"), py::arg("gamma"), py::arg("t"), py::arg("m"), py::arg("delta") = 0.05);

  m.def(
      "verify_hidden_norm",
      [](const std::string& cell, std::size_t trials, std::uint64_t seed) {
        return trial_dict(
            verify_hidden_norm(cell_type_from_string(cell), WeightSampler{}, DataSampler{}, trials, seed));
      },
      py::arg("cell"), py::arg("trials") = 200, py::arg("seed") = 0);

  m.def(
      "verify_output_lipschitz",
      [](const std::string& cell, std::size_t trials, double scale, std::uint64_t seed) {
        return trial_dict(verify_output_lipschitz(cell_type_from_string(cell), WeightSampler{},
                                                  DataSampler{}, scale, trials, seed));
      },
      py::arg("cell"), py::arg("trials") = 200, py::arg("scale") = 0.1, py::arg("seed") = 0);

  m.def(
      "verify_margin_lipschitz",
      [](std::size_t trials, std::size_t dim, std::uint64_t seed) {
        const MarginLipschitzReport r = verify_margin_lipschitz(trials, dim, seed);
        py::dict d;
        d["factor_two"] = trial_dict(r.factor_two);
        d["unit_constant"] = trial_dict(r.unit_constant);
        return d;
      },
      py::arg("trials") = 1000, py::arg("dim") = 3, py::arg("seed") = 0);

  m.def(
      "verify_conv_orthogonality",
      [](std::size_t k, std::size_t d, std::size_t trials, std::uint64_t seed, bool scaled) {
        return trial_dict(verify_conv_orthogonality(k, d, trials, seed, scaled));
      },
      py::arg("k"), py::arg("d"), py::arg("trials") = 100, py::arg("seed") = 0,
      py::arg("scaled") = true);

  m.def(
      "gen_synthetic",
      [](std::size_t m_samples, std::size_t T, std::size_t d_x, int K, const std::string& rule,
         std::uint64_t seed, double B_x) {
        return gen_synthetic(m_samples, T, d_x, K, label_rule_from_string(rule), seed, B_x).data;
      },
      py::arg("m"), py::arg("T"), py::arg("d_x"), py::arg("K") = 2,
      py::arg("rule") = "running-sign", py::arg("seed") = 0, py::arg("B_x") = 1.0);

  m.def(
      "train",
      [](const SequenceDataset& data, int epochs, double lr, std::size_t batch, std::size_t d_h,
         std::optional<double> target_B_U, double gamma, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = lr;
        cfg.batch_size = batch;
        cfg.d_h = d_h;
        cfg.target_spectral_U = target_B_U;
        cfg.gamma = gamma;
        cfg.seed = seed;
        TrainResult res;
        {
          py::gil_scoped_release release;
          res = train_vanilla(data, cfg);
        }
        py::list log;
        for (const EpochLog& e : res.log) {
          py::dict d;
          d["epoch"] = e.epoch;
          d["loss"] = e.loss;
          d["ramp_risk"] = e.ramp_risk;
          d["zero_one"] = e.zero_one;
          d["B_U"] = e.B_U;
          log.append(d);
        }
        return py::make_tuple(res.model, log, res.diverged);
      },
      py::arg("data"), py::arg("epochs") = 100, py::arg("lr") = 0.05, py::arg("batch") = 16,
      py::arg("d_h") = 8, py::arg("target_B_U") = py::none(), py::arg("gamma") = 0.5,
      py::arg("seed") = 0, "Returns (model, epoch log, diverged).");
}
