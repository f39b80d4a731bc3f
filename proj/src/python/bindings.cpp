// Copyright 2026 The fbtomo developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "fbtomo/experiments.hpp"

namespace py = pybind11;
using namespace fbt;

namespace {

nlohmann::json to_json(py::handle obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) return obj.cast<long long>();
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::dict>(obj)) {
    nlohmann::json j = nlohmann::json::object();
    for (auto item : obj.cast<py::dict>())
      j[item.first.cast<std::string>()] = to_json(item.second);
    return j;
  }
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    nlohmann::json j = nlohmann::json::array();
    for (auto item : obj.cast<py::sequence>()) j.push_back(to_json(item));
    return j;
  }
  throw std::invalid_argument("cannot convert python object to a config value");
}

py::object from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned:
      return py::int_(j.get<long long>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& item : j) out.append(from_json(item));
      return out;
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [key, value] : j.items()) out[py::str(key)] = from_json(value);
      return out;
    }
    default: throw std::runtime_error("unsupported json value");
  }
}

ObservationRecord record_from_dict(py::handle obj) {
  return record_from_json(to_json(obj));
}

py::dict record_to_dict(const ObservationRecord& rec) {
  return from_json(record_to_json(rec)).cast<py::dict>();
}

}  // namespace

PYBIND11_MODULE(_fbtomo, m) {
  m.doc() = "Streaming Bayesian gate set tomography core";

  // --- Pauli algebra ---
  m.def("ptm_from_unitary", &ptm_from_unitary, py::arg("u"), py::arg("tol") = 1e-10);
  m.def("compose", &compose, py::arg("a"), py::arg("b"));
  m.def("ptm_to_choi", &ptm_to_choi);
  m.def("choi_to_ptm", &choi_to_ptm);
  m.def("pauli_labels", [](int n_qubits) { return PauliBasis::make(n_qubits).labels; },
        py::arg("n_qubits") = 2);

  // --- parity effects ---
  m.def("parity_effects", [] {
    const ParityEffects eff = make_parity_effects();
    return py::make_tuple(Vec(eff.odd.transpose()), Vec(eff.even.transpose()));
  });
  m.def("parity_povm_odd", [] { return Vec(parity_povm_odd().transpose()); });
  m.def("parity_povm_even", [] { return Vec(parity_povm_even().transpose()); });

  // --- gate sets ---
  py::class_<NoisyGateSet>(m, "GateSet")
      .def_readonly("labels", &NoisyGateSet::labels)
      .def("ideal", [](const NoisyGateSet& gs, const std::string& g) {
        return gs.ideal_of(g);
      })
      .def("noise", [](const NoisyGateSet& gs, const std::string& g) {
        return gs.noise_of(g);
      })
      .def("set_noise", [](NoisyGateSet& gs, const std::string& g, const Mat& m) {
        gs.noise_of(g) = m;
      })
      .def_readonly("rho0", &NoisyGateSet::rho0)
      .def_property_readonly("effect0",
                             [](const NoisyGateSet& gs) { return Vec(gs.effect0.transpose()); })
      .def("exact_outcome",
           [](const NoisyGateSet& gs, const GateSequence& seq, const std::string& proj) {
             return exact_outcome(gs, seq, nullptr, proj);
           },
           py::arg("sequence"), py::arg("projection") = "native")
      .def("to_json", [](const NoisyGateSet& gs) { return from_json(gateset_to_json(gs)); });
  m.def("ideal_gateset", [](const std::string& variant) {
    if (variant == "cz") return ideal_two_qubit_gateset(CzVariant::cz);
    if (variant == "dcz") return ideal_two_qubit_gateset(CzVariant::dcz);
    throw std::invalid_argument("variant must be cz or dcz");
  }, py::arg("variant") = "cz");
  m.def("gateset_from_dict",
        [](py::handle doc) { return gateset_from_json(to_json(doc)); });

  // --- post-processing ---
  m.def("cptp_project", [](const Mat& ptm) {
    CptpInfo info;
    Mat out = cptp_project(ptm, &info);
    return py::make_tuple(out, info.correction_norm);
  });
  m.def("error_generator", &error_generator);
  m.def("decompose_generator", [](const Mat& gen) {
    const auto dec = decompose_generator(
        gen, gen.rows() == 16 ? PauliBasis::two_qubit() : PauliBasis::one_qubit());
    py::dict out;
    out["h"] = dec.h;
    out["s"] = dec.s;
    out["c"] = dec.c;
    out["a"] = dec.a;
    out["residual_norm"] = dec.residual_norm;
    return out;
  });
  m.def("infidelity_report", [](const Mat& noise_ptm) {
    const auto rep = infidelity_report(noise_ptm);
    py::dict out;
    out["eps_ent"] = rep.eps_ent;
    out["eps_j"] = rep.eps_j;
    out["theta_j_sq"] = rep.theta_j_sq;
    py::list stacked;
    for (const auto& c : rep.stacked)
      stacked.append(py::make_tuple(std::string(1, c.cls), c.label, c.coefficient,
                                    c.contribution));
    out["stacked"] = stacked;
    return out;
  });
  m.def("gauge_optimize",
        [](const NoisyGateSet& estimate, const NoisyGateSet& ideal, double wg,
           double ws) {
          const GaugeResult res = gauge_optimize(estimate, ideal, wg, ws);
          return py::make_tuple(res.gateset, res.transform.s, res.objective);
        },
        py::arg("estimate"), py::arg("ideal"), py::arg("w_g") = 1.0,
        py::arg("w_s") = 1e-3);

  // --- simulator ---
  m.def("generate_random_sequences", &generate_random_sequences, py::arg("labels"),
        py::arg("length"), py::arg("count"), py::arg("seed"));
  m.def("simulate",
        [](py::handle plan, py::handle injection, const NoisyGateSet& gs) {
          const ExperimentPlan p = ExperimentPlan::from_json(to_json(plan));
          const NoiseInjection inj = injection.is_none()
                                         ? NoiseInjection{}
                                         : NoiseInjection::from_json(to_json(injection));
          const auto records = simulate(p, inj, gs);
          py::list out;
          for (const auto& rec : records) out.append(record_to_dict(rec));
          return out;
        },
        py::arg("plan"), py::arg("injection") = py::none(), py::arg("gateset"));

  // --- estimation sessions ---
  py::class_<EstimationSession>(m, "Session")
      .def(py::init([](const NoisyGateSet& gs, py::handle boot_cfg, py::handle session_cfg) {
             const BootstrapConfig boot = BootstrapConfig::from_json(to_json(boot_cfg));
             SessionConfig cfg;
             if (!session_cfg.is_none()) {
               const nlohmann::json s = to_json(session_cfg);
               cfg.relinearize_interval = s.value("relinearize_interval", 50);
               cfg.approx_samples = s.value("approx_samples", 100);
               cfg.approx_drop_ratio = s.value("approx_drop_ratio", 0.01);
               cfg.approx_drop_window = s.value("approx_drop_window", 20);
               cfg.seed = s.value("seed", std::uint64_t{0});
             }
             return EstimationSession(gs, bootstrap_prior(gs, boot), cfg);
           }),
           py::arg("gateset"), py::arg("bootstrap"), py::arg("session") = py::none())
      .def("ingest",
           [](EstimationSession& s, py::handle record) {
             const UpdateSummary u = s.ingest(record_from_dict(record));
             py::dict out;
             out["index"] = u.index;
             out["predicted"] = u.predicted;
             out["observed"] = u.observed;
             out["var_shot"] = u.var_shot;
             out["var_approx"] = u.var_approx;
             out["approx_active"] = u.approx_active;
             return out;
           })
      .def("mean_gateset", &EstimationSession::mean_gateset)
      .def_property_readonly("mean",
                             [](const EstimationSession& s) { return s.state().mean; })
      .def_property_readonly("update_count", [](const EstimationSession& s) {
        return s.state().update_count;
      })
      .def("marginal_std", [](const EstimationSession& s) {
        return Vec(s.state().cov.diagonal().cwiseSqrt());
      })
      .def("save_checkpoint", [](const EstimationSession& s, const std::string& path) {
        save_checkpoint(s.state(), path);
      });

  m.attr("__version__") = "0.1.0";
}
