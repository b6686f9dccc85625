#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hdplpcm/chain_io.hpp"
#include "hdplpcm/errors.hpp"
#include "hdplpcm/gibbs.hpp"
#include "hdplpcm/likelihood.hpp"
#include "hdplpcm/network.hpp"
#include "hdplpcm/simulate.hpp"
#include "hdplpcm/summary.hpp"

namespace py = pybind11;
using namespace hdplpcm;

namespace {

py::array_t<std::uint8_t> adjacency_array(const DynamicNetwork& net) {
  py::array_t<std::uint8_t> out({net.T(), net.n(), net.n()});
  auto view = out.mutable_unchecked<3>();
  for (int t = 0; t < net.T(); ++t)
    for (int i = 0; i < net.n(); ++i)
      for (int j = 0; j < net.n(); ++j) view(t, i, j) = net(t, i, j);
  return out;
}

DynamicNetwork network_from_array(py::array_t<std::uint8_t> adj) {
  const auto view = adj.unchecked<3>();
  if (view.shape(1) != view.shape(2))
    throw InvalidArgument("adjacency must have shape (T, n, n)");
  DynamicNetwork net(static_cast<int>(view.shape(1)),
                     static_cast<int>(view.shape(0)));
  for (int t = 0; t < net.T(); ++t)
    for (int i = 0; i < net.n(); ++i)
      for (int j = 0; j < i; ++j) {
        if (view(t, i, j) != view(t, j, i))
          throw InvalidArgument("adjacency must be symmetric");
        if (view(t, i, j)) net.set_edge(t, i, j, true);
      }
  for (int t = 0; t < net.T(); ++t)
    for (int i = 0; i < net.n(); ++i)
      if (view(t, i, i)) throw InvalidArgument("self-loops are not allowed");
  return net;
}

py::array_t<double> positions_array(const LatentPositions& X) {
  py::array_t<double> out({X.T(), X.n(), X.p()});
  auto view = out.mutable_unchecked<3>();
  for (int t = 0; t < X.T(); ++t)
    for (int i = 0; i < X.n(); ++i)
      for (int k = 0; k < X.p(); ++k) view(t, i, k) = X.X[t](k, i);
  return out;
}

LatentPositions positions_from_array(py::array_t<double> arr) {
  const auto view = arr.unchecked<3>();
  LatentPositions X = LatentPositions::zeros(static_cast<int>(view.shape(0)),
                                             static_cast<int>(view.shape(1)),
                                             static_cast<int>(view.shape(2)));
  for (int t = 0; t < X.T(); ++t)
    for (int i = 0; i < X.n(); ++i)
      for (int k = 0; k < X.p(); ++k) X.X[t](k, i) = view(t, i, k);
  return X;
}

py::array_t<int> labels_array(const LabelSequences& Z) {
  py::array_t<int> out({Z.T(), Z.n()});
  auto view = out.mutable_unchecked<2>();
  for (int t = 0; t < Z.T(); ++t)
    for (int i = 0; i < Z.n(); ++i) view(t, i) = Z.Z(t, i);
  return out;
}

Eigen::VectorXi labels_vector(py::array_t<int> arr) {
  const auto view = arr.unchecked<1>();
  Eigen::VectorXi z(view.shape(0));
  for (py::ssize_t i = 0; i < view.shape(0); ++i) z[i] = view(i);
  return z;
}

SamplerConfig config_from_kwargs(const py::kwargs& kwargs) {
  SamplerConfig cfg;
  for (const auto& item : kwargs) {
    const auto key = item.first.cast<std::string>();
    const auto& value = item.second;
    if (key == "n_tune") cfg.n_tune = value.cast<int>();
    else if (key == "n_burn") cfg.n_burn = value.cast<int>();
    else if (key == "n_keep") cfg.n_keep = value.cast<int>();
    else if (key == "thin") cfg.thin = value.cast<int>();
    else if (key == "L") cfg.L = value.cast<int>();
    else if (key == "p") cfg.p = value.cast<int>();
    else if (key == "seed") cfg.seed = value.cast<std::uint64_t>();
    else if (key == "step_x") cfg.step_x = value.cast<double>();
    else if (key == "step_beta0") cfg.step_beta0 = value.cast<double>();
    else if (key == "tune_interval") cfg.tune_interval = value.cast<int>();
    else if (key == "init_refine_sweeps")
      cfg.init_refine_sweeps = value.cast<int>();
    else if (key == "store_positions")
      cfg.store_positions = value.cast<bool>();
    else if (key == "store_transitions")
      cfg.store_transitions = value.cast<bool>();
    else if (key == "sample_hyperparameters") {
      if (!value.cast<bool>()) cfg.hyper = HyperToggles::none();
    } else
      throw InvalidArgument("unknown fit option: " + key);
  }
  return cfg;
}

py::dict summary_dict(const PartitionSummary& summary, int T, int n) {
  py::dict out;
  py::array_t<double> co({static_cast<int>(summary.coassign.size()), n, n});
  auto co_view = co.mutable_unchecked<3>();
  for (std::size_t t = 0; t < summary.coassign.size(); ++t)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        co_view(static_cast<int>(t), i, j) = summary.coassign[t](i, j);
  out["coassignment"] = co;
  out["selected_labels"] = labels_array(summary.selected);
  out["selected_sample_index"] = summary.selected_sample_index;
  out["group_count_posterior"] = summary.group_counts;
  if (!summary.aligned_positions.X.empty()) {
    out["aligned_positions"] = positions_array(summary.aligned_positions);
    out["selected_positions"] = positions_array(summary.selected_positions);
  }
  out["selected_mu"] = summary.selected_mu;
  out["selected_sigma"] = summary.selected_sigma;
  py::list flows;
  for (const auto& F : summary.flows) flows.append(F);
  out["flows"] = flows;
  (void)T;
  return out;
}

}  // namespace

PYBIND11_MODULE(_hdplpcm, m) {
  m.doc() = "Latent-space clustering of dynamic networks with an HDP prior "
            "over evolving communities";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument",
                                          PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_RuntimeError);

  py::class_<DynamicNetwork>(m, "Network")
      .def_static(
          "from_edge_list",
          [](const std::string& path, std::optional<int> n,
             std::optional<int> T) {
            return load_edge_list_file(path, n, T);
          },
          py::arg("path"), py::arg("n") = std::nullopt,
          py::arg("T") = std::nullopt)
      .def_static(
          "from_edge_text",
          [](const std::string& text, std::optional<int> n,
             std::optional<int> T) {
            std::istringstream in(text);
            return load_edge_list(in, n, T);
          },
          py::arg("text"), py::arg("n") = std::nullopt,
          py::arg("T") = std::nullopt)
      .def_static("from_adjacency", &network_from_array, py::arg("adjacency"))
      .def_property_readonly("n", &DynamicNetwork::n)
      .def_property_readonly("T", &DynamicNetwork::T)
      .def("adjacency", &adjacency_array)
      .def("density", &DynamicNetwork::density)
      .def("edge_count", &DynamicNetwork::edge_count)
      .def_property_readonly("actor_names",
                             [](const DynamicNetwork& net) {
                               return net.actor_names();
                             })
      .def("window_aggregate",
           [](const DynamicNetwork& net, int window) {
             return window_aggregate(net, window);
           },
           py::arg("window"))
      .def("filter_min_degree",
           [](const DynamicNetwork& net, int dmin) {
             auto res = filter_min_degree(net, dmin);
             return py::make_tuple(std::move(res.net), res.kept);
           },
           py::arg("dmin"))
      .def("to_edge_text", [](const DynamicNetwork& net) {
        std::ostringstream out;
        export_edge_list(net, out);
        return out.str();
      });

  py::class_<Chain>(m, "Chain")
      .def_property_readonly("size", &Chain::size)
      .def_property_readonly("n", [](const Chain& c) { return c.n; })
      .def_property_readonly("T", [](const Chain& c) { return c.T; })
      .def_property_readonly("L", [](const Chain& c) { return c.config.L; })
      .def_property_readonly("p", [](const Chain& c) { return c.config.p; })
      .def_property_readonly("seed",
                             [](const Chain& c) { return c.config.seed; })
      .def_property_readonly("rng_algorithm",
                             [](const Chain& c) { return c.rng_algorithm; })
      .def_property_readonly("interrupted",
                             [](const Chain& c) { return c.interrupted; })
      .def_property_readonly("log_post",
                             [](const Chain& c) { return c.log_post; })
      .def_property_readonly("log_lik",
                             [](const Chain& c) { return c.log_lik; })
      .def_property_readonly(
          "labels",
          [](const Chain& c) {
            py::array_t<int> out(
                {static_cast<int>(c.samples.size()), c.T, c.n});
            auto view = out.mutable_unchecked<3>();
            for (std::size_t s = 0; s < c.samples.size(); ++s)
              for (int t = 0; t < c.T; ++t)
                for (int i = 0; i < c.n; ++i)
                  view(static_cast<int>(s), t, i) = c.samples[s].labels.Z(t, i);
            return out;
          })
      .def_property_readonly(
          "positions",
          [](const Chain& c) -> py::object {
            if (c.samples.empty() || c.samples[0].positions.X.empty())
              return py::none();
            const int p = c.samples[0].positions.p();
            py::array_t<double> out(
                {static_cast<int>(c.samples.size()), c.T, c.n, p});
            auto view = out.mutable_unchecked<4>();
            for (std::size_t s = 0; s < c.samples.size(); ++s)
              for (int t = 0; t < c.T; ++t)
                for (int i = 0; i < c.n; ++i)
                  for (int k = 0; k < p; ++k)
                    view(static_cast<int>(s), t, i, k) =
                        c.samples[s].positions.X[t](k, i);
            return out;
          })
      .def_property_readonly(
          "beta0",
          [](const Chain& c) {
            std::vector<double> out;
            out.reserve(c.samples.size());
            for (const auto& s : c.samples) out.push_back(s.groups.beta0);
            return out;
          })
      .def_property_readonly(
          "blend",
          [](const Chain& c) {
            std::vector<double> out;
            out.reserve(c.samples.size());
            for (const auto& s : c.samples) out.push_back(s.groups.lambda);
            return out;
          })
      .def_property_readonly("accept_positions",
                             [](const Chain& c) {
                               return c.run_stats.position_rate();
                             })
      .def_property_readonly("accept_intercept",
                             [](const Chain& c) {
                               return c.run_stats.intercept_rate();
                             })
      .def("save",
           [](const Chain& c, const std::string& path,
              const std::string& format) {
             save_chain_file(c, path,
                             format == "jsonl" ? ChainFormat::jsonl
                                               : ChainFormat::binary);
           },
           py::arg("path"), py::arg("format") = "binary")
      .def_static("load", &load_chain_file, py::arg("path"));

  m.def(
      "simulate_homogeneous",
      [](std::uint64_t seed, bool strict_occupancy) {
        auto spec = homogeneous_spec(seed);
        spec.retry_unoccupied_groups = strict_occupancy;
        auto res = simulate(spec);
        py::dict out;
        out["network"] = std::move(res.net);
        out["positions"] = positions_array(res.X);
        out["labels"] = labels_array(res.Z);
        out["retries"] = res.retries;
        return out;
      },
      py::arg("seed"), py::arg("strict_occupancy") = true);

  m.def(
      "simulate_inhomogeneous",
      [](std::uint64_t seed, bool strict_occupancy) {
        auto spec = inhomogeneous_spec(seed);
        spec.retry_unoccupied_groups = strict_occupancy;
        auto res = simulate(spec);
        py::dict out;
        out["network"] = std::move(res.net);
        out["positions"] = positions_array(res.X);
        out["labels"] = labels_array(res.Z);
        out["retries"] = res.retries;
        return out;
      },
      py::arg("seed"), py::arg("strict_occupancy") = true);

  m.def(
      "fit",
      [](const DynamicNetwork& net, const py::kwargs& kwargs) {
        const SamplerConfig cfg = config_from_kwargs(kwargs);
        cfg.validate();
        py::gil_scoped_release release;
        return run_chain(net, cfg);
      },
      py::arg("network"),
      "Run the blocked MH-within-Gibbs sampler; keyword options mirror the "
      "CLI sampler configuration (n_tune, n_burn, n_keep, thin, L, p, seed, "
      "step_x, step_beta0, sample_hyperparameters, ...)");

  m.def("summarize", [](const Chain& chain) {
    if (chain.samples.empty()) throw EmptyResult("chain has no samples");
    const auto summary = summarize(chain);
    return summary_dict(summary, chain.T, chain.n);
  });

  m.def(
      "vi_distance",
      [](py::array_t<int> a, py::array_t<int> b) {
        return vi_distance(labels_vector(a), labels_vector(b));
      },
      py::arg("z"), py::arg("zhat"));
  m.def(
      "adjusted_rand_index",
      [](py::array_t<int> a, py::array_t<int> b) {
        return adjusted_rand_index(labels_vector(a), labels_vector(b));
      },
      py::arg("z"), py::arg("zhat"));
  m.def("in_sample_auc", &in_sample_auc, py::arg("network"), py::arg("chain"));
  m.def(
      "ess",
      [](const std::vector<double>& series, int max_lag) {
        const auto res = ess_and_acf(series, max_lag);
        return py::make_tuple(res.ess, res.acf);
      },
      py::arg("series"), py::arg("max_lag") = 200);
  m.def(
      "procrustes_align",
      [](py::array_t<double> sample, py::array_t<double> reference) {
        const auto aligned = procrustes_align(positions_from_array(sample),
                                              positions_from_array(reference));
        return positions_array(aligned);
      },
      py::arg("sample"), py::arg("reference"));

  m.attr("rng_algorithm") = kRngAlgorithm;
  m.attr("__version__") = "0.1.0";
}
