#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "neuroprobe/ablation.hpp"
#include "neuroprobe/cli.hpp"
#include "neuroprobe/detect.hpp"
#include "neuroprobe/error.hpp"
#include "neuroprobe/gwf.hpp"
#include "neuroprobe/metrics.hpp"
#include "neuroprobe/rates.hpp"

namespace py = pybind11;
using namespace neuroprobe;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const Tensor3& t) {
    py::array_t<float> out({t.channels(), t.height(), t.width()});
    std::copy(t.values().begin(), t.values().end(), out.mutable_data());
    return out;
}

std::vector<float> latent(const FloatArray& z) {
    if (z.ndim() != 1) throw ShapeError("latent must be a 1-d array");
    return {z.data(), z.data() + z.size()};
}

FeatureSet features(const FloatArray& a, const char* source) {
    if (a.ndim() != 2) throw ShapeError(std::string(source) + " features must be an (N, d) array");
    FeatureSet f;
    f.count = static_cast<std::size_t>(a.shape(0));
    f.dim = static_cast<std::size_t>(a.shape(1));
    f.data.assign(a.data(), a.data() + a.size());
    f.source = source;
    return f;
}

py::tuple trace_tuple(const LayerTrace& t) {
    py::list layers;
    for (const Tensor3& l : t.layers) layers.append(to_numpy(l));
    return py::make_tuple(layers, to_numpy(t.image));
}

py::array_t<bool> set_mask(const RateTable& t, const NeuronSet& s) {
    const Shape3 sh = t.layer_shapes.at(s.layer);
    py::array_t<bool> out({sh.channels, sh.height, sh.width});
    bool* p = out.mutable_data();
    for (std::size_t i = 0; i < s.mask.size(); ++i) p[i] = s.mask[i] != 0;
    return out;
}

}  // namespace

PYBIND11_MODULE(_neuroprobe, m) {
    m.doc() = "neuroprobe core bindings";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ContractError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ShapeError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const NumericError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        }
    });

    py::class_<Generator>(m, "Generator")
        .def_static("load", [](const std::string& path) { return load_gwf_file(path); }, py::arg("path"))
        .def_static(
            "from_bytes",
            [](const py::bytes& b) {
                const std::string s = b;
                return load_gwf(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
            },
            py::arg("data"))
        .def_property_readonly("num_layers", &Generator::num_layers)
        .def_property_readonly("latent_dim", [](const Generator& g) { return g.spec().latent_dim; })
        .def_property_readonly("digest", [](const Generator& g) { return to_hex(g.digest()); })
        .def_property_readonly("layer_shapes",
                               [](const Generator& g) {
                                   std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> out;
                                   for (const Shape3& s : g.spec().layer_shapes()) out.emplace_back(s.channels, s.height, s.width);
                                   return out;
                               })
        .def(
            "forward", [](const Generator& g, const FloatArray& z) { return trace_tuple(g.forward(latent(z))); },
            py::arg("z"), "Returns (list of per-layer featuremaps, image).")
        .def("to_bytes", [](const Generator& g) {
            const Bytes b = write_gwf(g);
            return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
        });

    py::class_<RateTable>(m, "RateTable")
        .def_static(
            "from_bytes",
            [](const py::bytes& b) {
                const std::string s = b;
                return read_grt(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
            },
            py::arg("data"))
        .def_readonly("num_samples", &RateTable::num_samples)
        .def_readonly("sampler", &RateTable::sampler)
        .def_property_readonly("num_layers", &RateTable::num_layers)
        .def(
            "counts",
            [](const RateTable& t, std::size_t layer) {
                const Shape3 sh = t.layer_shapes.at(layer);
                py::array_t<std::uint32_t> out({sh.channels, sh.height, sh.width});
                std::copy(t.counts.at(layer).begin(), t.counts.at(layer).end(), out.mutable_data());
                return out;
            },
            py::arg("layer"))
        .def(
            "rates",
            [](const RateTable& t, std::size_t layer) {
                const Shape3 sh = t.layer_shapes.at(layer);
                py::array_t<double> out({sh.channels, sh.height, sh.width});
                double* p = out.mutable_data();
                for (std::size_t n = 0; n < sh.size(); ++n) p[n] = t.rate(layer, n);
                return out;
            },
            py::arg("layer"))
        .def("to_bytes",
             [](const RateTable& t) {
                 const Bytes b = write_grt(t);
                 return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
             })
        .def("__eq__", [](const RateTable& a, const RateTable& b) { return a == b; });

    m.def(
        "sample_latents",
        [](std::uint64_t seed, std::size_t count, std::size_t dim) {
            const LatentBatch b = LatentBatch::sample(seed, count, dim);
            py::array_t<float> out({count, dim});
            std::copy(b.data.begin(), b.data.end(), out.mutable_data());
            return out;
        },
        py::arg("seed"), py::arg("count"), py::arg("dim"));

    m.def(
        "estimate_rates",
        [](const Generator& g, std::size_t num_samples, std::uint64_t seed, std::size_t threads) {
            py::gil_scoped_release release;
            return estimate_rates(g, num_samples, seed, threads);
        },
        py::arg("generator"), py::arg("num_samples"), py::arg("seed") = 0, py::arg("threads") = 0);

    m.def(
        "lr_set", [](const RateTable& t, std::size_t layer, double r) { return set_mask(t, lr_set(t, layer, r)); },
        py::arg("rates"), py::arg("layer"), py::arg("threshold") = 0.3);
    m.def(
        "hr_set", [](const RateTable& t, std::size_t layer, double r) { return set_mask(t, hr_set(t, layer, r)); },
        py::arg("rates"), py::arg("layer"), py::arg("threshold") = 0.3);

    m.def(
        "sequential_ablate",
        [](const Generator& g, const RateTable& t, const FloatArray& z, std::vector<std::size_t> layers, double r,
           const std::string& mode) {
            AblationConfig cfg;
            cfg.target_layers = std::move(layers);
            cfg.threshold = r;
            cfg.mode = parse_mode(mode, &cfg.random_p);
            return trace_tuple(sequential_ablate(g, t, cfg, latent(z)));
        },
        py::arg("generator"), py::arg("rates"), py::arg("z"), py::arg("layers"), py::arg("threshold") = 0.3,
        py::arg("mode") = "lr");
    m.def(
        "single_ablate",
        [](const Generator& g, const RateTable& t, const FloatArray& z, std::size_t layer, double r) {
            return trace_tuple(single_ablate(g, t, layer, r, latent(z)));
        },
        py::arg("generator"), py::arg("rates"), py::arg("z"), py::arg("layer"), py::arg("threshold") = 0.3);
    m.def(
        "random_ablate",
        [](const Generator& g, const FloatArray& z, std::vector<std::size_t> layers, double p, std::uint64_t seed) {
            return trace_tuple(random_ablate(g, p, seed, latent(z), layers));
        },
        py::arg("generator"), py::arg("z"), py::arg("layers"), py::arg("p") = 0.3, py::arg("seed") = 0);

    m.def(
        "artifact_score",
        [](const Generator& g, const RateTable& t, const FloatArray& z, std::vector<std::size_t> layers, double r) {
            const ArtifactScore s = artifact_score(g.forward(latent(z)), t, layers, r);
            py::dict d;
            d["layers"] = s.layers;
            d["counts"] = s.counts;
            d["total"] = s.total;
            return d;
        },
        py::arg("generator"), py::arg("rates"), py::arg("z"), py::arg("layers"), py::arg("threshold") = 0.3);

    m.def(
        "heatmap",
        [](const Generator& g, const RateTable& t, const FloatArray& z, std::size_t layer, double r) {
            const Heatmap h = heatmap(g.forward(latent(z)), t, layer, r);
            py::array_t<float> out({h.height, h.width});
            std::copy(h.values.begin(), h.values.end(), out.mutable_data());
            return out;
        },
        py::arg("generator"), py::arg("rates"), py::arg("z"), py::arg("layer"), py::arg("threshold") = 0.3);

    m.def(
        "fid", [](const FloatArray& real, const FloatArray& fake) { return fid(features(real, "real"), features(fake, "fake")); },
        py::arg("real"), py::arg("fake"));
    m.def(
        "precision_recall",
        [](const FloatArray& real, const FloatArray& fake, std::size_t k) {
            const PrecisionRecall pr = precision_recall(features(real, "real"), features(fake, "fake"), k);
            return py::make_tuple(pr.precision, pr.recall);
        },
        py::arg("real"), py::arg("fake"), py::arg("k") = 3);
    m.def(
        "realism",
        [](const FloatArray& real, const FloatArray& fake, std::size_t k) {
            const RealismResult r = realism_score(features(real, "real"), features(fake, "fake"), k);
            py::dict d;
            d["scores"] = r.scores;
            d["mean"] = r.mean;
            d["std"] = r.stddev;
            d["capped"] = r.capped;
            d["summary"] = format_mean_std(r.mean, r.stddev);
            return d;
        },
        py::arg("real"), py::arg("fake"), py::arg("k") = 3);

    m.def(
        "cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
        "Runs the command-line tool in-process and returns its exit code.");
}
