// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

// Thin Python surface over the core. Structured values cross the boundary as
// JSON text; the package's __init__ converts them to and from dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

#include "poa/adjudicator.hpp"
#include "poa/errors.hpp"
#include "poa/gennorm.hpp"
#include "poa/hash.hpp"
#include "poa/prf_seed.hpp"
#include "poa/transforms.hpp"

#ifdef POA_WITH_CLI
#include "cli.hpp"
#endif

namespace py = pybind11;
using nlohmann::json;

namespace {

poa::Bytes to_bytes(const py::bytes& b) {
    const std::string s = b;
    return poa::Bytes(s.begin(), s.end());
}

template <std::size_t N>
std::array<std::uint8_t, N> to_fixed(const py::bytes& b, const char* what) {
    const std::string s = b;
    if (s.size() != N) throw py::value_error(std::string(what) + " must be " + std::to_string(N) + " bytes");
    std::array<std::uint8_t, N> out{};
    std::copy(s.begin(), s.end(), out.begin());
    return out;
}

py::bytes from_digest(const poa::Digest32& d) { return py::bytes(reinterpret_cast<const char*>(d.data()), d.size()); }

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return std::vector<double>(a.data(), a.data() + a.size());
}

py::array_t<double> from_latent(const poa::Latent& l) {
    py::array_t<double> out({l.shape[0], l.shape[1], l.shape[2]});
    std::copy(l.data.begin(), l.data.end(), out.mutable_data());
    return out;
}

poa::Latent to_latent(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw py::value_error("latents are 3-dimensional (channels, height, width)");
    poa::Shape3 shape{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))};
    return poa::Latent(shape, to_vector(a));
}

poa::Identity identity_from(const py::bytes& id) {
    poa::Identity identity;
    identity.id_bytes = to_fixed<32>(id, "identity id");
    return identity;
}

}  // namespace

PYBIND11_MODULE(_poa, m) {
    m.doc() = "Proof-of-authorship core";
    m.attr("__version__") = POA_VERSION;

    py::register_exception<poa::Error>(m, "PoaError", PyExc_RuntimeError);

    m.def("sha3_256", [](const py::bytes& data) { return from_digest(poa::sha3_256(to_bytes(data))); });
    m.def("hmac_sha3_256", [](const py::bytes& key, const py::bytes& message) {
        return from_digest(poa::hmac_sha3_256(to_bytes(key), to_bytes(message)));
    });
    m.def("canonical_kappa_bytes", [](const std::string& kappa_json) {
        const poa::Bytes b = poa::canonical_kappa_bytes(poa::kappa_from_json(json::parse(kappa_json)));
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
    });
    m.def("derive_seed", [](const py::bytes& identity_id, const std::string& kappa_json) {
        return from_digest(poa::derive_seed(identity_from(identity_id), poa::kappa_from_json(json::parse(kappa_json))).bytes);
    });
    m.def(
        "sample_gaussian",
        [](const py::bytes& seed, std::size_t count, std::uint32_t stream) {
            const auto v = poa::sample_gaussian(poa::Seed32{to_fixed<32>(seed, "seed")}, count, stream);
            return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
        },
        py::arg("seed"), py::arg("count"), py::arg("stream") = 0);

    m.def("required_samples", &poa::required_samples, py::arg("alpha"), py::arg("delta"));
    m.def("similarity", [](const py::array_t<double>& a, const py::array_t<double>& b) {
        const auto x = to_vector(a), y = to_vector(b);
        return poa::similarity(std::span<const double>(x), std::span<const double>(y));
    });
    m.def("fit_gennorm", [](const py::array_t<double>& samples) {
        return poa::gennorm_to_json(poa::fit_gennorm(to_vector(samples))).dump();
    });
    m.def("tail_prob", [](const std::string& params, double threshold) {
        return poa::tail_prob(poa::gennorm_from_json(json::parse(params)), threshold);
    });
    m.def("ks_distance", [](const py::array_t<double>& samples, const std::string& params) {
        const auto x = to_vector(samples);
        return poa::ks_distance(x, poa::gennorm_from_json(json::parse(params)));
    });

    py::class_<poa::SurrogateBackend>(m, "Surrogate")
        .def(py::init<>())
        .def("selector", &poa::SurrogateBackend::selector)
        .def("generate",
             [](poa::SurrogateBackend& self, const std::string& meta_json, const py::bytes& e_digest,
                const py::bytes& seed) {
                 const poa::MetaParams meta = poa::meta_from_json(json::parse(meta_json));
                 return from_latent(self.generate(meta, to_fixed<32>(e_digest, "e_digest"),
                                                  poa::Seed32{to_fixed<32>(seed, "seed")}));
             })
        .def("adjudicate",
             [](poa::SurrogateBackend& self, const py::bytes& identity_id, const std::string& kappa_json,
                const py::array_t<double>& contested, double alpha, double delta, const std::string& transform_json,
                int parallelism) {
                 poa::ClaimRequest request;
                 request.identity = identity_from(identity_id);
                 request.kappa = poa::kappa_from_json(json::parse(kappa_json));
                 request.contested = to_latent(contested);
                 request.alpha = alpha;
                 request.delta = delta;
                 if (!transform_json.empty()) request.transform = poa::affine_from_json(json::parse(transform_json));
                 request.backend = self.selector();
                 py::gil_scoped_release release;
                 return poa::adjudicate(request, self, poa::AdjudicatorOptions{parallelism}).canonical();
             },
             py::arg("identity_id"), py::arg("kappa"), py::arg("contested"), py::arg("alpha"), py::arg("delta"),
             py::arg("transform") = "", py::arg("parallelism") = 1);

    m.def("judge", [](const std::string& report_json, double p_r) {
        const poa::JudgeVerdict v = poa::judge(poa::AdjudicationReport::from_json(json::parse(report_json)), p_r);
        return json{{"accept", v.accept}, {"p_r", v.p_r}, {"q_upper", v.q_upper}, {"rationale", v.rationale}}.dump();
    });

#ifdef POA_WITH_CLI
    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = poa::cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
#endif
}
