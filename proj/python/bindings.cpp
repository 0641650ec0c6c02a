#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sbfl/aggregate.hpp"
#include "sbfl/channel.hpp"
#include "sbfl/data.hpp"
#include "sbfl/learn.hpp"
#include "sbfl/prior.hpp"
#include "sbfl/rng.hpp"
#include "sbfl/theory.hpp"
#include "sbfl/types.hpp"

namespace py = pybind11;
using namespace sbfl;

PYBIND11_MODULE(_core, m) {
  m.doc() = "sign-based Bayesian federated learning simulator core";

  py::register_exception<capability_error>(m, "CapabilityError");
  py::register_exception<numerical_error>(m, "NumericalError");
  py::register_exception<schema_error>(m, "SchemaError");

  py::enum_<Mode>(m, "Mode")
      .value("corrected", Mode::corrected)
      .value("paper_literal", Mode::paper_literal);

  py::enum_<StreamPurpose>(m, "StreamPurpose")
      .value("fading", StreamPurpose::fading)
      .value("noise", StreamPurpose::noise)
      .value("data_matrix", StreamPurpose::data_matrix)
      .value("data_labels", StreamPurpose::data_labels)
      .value("data_scale", StreamPurpose::data_scale)
      .value("init_weights", StreamPurpose::init_weights)
      .value("placement", StreamPurpose::placement)
      .value("vote_coin", StreamPurpose::vote_coin)
      .value("monte_carlo", StreamPurpose::monte_carlo)
      .value("batch", StreamPurpose::batch);

  py::class_<RandomStream>(m, "RandomStream")
      .def(py::init<std::uint64_t, StreamPurpose, std::uint64_t, std::uint64_t>(),
           py::arg("seed"), py::arg("purpose"), py::arg("device") = 0,
           py::arg("round") = 0)
      .def("gaussian", [](RandomStream& s) { return s.gaussian(); })
      .def("uniform", [](RandomStream& s) { return s.uniform(); })
      .def("coin", &RandomStream::coin);

  py::class_<GaussianPriorParams>(m, "GaussianPriorParams")
      .def(py::init<double, double>(), py::arg("mu") = 0.0, py::arg("nu") = 0.0)
      .def_readwrite("mu", &GaussianPriorParams::mu)
      .def_readwrite("nu", &GaussianPriorParams::nu);

  py::class_<LaplacianPriorParams>(m, "LaplacianPriorParams")
      .def(py::init<double, double>(), py::arg("mu") = 0.0, py::arg("lambda_") = 0.0)
      .def_readwrite("mu", &LaplacianPriorParams::mu)
      .def_readwrite("lambda_", &LaplacianPriorParams::lambda);

  py::class_<LinkState>(m, "LinkState")
      .def(py::init<double, double>(), py::arg("h") = 0.0, py::arg("sigma2") = 1.0)
      .def_readwrite("h", &LinkState::h)
      .def_readwrite("sigma2", &LinkState::sigma2);

  // ---- prior ----------------------------------------------------------------
  py::class_<prior::QuantizerSpec>(m, "QuantizerSpec")
      .def_readonly("bits", &prior::QuantizerSpec::bits)
      .def_readonly("boundaries", &prior::QuantizerSpec::boundaries)
      .def_readonly("outputs", &prior::QuantizerSpec::outputs);
  m.def("make_uniform_quantizer", &prior::make_uniform_quantizer, py::arg("bits"),
        py::arg("lo"), py::arg("hi"));
  m.def("scalar_quantize", &prior::scalar_quantize, py::arg("x"), py::arg("spec"));
  m.def("estimate_gaussian_prior", &prior::estimate_gaussian_prior, py::arg("g"));
  m.def("estimate_laplacian_scale", &prior::estimate_laplacian_scale,
        py::arg("g_centered"));
  m.def("center", &prior::center, py::arg("g"), py::arg("mu"));
  m.def("sign_quantize", &prior::sign_quantize, py::arg("g"));

  // ---- channel --------------------------------------------------------------
  py::class_<channel::NetworkGeometry>(m, "NetworkGeometry")
      .def(py::init<>())
      .def_readwrite("cell_radius_m", &channel::NetworkGeometry::cell_radius_m)
      .def_readwrite("bs_height_m", &channel::NetworkGeometry::bs_height_m)
      .def_readwrite("device_height_m", &channel::NetworkGeometry::device_height_m)
      .def_readwrite("carrier_freq_mhz", &channel::NetworkGeometry::carrier_freq_mhz)
      .def_readwrite("tx_power_dbm", &channel::NetworkGeometry::tx_power_dbm)
      .def_readwrite("noise_floor_dbm", &channel::NetworkGeometry::noise_floor_dbm);
  m.def("cost231_path_loss_db", &channel::cost231_path_loss_db, py::arg("geometry"),
        py::arg("distance_m"));
  m.def("marginal_density", &channel::marginal_density, py::arg("y"), py::arg("link"));
  m.def("geometry_to_links", &channel::geometry_to_links, py::arg("geometry"),
        py::arg("devices"), py::arg("rng"));
  m.def(
      "transmit",
      [](const SignVector& s, const LinkState& link, RandomStream& rng) {
        return channel::transmit(s, link, rng);
      },
      py::arg("signs"), py::arg("link"), py::arg("rng"));

  // ---- aggregate --------------------------------------------------------------
  m.def("mmse_gaussian", &aggregate::mmse_gaussian, py::arg("received"),
        py::arg("priors"), py::arg("links"), py::arg("mode") = Mode::corrected);
  m.def("mmse_laplacian", &aggregate::mmse_laplacian, py::arg("received"),
        py::arg("priors"), py::arg("links"), py::arg("mode") = Mode::corrected);
  m.def("blmmse", &aggregate::blmmse, py::arg("received"), py::arg("priors"),
        py::arg("links"), py::arg("mode") = Mode::corrected);
  m.def("high_snr_mmse", &aggregate::high_snr_mmse, py::arg("received"),
        py::arg("priors"), py::arg("links"));
  m.def("high_snr_blmmse", &aggregate::high_snr_blmmse, py::arg("received"),
        py::arg("priors"), py::arg("links"));
  m.def("majority_vote", &aggregate::majority_vote, py::arg("received"),
        py::arg("links"), py::arg("rng"));
  m.def(
      "conditional_mean_gaussian",
      [](double y, const GaussianPriorParams& p, const LinkState& l, Mode mode) {
        return aggregate::conditional_mean_elementwise(y, p, l, mode);
      },
      py::arg("y"), py::arg("prior"), py::arg("link"), py::arg("mode") = Mode::corrected);
  m.def(
      "conditional_mean_laplacian",
      [](double y, const LaplacianPriorParams& p, const LinkState& l, Mode mode) {
        return aggregate::conditional_mean_elementwise(y, p, l, mode);
      },
      py::arg("y"), py::arg("prior"), py::arg("link"), py::arg("mode") = Mode::corrected);

  // ---- theory -----------------------------------------------------------------
  py::class_<theory::MseReport> mse_report(m, "MseReport");
  py::enum_<theory::MseReport::Method>(mse_report, "Method")
      .value("quadrature", theory::MseReport::Method::quadrature)
      .value("closed_form", theory::MseReport::Method::closed_form)
      .value("monte_carlo", theory::MseReport::Method::monte_carlo);
  mse_report.def_readonly("value", &theory::MseReport::value)
      .def_readonly("method", &theory::MseReport::method)
      .def_readonly("std_error", &theory::MseReport::std_error);

  m.def("mse_quadrature", &theory::mse_quadrature, py::arg("priors"), py::arg("links"),
        py::arg("M"), py::arg("mode") = Mode::corrected);
  m.def("mse_high_snr_closed_form", &theory::mse_high_snr_closed_form,
        py::arg("priors"), py::arg("M"));
  m.def("blmmse_mse_closed_form", &theory::blmmse_mse_closed_form, py::arg("priors"),
        py::arg("links"), py::arg("M"), py::arg("mode"));
  m.def("mse_monte_carlo", &theory::mse_monte_carlo, py::arg("aggregate"),
        py::arg("priors"), py::arg("links"), py::arg("M"), py::arg("n_samples"),
        py::arg("seed"));
  m.def("genie_bfl_conditional_mean", &theory::genie_bfl_conditional_mean,
        py::arg("mean"), py::arg("cov"), py::arg("ys"), py::arg("links"));

  py::class_<theory::ConvergenceBoundInputs>(m, "ConvergenceBoundInputs")
      .def(py::init<>())
      .def_readwrite("T", &theory::ConvergenceBoundInputs::T)
      .def_readwrite("gamma", &theory::ConvergenceBoundInputs::gamma)
      .def_readwrite("L", &theory::ConvergenceBoundInputs::L)
      .def_readwrite("sigma_mse", &theory::ConvergenceBoundInputs::sigma_mse)
      .def_readwrite("f0", &theory::ConvergenceBoundInputs::f0)
      .def_readwrite("fstar", &theory::ConvergenceBoundInputs::fstar);
  m.def("convergence_bound", &theory::convergence_bound, py::arg("inputs"));

  // ---- data -------------------------------------------------------------------
  py::class_<data::DeviceDataset>(m, "DeviceDataset")
      .def(py::init<>())
      .def_readwrite("M", &data::DeviceDataset::M)
      .def_readwrite("N", &data::DeviceDataset::N)
      .def_readwrite("a", &data::DeviceDataset::a)
      .def_readwrite("X", &data::DeviceDataset::X)
      .def_readwrite("z", &data::DeviceDataset::z);
  m.def("gen_synthetic", &data::gen_synthetic, py::arg("devices"),
        py::arg("samples_per_device"), py::arg("dimension"),
        py::arg("homogeneous_scale") = std::nullopt, py::arg("seed") = 1);
  m.def("chunk_partition", &data::chunk_partition, py::arg("labels"), py::arg("devices"),
        py::arg("chunks_per_user"), py::arg("rng"));
  py::class_<data::BlobSet>(m, "BlobSet")
      .def_readonly("points", &data::BlobSet::points)
      .def_readonly("labels", &data::BlobSet::labels);
  m.def("make_blobs", &data::make_blobs, py::arg("classes") = 4,
        py::arg("per_class") = 100, py::arg("seed") = 0);
  m.def("save_datasets", &data::save_datasets, py::arg("path"), py::arg("devices"));
  m.def("load_datasets", &data::load_datasets, py::arg("path"));

  // ---- learn ------------------------------------------------------------------
  py::enum_<learn::Algorithm>(m, "Algorithm")
      .value("signsgd", learn::Algorithm::signsgd)
      .value("sbfl_gaussian", learn::Algorithm::sbfl_gaussian)
      .value("sbfl_laplacian", learn::Algorithm::sbfl_laplacian)
      .value("sbfl_blmmse", learn::Algorithm::sbfl_blmmse)
      .value("sbfl_highsnr", learn::Algorithm::sbfl_highsnr);
  py::enum_<learn::Schedule>(m, "Schedule")
      .value("constant", learn::Schedule::constant)
      .value("inverse_sqrt", learn::Schedule::inverse_sqrt);

  py::class_<learn::PriorQuantization>(m, "PriorQuantization")
      .def(py::init<>())
      .def_readwrite("enabled", &learn::PriorQuantization::enabled)
      .def_readwrite("bits", &learn::PriorQuantization::bits)
      .def_readwrite("nu_ref", &learn::PriorQuantization::nu_ref)
      .def_readwrite("mu_ref", &learn::PriorQuantization::mu_ref);

  py::class_<learn::TrainingPlan>(m, "TrainingPlan")
      .def(py::init<>())
      .def_readwrite("algorithm", &learn::TrainingPlan::algorithm)
      .def_readwrite("gamma", &learn::TrainingPlan::gamma)
      .def_readwrite("delta", &learn::TrainingPlan::delta)
      .def_readwrite("schedule", &learn::TrainingPlan::schedule)
      .def_readwrite("downlink_compression", &learn::TrainingPlan::downlink_compression)
      .def_readwrite("rounds", &learn::TrainingPlan::rounds)
      .def_readwrite("prior_quantization", &learn::TrainingPlan::prior_quantization)
      .def_readwrite("mode", &learn::TrainingPlan::mode)
      .def_readwrite("divergence_threshold", &learn::TrainingPlan::divergence_threshold)
      .def_readwrite("batch_size", &learn::TrainingPlan::batch_size)
      .def_readwrite("keep_aggregate", &learn::TrainingPlan::keep_aggregate);

  py::class_<learn::ChannelPlan>(m, "ChannelPlan")
      .def(py::init<>())
      .def_readwrite("sigma2", &learn::ChannelPlan::sigma2)
      .def_readwrite("fixed_fading", &learn::ChannelPlan::fixed_fading);

  py::class_<learn::DeviceTraceEntry>(m, "DeviceTraceEntry")
      .def_readonly("mu", &learn::DeviceTraceEntry::mu)
      .def_readonly("scale", &learn::DeviceTraceEntry::scale)
      .def_readonly("h", &learn::DeviceTraceEntry::h)
      .def_readonly("sigma2", &learn::DeviceTraceEntry::sigma2);

  py::class_<learn::RoundTrace>(m, "RoundTrace")
      .def_readonly("round", &learn::RoundTrace::round)
      .def_readonly("loss", &learn::RoundTrace::loss)
      .def_readonly("grad_norm_sq", &learn::RoundTrace::grad_norm_sq)
      .def_readonly("agg_norm_sq", &learn::RoundTrace::agg_norm_sq)
      .def_readonly("wall_ms", &learn::RoundTrace::wall_ms)
      .def_readonly("devices", &learn::RoundTrace::devices)
      .def_readonly("aggregate", &learn::RoundTrace::aggregate);

  py::class_<learn::TrainingResult>(m, "TrainingResult")
      .def_readonly("trace", &learn::TrainingResult::trace)
      .def_readonly("w_final", &learn::TrainingResult::w_final)
      .def_readonly("diverged", &learn::TrainingResult::diverged)
      .def_readonly("rounds_run", &learn::TrainingResult::rounds_run);

  m.def("local_gradient_linreg", &learn::local_gradient_linreg, py::arg("dataset"),
        py::arg("w"));
  m.def("global_loss", &learn::global_loss, py::arg("devices"), py::arg("w"));
  m.def("smoothness_constant", &learn::smoothness_constant, py::arg("devices"));
  py::class_<learn::SumLossMinimum>(m, "SumLossMinimum")
      .def_readonly("value", &learn::SumLossMinimum::value)
      .def_readonly("w", &learn::SumLossMinimum::w);
  m.def("sum_loss_minimum", &learn::sum_loss_minimum, py::arg("devices"));
  m.def("run_training", &learn::run_training, py::arg("plan"), py::arg("devices"),
        py::arg("channel"), py::arg("seed"));
  m.def("run_training_downlink_compressed", &learn::run_training_downlink_compressed,
        py::arg("plan"), py::arg("devices"), py::arg("channel"), py::arg("seed"));
}
