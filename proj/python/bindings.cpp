#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "legged_odom/errors.hpp"
#include "legged_odom/estimator.hpp"
#include "legged_odom/imu_model.hpp"
#include "legged_odom/io.hpp"
#include "legged_odom/liegroup.hpp"
#include "legged_odom/metrics.hpp"
#include "legged_odom/replay.hpp"
#include "legged_odom/synthetic.hpp"

namespace py = pybind11;
using namespace legged;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Proprioceptive legged odometry: invariant filters and fixed-lag smoothers.";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<UnderConstrainedError>(m, "UnderConstrainedError", PyExc_RuntimeError);
  py::register_exception<StructureError>(m, "StructureError", PyExc_RuntimeError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_RuntimeError);

  m.def("hat", &hat);
  m.def("vee", &vee);
  m.def("so3_exp", &so3::exp, py::arg("theta"));
  m.def("so3_log", &so3::log, py::arg("R"));

  py::class_<SEK3>(m, "SEK3")
      .def(py::init<int>(), py::arg("num_columns"))
      .def(py::init<const Matrix3&, const Eigen::Matrix3Xd&>(), py::arg("rotation"), py::arg("columns"))
      .def_static("identity", &SEK3::identity, py::arg("num_columns"))
      .def_static("exp", [](const Vector& xi) { return SEK3::exp(xi); }, py::arg("xi"))
      .def("log", &SEK3::log)
      .def("inverse", &SEK3::inverse)
      .def("compose", &SEK3::compose)
      .def("__mul__", &SEK3::compose)
      .def("adjoint", &SEK3::adjoint)
      .def("matrix", &SEK3::matrix)
      .def("local", &SEK3::local)
      .def("retract", [](const SEK3& X, const Vector& xi) { return X.retract(xi); })
      .def_property_readonly("rotation", &SEK3::rotation)
      .def_property_readonly("columns", &SEK3::columns)
      .def_property_readonly("num_columns", &SEK3::num_columns)
      .def_property_readonly("dim", &SEK3::dim);

  py::class_<ImuSample>(m, "ImuSample")
      .def(py::init([](double t, const Vector3& gyro, const Vector3& accel) {
             return ImuSample{t, gyro, accel};
           }),
           py::arg("t"), py::arg("gyro"), py::arg("accel"))
      .def_readwrite("t", &ImuSample::t)
      .def_readwrite("gyro", &ImuSample::gyro)
      .def_readwrite("accel", &ImuSample::accel);

  py::class_<ImuBias>(m, "ImuBias")
      .def(py::init([](const Vector3& gyro, const Vector3& accel) { return ImuBias{gyro, accel}; }),
           py::arg("gyro") = Vector3::Zero(), py::arg("accel") = Vector3::Zero())
      .def_readwrite("gyro", &ImuBias::gyro)
      .def_readwrite("accel", &ImuBias::accel);

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("state", &Prediction::state)
      .def_readonly("jacobian", &Prediction::jacobian);
  m.def("predict",
        [](const SEK3& X, const ImuSample& s, const ImuBias& b, const Vector3& g, double dt) {
          return predict(X, s, b, g, dt);
        },
        py::arg("state"), py::arg("sample"), py::arg("bias"), py::arg("gravity"), py::arg("dt"));

  py::class_<ContactMeasurement>(m, "ContactMeasurement")
      .def(py::init([](int foot_id, const Vector3& position, bool touchdown) {
             return ContactMeasurement{foot_id, position, touchdown};
           }),
           py::arg("foot_id"), py::arg("position"), py::arg("touchdown") = false)
      .def_readwrite("foot_id", &ContactMeasurement::foot_id)
      .def_readwrite("position", &ContactMeasurement::position)
      .def_readwrite("touchdown", &ContactMeasurement::touchdown);

  py::class_<ContactPacket>(m, "ContactPacket")
      .def(py::init([](double t, std::vector<ContactMeasurement> feet) {
             return ContactPacket{t, std::move(feet)};
           }),
           py::arg("t"), py::arg("feet"))
      .def_readwrite("t", &ContactPacket::t)
      .def_readwrite("feet", &ContactPacket::feet);

  py::class_<GroundTruthPose>(m, "GroundTruthPose")
      .def_readonly("t", &GroundTruthPose::t)
      .def_readonly("position", &GroundTruthPose::position)
      .def_property_readonly("rotation",
                             [](const GroundTruthPose& p) { return Matrix3(p.orientation.toRotationMatrix()); });

  py::class_<StampedPose>(m, "StampedPose")
      .def(py::init([](double t, const Matrix3& R, const Vector3& p) { return StampedPose{t, R, p}; }),
           py::arg("t"), py::arg("rotation"), py::arg("position"))
      .def_readwrite("t", &StampedPose::t)
      .def_readwrite("rotation", &StampedPose::rotation)
      .def_readwrite("position", &StampedPose::position);

  // Configs cross the boundary as JSON text, the same format the CLI reads.
  py::class_<EstimatorConfig>(m, "EstimatorConfig")
      .def(py::init([](const std::string& json) { return parse_config(json); }), py::arg("json") = "{}")
      .def_property(
          "variant", [](const EstimatorConfig& c) { return variant_name(c.variant); },
          [](EstimatorConfig& c, const std::string& v) { c.variant = parse_variant(v); })
      .def_readwrite("feet", &EstimatorConfig::feet)
      .def("validate", &EstimatorConfig::validate)
      .def("to_json", &format_config);

  py::class_<NavEstimate>(m, "NavEstimate")
      .def_readonly("t", &NavEstimate::t)
      .def_property_readonly("rotation", &NavEstimate::rotation)
      .def_property_readonly("position", &NavEstimate::position)
      .def_property_readonly("velocity", &NavEstimate::velocity)
      .def_readonly("covariance", &NavEstimate::covariance);

  py::class_<Estimator>(m, "Estimator")
      .def_property_readonly("initialized", &Estimator::initialized)
      .def_property_readonly("time", &Estimator::time)
      .def_property_readonly("scheduled_update_count", &Estimator::scheduled_update_count)
      .def("process_imu", &Estimator::process_imu, py::arg("sample"))
      .def("process_contact", &Estimator::process_contact, py::arg("packet"))
      .def("current_estimate", py::overload_cast<>(&Estimator::current_estimate, py::const_))
      .def("current_estimate", py::overload_cast<double>(&Estimator::current_estimate, py::const_),
           py::arg("t"));
  m.def("make_estimator", &make_estimator, py::arg("config"));

  py::class_<SyntheticLog>(m, "SyntheticLog")
      .def_readonly("records", &SyntheticLog::records)
      .def_readonly("ground_truth", &SyntheticLog::ground_truth)
      .def_readonly("config", &SyntheticLog::config);
  m.def("generate_synthetic",
        [](const std::string& gait_json) { return generate_synthetic(parse_gait_config(gait_json)); },
        py::arg("gait_json") = "{}");
  m.def("write_synthetic", &write_synthetic, py::arg("log"), py::arg("dir"));

  m.def("parse_log", py::overload_cast<const std::filesystem::path&>(&parse_log), py::arg("path"));
  m.def("ground_truth_of", [](const std::vector<LogRecord>& r) { return ground_truth_of(r); });

  py::class_<ReplayResult>(m, "ReplayResult")
      .def_readonly("trajectory", &ReplayResult::trajectory)
      .def_readonly("scheduled_updates", &ReplayResult::scheduled_updates)
      .def_readonly("initialization_time", &ReplayResult::initialization_time);
  m.def("replay",
        [](const std::vector<LogRecord>& records, const EstimatorConfig& config, double output_rate) {
          return replay(records, config, ReplayOptions{output_rate});
        },
        py::arg("records"), py::arg("config"), py::arg("output_rate") = 100.0);

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("pose_count", &MetricsReport::pose_count)
      .def_readonly("rpe_pairs", &MetricsReport::rpe_pairs)
      .def_readonly("rpe_delta", &MetricsReport::rpe_delta)
      .def_readonly("ape_t", &MetricsReport::ape_t)
      .def_readonly("ape_r", &MetricsReport::ape_r)
      .def_readonly("rpe_t", &MetricsReport::rpe_t)
      .def_readonly("rpe_r", &MetricsReport::rpe_r)
      .def_readonly("ape_z", &MetricsReport::ape_z)
      .def("to_json", &format_report);
  m.def("evaluate",
        [](const std::vector<StampedPose>& est, const std::vector<StampedPose>& gt, double delta) {
          return evaluate(est, gt, delta);
        },
        py::arg("est"), py::arg("gt"), py::arg("rpe_delta") = 1.0);

  m.def("write_trajectory",
        [](const std::filesystem::path& path, const std::vector<StampedPose>& poses) {
          write_trajectory(path, poses);
        },
        py::arg("path"), py::arg("poses"));
  m.def("read_trajectory", py::overload_cast<const std::filesystem::path&>(&read_trajectory),
        py::arg("path"));
}
