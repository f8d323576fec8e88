#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>


#include "wifisense/csi/record.hpp"
#include "wifisense/csi/sync.hpp"
#include "wifisense/dgnn/dgnn.hpp"
#include "wifisense/error.hpp"
#include "wifisense/metrics/confusion.hpp"
#include "wifisense/metrics/pck.hpp"
#include "wifisense/nn/checkpoint.hpp"
#include "wifisense/synth/motion.hpp"
#include "wifisense/tednet/tednet.hpp"

namespace py = pybind11;
using namespace wifisense;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (N, 17, 2) coordinates plus an optional (N, 17) validity mask.
std::vector<keypoints::Skeleton> to_skeletons(const Array& xy, const std::optional<py::array_t<bool>>& valid) {
  if (xy.ndim() != 3 || xy.shape(1) != static_cast<py::ssize_t>(keypoints::kJoints) || xy.shape(2) != 2)
    throw DimensionError("expected an (N, 17, 2) coordinate array");
  const auto n = static_cast<std::size_t>(xy.shape(0));
  auto c = xy.unchecked<3>();
  std::vector<keypoints::Skeleton> out(n);
  std::optional<py::detail::unchecked_reference<bool, 2>> mask;
  if (valid) {
    if (valid->ndim() != 2 || valid->shape(0) != xy.shape(0) ||
        valid->shape(1) != static_cast<py::ssize_t>(keypoints::kJoints))
      throw DimensionError("validity mask must be (N, 17)");
    mask.emplace(valid->unchecked<2>());
  }
  for (std::size_t f = 0; f < n; ++f) {
    out[f].frame_index = f;
    for (std::size_t j = 0; j < keypoints::kJoints; ++j) {
      const auto fi = static_cast<py::ssize_t>(f), ji = static_cast<py::ssize_t>(j);
      out[f].keypoints[j] = {c(fi, ji, 0), c(fi, ji, 1), mask ? (*mask)(fi, ji) : true, false};
    }
  }
  return out;
}

py::array_t<double> from_skeletons(const std::vector<keypoints::Skeleton>& frames) {
  py::array_t<double> out({static_cast<py::ssize_t>(frames.size()), py::ssize_t{17}, py::ssize_t{2}});
  auto m = out.mutable_unchecked<3>();
  for (std::size_t f = 0; f < frames.size(); ++f)
    for (std::size_t j = 0; j < keypoints::kJoints; ++j) {
      m(f, j, 0) = frames[f].keypoints[j].x;
      m(f, j, 1) = frames[f].keypoints[j].y;
    }
  return out;
}

py::dict pck_dict(const metrics::PckReport& r) {
  py::array_t<double> percent({static_cast<py::ssize_t>(keypoints::kJoints),
                               static_cast<py::ssize_t>(r.alphas.size())});
  auto m = percent.mutable_unchecked<2>();
  for (std::size_t k = 0; k < keypoints::kJoints; ++k)
    for (std::size_t a = 0; a < r.alphas.size(); ++a) m(k, a) = r.percent[k][a];
  py::dict d;
  d["alphas"] = r.alphas;
  d["percent"] = percent;
  d["avg"] = r.avg;
  d["frames"] = r.frames;
  d["excluded_frames"] = r.excluded_frames;
  d["table"] = metrics::format_pck_table(r);
  return d;
}

}  // namespace

PYBIND11_MODULE(_wifisense, m) {
  m.doc() = "Wi-Fi CSI pose and action toolkit";

  auto base = py::register_exception<Error>(m, "WifisenseError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<AuditError>(m, "AuditError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.attr("JOINTS") = py::cast([] {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < keypoints::kJoints; ++j) names.emplace_back(keypoints::joint_name(j));
    return names;
  }());

  // csi
  m.def("crc16", [](py::bytes data) {
    const std::string s = data;
    return csi::crc16_ccitt({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  });
  m.def("encode_record", [](int receiver, std::uint32_t seq, const std::vector<int>& amplitudes) {
    if (amplitudes.size() != csi::kSubcarriers) throw DimensionError("expected 114 amplitudes");
    csi::CsiRecord r;
    r.receiver_id = static_cast<std::uint8_t>(receiver);
    r.seq = seq;
    for (std::size_t i = 0; i < csi::kSubcarriers; ++i) r.amplitudes[i] = static_cast<std::uint8_t>(amplitudes[i]);
    const auto bytes = csi::encode_record(r);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("parse_record", [](py::bytes data) {
    const std::string s = data;
    const auto r = csi::parse_record({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    return py::make_tuple(r.receiver_id, r.seq,
                          std::vector<int>(r.amplitudes.begin(), r.amplitudes.end()));
  });
  m.def(
      "aligned_seqs",
      [](const std::vector<std::vector<std::uint32_t>>& seqs) {
        std::vector<std::vector<csi::CsiRecord>> streams(seqs.size());
        for (std::size_t r = 0; r < seqs.size(); ++r)
          for (std::uint32_t s : seqs[r]) {
            csi::CsiRecord rec;
            rec.receiver_id = static_cast<std::uint8_t>(r);
            rec.seq = s;
            streams[r].push_back(rec);
          }
        const auto result = csi::synchronize(streams, {.receivers = seqs.size()});
        std::vector<std::uint64_t> out;
        for (const auto& s : result.samples) out.push_back(s.extended_seq);
        return out;
      },
      py::arg("seqs"), "Extended seq numbers present on every receiver stream.");

  // metrics
  m.def(
      "pck",
      [](const Array& preds, const Array& gts, const std::vector<double>& alphas,
         std::optional<py::array_t<bool>> pred_valid, std::optional<py::array_t<bool>> gt_valid) {
        const auto p = to_skeletons(preds, pred_valid);
        const auto g = to_skeletons(gts, gt_valid);
        return pck_dict(metrics::pck(p, g, {alphas}));
      },
      py::arg("preds"), py::arg("gts"), py::arg("alphas") = std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5},
      py::arg("pred_valid") = py::none(), py::arg("gt_valid") = py::none());
  m.def("confusion", [](const std::vector<int>& preds, const std::vector<int>& targets) {
    const auto cm = metrics::confusion(preds, targets);
    py::dict d;
    d["counts"] = cm.counts;
    d["per_class_accuracy"] = cm.per_class_accuracy();
    d["binary_fall_accuracy"] = cm.binary_fall_accuracy();
    d["table"] = metrics::format_confusion_table(cm);
    return d;
  });

  // models
  m.def("dgnn_audit", [] { return dgnn::format_audit(dgnn::Dgnn(dgnn::DgnnConfig{}).audit()); });
  m.def("dgnn_parameter_count", [] { return dgnn::Dgnn(dgnn::DgnnConfig{}).params().total_count(); });
  m.def("tednet_shapes", [] {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
    const tednet::TedNet net(tednet::TedNetConfig{});
    for (const auto& r : net.shape_audit()) out.emplace_back(r.layer, r.shape);
    return out;
  });

  py::class_<tednet::TedNet>(m, "TedNet")
      .def(py::init([](std::uint64_t seed) {
             tednet::TedNetConfig c;
             c.seed = seed;
             return tednet::TedNet(c);
           }),
           py::arg("seed") = 0)
      .def("parameter_count", [](const tednet::TedNet& n) { return n.params().total_count(); })
      .def("load", [](tednet::TedNet& n, const std::filesystem::path& p) { nn::load_checkpoint(p, n.params()); })
      .def("save", [](const tednet::TedNet& n, const std::filesystem::path& p) { nn::save_checkpoint(p, n.params()); })
      .def(
          "predict",
          [](const tednet::TedNet& n, const Array& window) {
            const auto& c = n.config();
            if (window.ndim() != 3 || window.shape(0) != static_cast<py::ssize_t>(c.receivers) ||
                window.shape(1) != static_cast<py::ssize_t>(c.subcarriers) ||
                window.shape(2) != static_cast<py::ssize_t>(c.window))
              throw DimensionError("window must be (receivers, 114, window) amplitudes in [0, 1)");
            csi::CsiWindow w;
            const std::size_t per = c.subcarriers * c.window;
            for (std::size_t r = 0; r < c.receivers; ++r)
              w.receivers.push_back(nn::Tensor::from(
                  {1, c.subcarriers, c.window}, std::vector<double>(window.data() + r * per, window.data() + (r + 1) * per)));
            const nn::Tensor out = n.predict(w);
            py::array_t<double> arr({static_cast<py::ssize_t>(c.joints), py::ssize_t{2}});
            std::copy(out.data().begin(), out.data().end(), arr.mutable_data());
            return arr;
          },
          py::arg("window"), "Raw (joints, 2) output before clamping.");

  // synth
  m.def(
      "generate_motion",
      [](const std::string& action, double duration, std::uint64_t seed) {
        synth::MotionScript s;
        s.action = synth::parse_action(action);
        s.duration_s = duration;
        s.pre_fall_s = duration / 2.0;
        s.start_x = s.action == synth::Action::walk ? 0.35 : 0.5;
        s.seed = seed;
        const auto motion = synth::generate_motion(s);
        return py::make_tuple(from_skeletons(motion.frames), motion.labels);
      },
      py::arg("action"), py::arg("duration") = 10.0, py::arg("seed") = 0,
      "(frames, 17, 2) coordinates and per-frame labels; falls spend the first half on the lead-in.");
}
