#include "evdvsr/app/cli.hpp"
#include "evdvsr/app/inference.hpp"
#include "evdvsr/app/selfcheck.hpp"
#include "evdvsr/error.hpp"
#include "evdvsr/event_io.hpp"
#include "evdvsr/events.hpp"
#include "evdvsr/metrics.hpp"
#include "evdvsr/synthetic.hpp"
#include "evdvsr/training.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace evdvsr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image to_image(const FloatArray& a) {
    if (a.ndim() != 3) throw py::value_error("expected a (C, H, W) float array");
    Image img(int(a.shape(0)), int(a.shape(1)), int(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

std::vector<Image> to_images(const FloatArray& a) {
    if (a.ndim() != 4) throw py::value_error("expected a (T, C, H, W) float array");
    std::vector<Image> out;
    for (py::ssize_t t = 0; t < a.shape(0); ++t) {
        Image img(int(a.shape(1)), int(a.shape(2)), int(a.shape(3)));
        std::copy(a.data(t), a.data(t) + img.size(), img.data.begin());
        out.push_back(std::move(img));
    }
    return out;
}

FloatArray from_images(const std::vector<Image>& frames) {
    if (frames.empty()) return FloatArray(std::vector<py::ssize_t>{0, 0, 0, 0});
    const Image& f = frames.front();
    FloatArray out({py::ssize_t(frames.size()), py::ssize_t(f.channels), py::ssize_t(f.height), py::ssize_t(f.width)});
    float* dst = out.mutable_data();
    for (const auto& img : frames) dst = std::copy(img.data.begin(), img.data.end(), dst);
    return out;
}

FloatArray from_image(const Image& img) {
    FloatArray out({py::ssize_t(img.channels), py::ssize_t(img.height), py::ssize_t(img.width)});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
}

py::dict events_to_dict(const events::EventStream& s) {
    const auto n = py::ssize_t(s.events.size());
    py::array_t<std::uint16_t> x(n), y(n);
    py::array_t<std::int64_t> t(n);
    py::array_t<std::int8_t> p(n);
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& e = s.events[std::size_t(i)];
        x.mutable_at(i) = e.x;
        y.mutable_at(i) = e.y;
        t.mutable_at(i) = e.t;
        p.mutable_at(i) = e.p;
    }
    py::dict d;
    d["x"] = x;
    d["y"] = y;
    d["t"] = t;
    d["p"] = p;
    d["width"] = s.width;
    d["height"] = s.height;
    return d;
}

std::vector<events::Event> to_events(const py::array_t<std::int64_t>& x, const py::array_t<std::int64_t>& y,
                                     const py::array_t<std::int64_t>& t, const py::array_t<std::int64_t>& p) {
    if (x.size() != y.size() || x.size() != t.size() || x.size() != p.size())
        throw py::value_error("x, y, t and p must have the same length");
    std::vector<events::Event> out(std::size_t(x.size()));
    for (py::ssize_t i = 0; i < x.size(); ++i)
        out[std::size_t(i)] = {std::uint16_t(x.at(i)), std::uint16_t(y.at(i)), t.at(i), std::int8_t(p.at(i))};
    return out;
}

py::dict metrics_to_dict(const metrics::ClipMetrics& m) {
    py::dict d;
    d["psnr"] = m.psnr;
    d["ssim"] = m.ssim;
    d["tof"] = m.tof;
    d["tcc"] = m.tcc;
    d["frames"] = m.frames;
    return d;
}

// Trained or freshly initialized network for numpy inference.
struct Model {
    Config config;
    training::TrainState state;

    static Model from_checkpoint(const std::filesystem::path& path) {
        Model m;
        m.config = training::read_checkpoint_config(path);
        m.state = training::load_checkpoint(path, m.config);
        return m;
    }

    static Model initialized(const std::vector<std::string>& overrides) {
        Model m;
        m.config = app::resolve_config_text("", overrides, nullptr);
        m.state = training::init_state(m.config);
        return m;
    }

    FloatArray run_clip(const std::filesystem::path& clip_dir, int tile, int overlap, bool zero) {
        auto sample = app::load_sample(clip_dir, config.model.scale, config.model.voxel_bins, false);
        if (zero) sample = app::zero_events(std::move(sample));
        std::vector<Image> out;
        {
            py::gil_scoped_release release;
            out = app::super_resolve(state.model, sample, {tile, overlap});
        }
        return from_images(out);
    }
};

}  // namespace

PYBIND11_MODULE(_evdvsr, m) {
    m.doc() = "Event-guided joint deblurring and video super-resolution";

    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_IOError);

    m.def(
        "voxelize",
        [](const py::array_t<std::int64_t>& x, const py::array_t<std::int64_t>& y, const py::array_t<std::int64_t>& t,
           const py::array_t<std::int64_t>& p, double t_begin, double t_end, int bins, int width, int height, bool reverse) {
            const auto ev = to_events(x, y, t, p);
            const auto g = events::voxelize(ev, {t_begin, t_end}, bins, width, height, reverse);
            FloatArray out({bins, height, width});
            std::copy(g.data.begin(), g.data.end(), out.mutable_data());
            return out;
        },
        py::arg("x"), py::arg("y"), py::arg("t"), py::arg("p"), py::arg("t_begin"), py::arg("t_end"), py::arg("bins"),
        py::arg("width"), py::arg("height"), py::arg("reverse") = false,
        "Bilinear temporal voxel grid (bins, height, width) of the events inside [t_begin, t_end].");

    m.def(
        "synthesize_blur", [](const FloatArray& frames) { return from_image(events::synthesize_blur(to_images(frames))); },
        py::arg("frames"), "Average of (K, C, H, W) sharp frames.");

    m.def(
        "simulate_events",
        [](const FloatArray& frames, const std::vector<std::int64_t>& timestamps, double threshold) {
            const auto imgs = to_images(frames);
            events::SimulatorOptions o;
            o.threshold = threshold;
            return events_to_dict(events::simulate_events(imgs, timestamps, o));
        },
        py::arg("frames"), py::arg("timestamps"), py::arg("threshold") = 0.15,
        "Threshold-crossing events of a (K, 1, H, W) grayscale sequence.");

    m.def("load_events", [](const std::filesystem::path& p) { return events_to_dict(events::load_events(p)); },
          py::arg("path"));

    m.def(
        "synthetic_clip",
        [](int exposures, std::uint64_t seed, int hr_size, int spe_min, int spe_max) {
            SyntheticOptions o;
            o.hr_height = o.hr_width = hr_size;
            o.sharp_per_exposure_min = spe_min;
            o.sharp_per_exposure_max = spe_max;
            const auto clip = generate_synthetic_clip(exposures, o, seed);
            py::dict d;
            d["frames"] = from_images(clip.frames);
            d["sharp_per_exposure"] = clip.plan.sharp_per_exposure;
            d["gap"] = clip.plan.gap;
            d["frame_interval_us"] = clip.plan.frame_interval_us;
            return d;
        },
        py::arg("exposures"), py::arg("seed") = 0, py::arg("hr_size") = 64, py::arg("sharp_per_exposure_min") = 8,
        py::arg("sharp_per_exposure_max") = 24, "High-rate moving-shapes frames (N, 3, H, W) and their exposure plan.");

    m.def(
        "psnr", [](const FloatArray& a, const FloatArray& b) { return metrics::psnr(to_image(a), to_image(b)).db; },
        py::arg("pred"), py::arg("gt"));
    m.def(
        "ssim", [](const FloatArray& a, const FloatArray& b) { return metrics::ssim(to_image(a), to_image(b)); },
        py::arg("pred"), py::arg("gt"));
    m.def(
        "evaluate_clip",
        [](const FloatArray& pred, const FloatArray& gt) {
            return metrics_to_dict(metrics::evaluate_clip("clip", to_images(pred), to_images(gt)));
        },
        py::arg("pred"), py::arg("gt"), "PSNR, SSIM, tOF and tCC of (T, 3, H, W) sequences.");

    m.def(
        "loss_r",
        [](const FloatArray& pred, const FloatArray& gt) {
            if (pred.size() != gt.size()) throw InvalidInput("loss_r: shape mismatch");
            const auto p = torch::from_blob(const_cast<float*>(pred.data()), {pred.size()}).clone();
            const auto g = torch::from_blob(const_cast<float*>(gt.data()), {gt.size()}).clone();
            return training::loss_r(p, g).item<double>();
        },
        py::arg("pred"), py::arg("gt"));

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full{"evdvsr"};
            full.insert(full.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& a : full) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = app::run_cli(int(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");

    m.def(
        "selfcheck",
        [](bool break_dcn_clamp) {
            app::FaultInjection f;
            f.dcn_clamp = break_dcn_clamp;
            std::ostringstream sink;
            py::list out;
            for (const auto& r : app::run_selfcheck(f, sink)) {
                py::dict d;
                d["name"] = r.name;
                d["pass"] = r.pass;
                d["measured"] = r.measured;
                d["tolerance"] = r.tolerance;
                d["error"] = r.error;
                out.append(d);
            }
            return out;
        },
        py::arg("break_dcn_clamp") = false);

    py::class_<Model>(m, "Model")
        .def_static("from_checkpoint", &Model::from_checkpoint, py::arg("path"))
        .def_static("initialized", &Model::initialized, py::arg("overrides") = std::vector<std::string>{},
                    "Fresh model from default settings plus 'key=value' overrides.")
        .def_property_readonly("scale", [](const Model& m) { return m.config.model.scale; })
        .def_property_readonly("iteration", [](const Model& m) { return m.state.iteration; })
        .def("super_resolve", &Model::run_clip, py::arg("clip_dir"), py::arg("tile") = 0, py::arg("overlap") = 16,
             py::arg("zero_events") = false, "HR frames (T, 3, sH, sW) for a clip directory with blur_lr/ and events.bin.");
}
