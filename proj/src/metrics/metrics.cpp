#include "evdvsr/metrics.hpp"

#include "evdvsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace evdvsr::metrics {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b) || a.empty()) throw InvalidInput(std::string(what) + ": images must be non-empty with equal shapes");
}

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    const int half = size / 2;
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

// Valid-mode separable filtering of a plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int oh = h - n + 1, ow = w - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
    double clamped(int y, int x) const { return at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); }
    double bilinear(double y, double x) const {
        x = std::clamp(x, 0.0, w - 1.0);
        y = std::clamp(y, 0.0, h - 1.0);
        const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
        const double fx = x - x0, fy = y - y0;
        const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
        return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x1)) + fy * ((1 - fx) * at(y1, x0) + fx * at(y1, x1));
    }
};

Plane luma_plane(const Image& img) {
    const Image l = luminance(img);
    Plane p{l.height, l.width, std::vector<double>(l.data.begin(), l.data.end())};
    return p;
}

Plane half_size(const Plane& p) {
    Plane out{std::max(1, p.h / 2), std::max(1, p.w / 2), {}};
    out.v.resize(static_cast<std::size_t>(out.h) * out.w);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.v[static_cast<std::size_t>(y) * out.w + x] =
                0.25 * (p.clamped(2 * y, 2 * x) + p.clamped(2 * y, 2 * x + 1) + p.clamped(2 * y + 1, 2 * x) +
                        p.clamped(2 * y + 1, 2 * x + 1));
    return out;
}

double mean_abs_flow_difference(const Flow& a, const Flow& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dx.size(); ++i) acc += std::abs(a.dx[i] - b.dx[i]) + std::abs(a.dy[i] - b.dy[i]);
    return acc / static_cast<double>(a.dx.size());
}

void require_clips(std::span<const Image> pred, std::span<const Image> gt, const char* what) {
    if (pred.size() != gt.size()) throw InvalidInput(std::string(what) + ": clips differ in length");
    if (pred.size() < 2) throw InvalidInput(std::string(what) + ": clip must have at least 2 frames");
    for (std::size_t i = 0; i < pred.size(); ++i) require_same_shape(pred[i], gt[i], what);
}

}  // namespace

PsnrResult psnr(const Image& pred, const Image& gt) {
    require_same_shape(pred, gt, "psnr");
    double se = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - gt.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(pred.data.size());
    if (mse == 0.0) return {kPsnrCap, true};
    const double db = 10.0 * std::log10(1.0 / mse);
    if (db >= kPsnrCap) return {kPsnrCap, true};
    return {db, false};
}

double ssim(const Image& pred, const Image& gt) {
    require_same_shape(pred, gt, "ssim");
    constexpr int kWindow = 11;
    if (pred.height < kWindow || pred.width < kWindow) throw InvalidInput("ssim: image smaller than the 11x11 window");
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    static const std::vector<double> kernel = gaussian_window(kWindow, 1.5);
    const int h = pred.height, w = pred.width;
    const std::size_t n = pred.plane_size();
    double total = 0.0;
    std::size_t count = 0;
    for (int c = 0; c < pred.channels; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = pred.plane(c)[i];
            y[i] = gt.plane(c)[i];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, h, w, kernel), my = filter_valid(y, h, w, kernel);
        const auto exx = filter_valid(xx, h, w, kernel), eyy = filter_valid(yy, h, w, kernel);
        const auto exy = filter_valid(xy, h, w, kernel);
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double mxy = mx[i] * my[i];
            const double sxx = exx[i] - mx[i] * mx[i];
            const double syy = eyy[i] - my[i] * my[i];
            const double sxy = exy[i] - mxy;
            total += ((2.0 * mxy + c1) * (2.0 * sxy + c2)) /
                     ((mx[i] * mx[i] + my[i] * my[i] + c1) * (sxx + syy + c2));
        }
        count += mx.size();
    }
    return total / static_cast<double>(count);
}

Flow classical_flow(const Image& a, const Image& b, const ClassicalFlowOptions& options) {
    require_same_shape(a, b, "classical_flow");
    std::vector<Plane> pa{luma_plane(a)}, pb{luma_plane(b)};
    for (int l = 1; l < options.levels; ++l) {
        pa.push_back(half_size(pa.back()));
        pb.push_back(half_size(pb.back()));
    }
    Plane fx{pa.back().h, pa.back().w, std::vector<double>(pa.back().v.size(), 0.0)};
    Plane fy = fx;
    const int r = options.window_radius;
    for (int l = options.levels - 1; l >= 0; --l) {
        const Plane& A = pa[l];
        const Plane& B = pb[l];
        if (fx.h != A.h || fx.w != A.w) {
            Plane ux{A.h, A.w, std::vector<double>(A.v.size())}, uy = ux;
            const double sy = static_cast<double>(fx.h) / A.h, sx = static_cast<double>(fx.w) / A.w;
            for (int y = 0; y < A.h; ++y)
                for (int x = 0; x < A.w; ++x) {
                    const double cy = (y + 0.5) * sy - 0.5, cx = (x + 0.5) * sx - 0.5;
                    ux.v[static_cast<std::size_t>(y) * A.w + x] = fx.bilinear(cy, cx) / sx;
                    uy.v[static_cast<std::size_t>(y) * A.w + x] = fy.bilinear(cy, cx) / sy;
                }
            fx = std::move(ux);
            fy = std::move(uy);
        }
        // Spatial gradients and structure tensor of the reference frame are fixed per level;
        // each pixel then runs its own Gauss-Newton iterations with its window warped by its own flow.
        const std::size_t n = A.v.size();
        std::vector<double> gx(n), gy(n);
        for (int y = 0; y < A.h; ++y)
            for (int x = 0; x < A.w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * A.w + x;
                gx[i] = 0.5 * (A.clamped(y, x + 1) - A.clamped(y, x - 1));
                gy[i] = 0.5 * (A.clamped(y + 1, x) - A.clamped(y - 1, x));
            }
        for (int y = 0; y < A.h; ++y)
            for (int x = 0; x < A.w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * A.w + x;
                double sxx = options.regularization, sxy = 0.0, syy = options.regularization;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const std::size_t j = static_cast<std::size_t>(std::clamp(y + dy, 0, A.h - 1)) * A.w +
                                              std::clamp(x + dx, 0, A.w - 1);
                        sxx += gx[j] * gx[j];
                        sxy += gx[j] * gy[j];
                        syy += gy[j] * gy[j];
                    }
                const double det = sxx * syy - sxy * sxy;
                double u = fx.v[i], v = fy.v[i];
                for (int it = 0; it < options.iterations; ++it) {
                    double sxt = 0.0, syt = 0.0;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            const int yy = std::clamp(y + dy, 0, A.h - 1), xx = std::clamp(x + dx, 0, A.w - 1);
                            const std::size_t j = static_cast<std::size_t>(yy) * A.w + xx;
                            const double diff = B.bilinear(yy + v, xx + u) - A.v[j];
                            sxt += gx[j] * diff;
                            syt += gy[j] * diff;
                        }
                    u -= (syy * sxt - sxy * syt) / det;
                    v -= (sxx * syt - sxy * sxt) / det;
                }
                fx.v[i] = u;
                fy.v[i] = v;
            }
    }
    Flow out;
    out.height = fx.h;
    out.width = fx.w;
    out.dx.assign(fx.v.begin(), fx.v.end());
    out.dy.assign(fy.v.begin(), fy.v.end());
    return out;
}

double tof(std::span<const Image> pred, std::span<const Image> gt) {
    require_clips(pred, gt, "tof");
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < pred.size(); ++t) {
        acc += mean_abs_flow_difference(classical_flow(pred[t], pred[t + 1]), classical_flow(gt[t], gt[t + 1]));
    }
    return acc / static_cast<double>(pred.size() - 1);
}

double tcc(std::span<const Image> pred, std::span<const Image> gt) {
    require_clips(pred, gt, "tcc");
    const auto shifted_difference = [](const Image& a, const Image& b) {
        Image d(a.channels, a.height, a.width);
        for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = 0.5f * ((b.data[i] - a.data[i]) + 1.0f);
        return d;
    };
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < pred.size(); ++t)
        acc += ssim(shifted_difference(pred[t], pred[t + 1]), shifted_difference(gt[t], gt[t + 1]));
    return acc / static_cast<double>(pred.size() - 1);
}

ClipMetrics evaluate_clip(const std::string& name, std::span<const Image> pred, std::span<const Image> gt) {
    if (pred.size() != gt.size() || pred.empty()) throw InvalidInput("evaluate_clip: clip lengths differ or are empty");
    ClipMetrics m;
    m.clip = name;
    m.frames = static_cast<int>(pred.size());
    bool all_saturated = true;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto p = psnr(pred[i], gt[i]);
        m.psnr += p.db;
        all_saturated = all_saturated && p.saturated;
        m.ssim += ssim(pred[i], gt[i]);
    }
    m.psnr /= static_cast<double>(pred.size());
    m.ssim /= static_cast<double>(pred.size());
    m.psnr_saturated = all_saturated;
    if (pred.size() >= 2) {
        m.tof = tof(pred, gt);
        m.tcc = tcc(pred, gt);
    } else {
        m.tof = 0.0;
        m.tcc = 1.0;
    }
    return m;
}

ClipMetrics MetricReport::aggregate(bool frame_weighted) const {
    ClipMetrics all;
    all.clip = "ALL";
    if (clips.empty()) return all;
    double weight_total = 0.0;
    all.psnr_saturated = true;
    for (const auto& c : clips) {
        const double w = frame_weighted ? c.frames : 1.0;
        all.psnr += w * c.psnr;
        all.ssim += w * c.ssim;
        all.tof += w * c.tof;
        all.tcc += w * c.tcc;
        all.frames += c.frames;
        all.psnr_saturated = all.psnr_saturated && c.psnr_saturated;
        weight_total += w;
    }
    if (weight_total == 0.0) return aggregate(false);
    all.psnr /= weight_total;
    all.ssim /= weight_total;
    all.tof /= weight_total;
    all.tcc /= weight_total;
    return all;
}

void MetricReport::write_lines(std::ostream& out, bool frame_weighted) const {
    out << "# clip, psnr, ssim, tof, tcc\n";
    const auto row = [&](const ClipMetrics& m) {
        out << m.clip << ", " << std::fixed << std::setprecision(6) << m.psnr << ", " << m.ssim << ", " << m.tof << ", "
            << m.tcc << '\n';
    };
    for (const auto& c : clips) row(c);
    row(aggregate(frame_weighted));
    out.unsetf(std::ios::floatfield);
}

void MetricReport::write_table(std::ostream& out, bool frame_weighted) const {
    std::size_t width = 4;
    for (const auto& c : clips) width = std::max(width, c.clip.size());
    const auto row = [&](const ClipMetrics& m) {
        out << std::left << std::setw(static_cast<int>(width)) << m.clip << std::right << std::fixed
            << std::setw(8) << m.frames << std::setw(10) << std::setprecision(3) << m.psnr
            << (m.psnr_saturated ? "*" : " ") << std::setw(9) << std::setprecision(4) << m.ssim << std::setw(9)
            << std::setprecision(4) << m.tof << std::setw(9) << std::setprecision(4) << m.tcc << '\n';
    };
    out << std::left << std::setw(static_cast<int>(width)) << "clip" << std::right << std::setw(8) << "frames"
        << std::setw(11) << "PSNR" << std::setw(9) << "SSIM" << std::setw(9) << "tOF" << std::setw(9) << "TCC" << '\n';
    for (const auto& c : clips) row(c);
    row(aggregate(frame_weighted));
    out.unsetf(std::ios::floatfield);
}

MetricReport MetricReport::parse_lines(std::istream& in, const std::string& source) {
    MetricReport report;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            const auto b = field.find_first_not_of(" \t"), e = field.find_last_not_of(" \t\r");
            fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
        }
        const auto fail = [&] { throw DataError(source + ":" + std::to_string(lineno) + ": malformed metric line '" + line + "'"); };
        if (fields.size() != 5 || fields[0].empty()) fail();
        if (fields[0] == "ALL") continue;
        ClipMetrics m;
        m.clip = fields[0];
        try {
            std::size_t pos = 0;
            const auto num = [&](const std::string& s) {
                const double v = std::stod(s, &pos);
                if (pos != s.size()) fail();
                return v;
            };
            m.psnr = num(fields[1]);
            m.ssim = num(fields[2]);
            m.tof = num(fields[3]);
            m.tcc = num(fields[4]);
        } catch (const std::logic_error&) {
            fail();
        }
        m.psnr_saturated = m.psnr >= kPsnrCap;
        report.clips.push_back(m);
    }
    return report;
}

}  // namespace evdvsr::metrics
