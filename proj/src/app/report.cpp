#include "evdvsr/app/report.hpp"

#include "evdvsr/error.hpp"
#include "evdvsr/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace evdvsr::app {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t"), e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return fields;
}

// Numeric fields of every non-comment line; each line must have exactly `count` of them.
std::vector<std::vector<double>> parse_numeric(std::istream& in, const std::string& source, std::size_t count) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto fail = [&] {
            throw DataError(source + ":" + std::to_string(lineno) + ": malformed log line '" + line + "'");
        };
        const auto fields = split_fields(line);
        if (fields.size() != count) fail();
        std::vector<double> row;
        for (const auto& f : fields) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(f, &pos));
                if (pos != f.size()) fail();
            } catch (const std::logic_error&) {
                fail();
            }
        }
        rows.push_back(row);
    }
    return rows;
}

// 3x5 glyphs for axis labels.
const std::map<char, std::array<const char*, 5>>& glyphs() {
    static const std::map<char, std::array<const char*, 5>> g = {
        {'0', {"###", "#.#", "#.#", "#.#", "###"}}, {'1', {".#.", "##.", ".#.", ".#.", "###"}},
        {'2', {"###", "..#", "###", "#..", "###"}}, {'3', {"###", "..#", "###", "..#", "###"}},
        {'4', {"#.#", "#.#", "###", "..#", "..#"}}, {'5', {"###", "#..", "###", "..#", "###"}},
        {'6', {"###", "#..", "###", "#.#", "###"}}, {'7', {"###", "..#", "..#", "..#", "..#"}},
        {'8', {"###", "#.#", "###", "#.#", "###"}}, {'9', {"###", "#.#", "###", "..#", "###"}},
        {'.', {"...", "...", "...", "...", ".#."}}, {'-', {"...", "...", "###", "...", "..."}},
        {'+', {"...", ".#.", "###", ".#.", "..."}}, {'e', {"...", "###", "#.#", "##.", "###"}},
    };
    return g;
}

void put(Image& img, int x, int y, const std::array<float, 3>& color) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    for (int c = 0; c < 3; ++c) img.at(c, y, x) = color[static_cast<std::size_t>(c)];
}

void draw_text(Image& img, int x, int y, const std::string& text, int scale = 2) {
    const std::array<float, 3> ink{0.0f, 0.0f, 0.0f};
    for (char ch : text) {
        const auto it = glyphs().find(ch);
        if (it != glyphs().end())
            for (int r = 0; r < 5; ++r)
                for (int col = 0; col < 3; ++col)
                    if (it->second[static_cast<std::size_t>(r)][col] == '#')
                        for (int dy = 0; dy < scale; ++dy)
                            for (int dx = 0; dx < scale; ++dx) put(img, x + col * scale + dx, y + r * scale + dy, ink);
        x += 4 * scale;
    }
}

int text_width(const std::string& text, int scale = 2) { return static_cast<int>(text.size()) * 4 * scale; }

// Integer-endpoint line, one pixel wide.
void draw_line(Image& img, double x0, double y0, double x1, double y1, const std::array<float, 3>& color) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        put(img, static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))),
            color);
    }
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string fmt(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

void write_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (width.size() <= i) width.push_back(0);
            width[i] = std::max(width[i], r[i].size());
        }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::string line;
        for (std::size_t i = 0; i < rows[k].size(); ++i) {
            std::string cell = rows[k][i];
            cell.resize(width[i], ' ');
            line += (i ? "  " : "") + cell;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << "\n";
        if (k == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
        }
    }
}

}  // namespace

std::vector<TrainLogEntry> parse_train_log(std::istream& in, const std::string& source) {
    std::vector<TrainLogEntry> out;
    for (const auto& r : parse_numeric(in, source, 6))
        out.push_back({static_cast<std::int64_t>(r[0]), r[1], r[2], r[3], r[4], r[5]});
    return out;
}

std::vector<ValLogEntry> parse_val_log(std::istream& in, const std::string& source) {
    std::vector<ValLogEntry> out;
    for (const auto& r : parse_numeric(in, source, 3)) out.push_back({static_cast<std::int64_t>(r[0]), r[1], r[2]});
    return out;
}

Image render_plot(const PlotSpec& spec, PlotAxes* axes_out) {
    PlotAxes ax;
    bool any = false;
    const auto ty = [&](double v) { return spec.log_y ? std::log10(std::max(v, 1e-30)) : v; };
    for (const auto& s : spec.series) {
        if (s.x.size() != s.y.size()) throw InvalidInput("render_plot: series '" + s.label + "' has mismatched x and y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (!any) {
                ax = {s.x[i], s.x[i], ty(s.y[i]), ty(s.y[i])};
                any = true;
            }
            ax.x_min = std::min(ax.x_min, s.x[i]);
            ax.x_max = std::max(ax.x_max, s.x[i]);
            ax.y_min = std::min(ax.y_min, ty(s.y[i]));
            ax.y_max = std::max(ax.y_max, ty(s.y[i]));
        }
    }
    if (!any) throw InvalidInput("render_plot: no finite data");
    if (axes_out) *axes_out = ax;
    // Degenerate ranges are widened only for drawing.
    double x_lo = ax.x_min, x_hi = ax.x_max, y_lo = ax.y_min, y_hi = ax.y_max;
    if (x_hi == x_lo) x_lo -= 0.5, x_hi += 0.5;
    if (y_hi == y_lo) y_lo -= 0.5, y_hi += 0.5;
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    Image img(3, spec.height, spec.width, 1.0f);
    const int left = 70, right = spec.width - 20, top = 20, bottom = spec.height - 40;
    const std::array<float, 3> frame{0.0f, 0.0f, 0.0f}, grid{0.85f, 0.85f, 0.85f};
    for (int k = 1; k < 4; ++k) {
        const double gy = top + (bottom - top) * k / 4.0;
        draw_line(img, left, gy, right, gy, grid);
    }
    draw_line(img, left, top, right, top, frame);
    draw_line(img, left, bottom, right, bottom, frame);
    draw_line(img, left, top, left, bottom, frame);
    draw_line(img, right, top, right, bottom, frame);
    const auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * (right - left); };
    const auto py = [&](double y) { return bottom - (ty(y) - y_lo) / (y_hi - y_lo) * (bottom - top); };
    for (const auto& s : spec.series) {
        bool have = false;
        double lx = 0.0, ly = 0.0;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                have = false;
                continue;
            }
            const double x = px(s.x[i]), y = py(s.y[i]);
            if (have) draw_line(img, lx, ly, x, y, s.color);
            else put(img, static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)), s.color);
            lx = x;
            ly = y;
            have = true;
        }
    }
    const std::string x0 = label(ax.x_min), x1 = label(ax.x_max);
    draw_text(img, left, bottom + 8, x0);
    draw_text(img, right - text_width(x1), bottom + 8, x1);
    const auto y_label = [&](double v) { return label(spec.log_y ? std::pow(10.0, v) : v); };
    draw_text(img, 4, bottom - 10, y_label(ax.y_min));
    draw_text(img, 4, top, y_label(ax.y_max));
    return img;
}

RunSummary load_run(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("run directory " + dir.string() + " does not exist");
    RunSummary run;
    run.name = fs::absolute(dir).lexically_normal().filename().string();
    if (run.name.empty()) run.name = fs::absolute(dir).lexically_normal().parent_path().filename().string();
    const fs::path cfg = dir / "config.txt";
    if (!fs::exists(cfg)) throw DataError(dir.string() + ": missing config.txt");
    apply_config_file(run.config, cfg);
    const auto aggregate = [&](const fs::path& p) -> std::optional<metrics::ClipMetrics> {
        if (!fs::exists(p)) return std::nullopt;
        std::ifstream in(p);
        const auto report = metrics::MetricReport::parse_lines(in, p.string());
        if (report.clips.empty()) throw DataError(p.string() + ": no metric rows");
        return report.aggregate();
    };
    run.model = aggregate(dir / "metrics.txt");
    run.bicubic = aggregate(dir / "bicubic_metrics.txt");
    if (fs::exists(dir / "train_log.txt")) {
        std::ifstream in(dir / "train_log.txt");
        run.train = parse_train_log(in, (dir / "train_log.txt").string());
    }
    if (fs::exists(dir / "val_log.txt")) {
        std::ifstream in(dir / "val_log.txt");
        run.val = parse_val_log(in, (dir / "val_log.txt").string());
    }
    if (!run.model && run.train.empty() && run.val.empty())
        throw DataError(dir.string() + ": no metric or training logs");
    return run;
}

void write_run_table(std::ostream& out, const std::vector<RunSummary>& runs) {
    std::vector<std::vector<std::string>> rows{
        {"run", "toggles", "iters", "psnr", "ssim", "tof", "tcc", "bicubic_psnr", "gain_db"}};
    for (const auto& r : runs) {
        std::vector<std::string> row{r.name, toggle_hash(r.config),
                                     r.train.empty() ? "-" : std::to_string(r.train.back().iter + 1)};
        if (r.model) {
            row.insert(row.end(), {fmt(r.model->psnr, 3), fmt(r.model->ssim, 4), fmt(r.model->tof, 4), fmt(r.model->tcc, 4)});
        } else if (!r.val.empty()) {
            row.insert(row.end(), {fmt(r.val.back().psnr, 3), "-", "-", "-"});
        } else {
            row.insert(row.end(), {"-", "-", "-", "-"});
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double base = r.bicubic ? r.bicubic->psnr : !r.val.empty() ? r.val.back().bicubic_psnr : nan;
        const double ours = r.model ? r.model->psnr : !r.val.empty() ? r.val.back().psnr : nan;
        row.push_back(std::isnan(base) ? "-" : fmt(base, 3));
        row.push_back(std::isnan(base) || std::isnan(ours) ? "-" : fmt(ours - base, 3));
        rows.push_back(row);
    }
    write_table(out, rows);
}

void write_ablation_table(std::ostream& out, const std::vector<RunSummary>& runs) {
    struct Acc {
        std::string summary;
        int runs = 0, scored = 0;
        double psnr = 0, ssim = 0, tof = 0, tcc = 0;
    };
    std::vector<std::pair<std::string, Acc>> groups;  // first-seen order
    for (const auto& r : runs) {
        const std::string key = toggle_hash(r.config);
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
        if (it == groups.end()) {
            groups.push_back({key, Acc{toggle_summary(r.config)}});
            it = std::prev(groups.end());
        }
        Acc& a = it->second;
        ++a.runs;
        if (r.model) {
            ++a.scored;
            a.psnr += r.model->psnr;
            a.ssim += r.model->ssim;
            a.tof += r.model->tof;
            a.tcc += r.model->tcc;
        }
    }
    std::vector<std::vector<std::string>> rows{{"toggles", "runs", "psnr", "ssim", "tof", "tcc", "settings"}};
    for (const auto& [key, a] : groups) {
        const auto mean = [&](double v, int d) { return a.scored ? fmt(v / a.scored, d) : std::string("-"); };
        rows.push_back({key, std::to_string(a.runs), mean(a.psnr, 3), mean(a.ssim, 4), mean(a.tof, 4), mean(a.tcc, 4),
                        a.summary});
    }
    write_table(out, rows);
}

void write_report(const std::vector<RunSummary>& runs, const fs::path& out_dir) {
    if (runs.empty()) throw InvalidInput("report: no runs");
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "report.txt");
        out << "Runs\n\n";
        write_run_table(out, runs);
        out << "\nAblations (keyed by toggle hash)\n\n";
        write_ablation_table(out, runs);
    }
    static const std::array<std::array<float, 3>, 6> palette{{{0.1f, 0.3f, 0.8f},
                                                              {0.8f, 0.2f, 0.1f},
                                                              {0.1f, 0.6f, 0.2f},
                                                              {0.6f, 0.2f, 0.7f},
                                                              {0.9f, 0.6f, 0.0f},
                                                              {0.2f, 0.6f, 0.7f}}};
    for (const auto& r : runs) {
        if (!r.train.empty()) {
            PlotSpec loss;
            loss.log_y = true;
            Series s{"L_total", {}, {}, palette[0]};
            for (const auto& e : r.train) {
                s.x.push_back(static_cast<double>(e.iter));
                s.y.push_back(e.total);
            }
            loss.series.push_back(s);
            write_png(out_dir / (r.name + "_loss.png"), render_plot(loss));
        }
        if (!r.val.empty()) {
            PlotSpec psnr;
            Series model{"psnr", {}, {}, palette[0]}, base{"bicubic", {}, {}, palette[1]};
            for (const auto& e : r.val) {
                model.x.push_back(static_cast<double>(e.iter));
                model.y.push_back(e.psnr);
                base.x.push_back(static_cast<double>(e.iter));
                base.y.push_back(e.bicubic_psnr);
            }
            psnr.series = {model, base};
            write_png(out_dir / (r.name + "_psnr.png"), render_plot(psnr));
        }
    }
}

}  // namespace evdvsr::app
