#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "dps/harness.hpp"

namespace dps {

namespace {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct MetricColumn {
    const char* key;    // file name stem
    const char* title;  // axis label with direction arrow
    double (*value)(const SweepRow&);
};

const MetricColumn kColumns[] = {
    {"psnr", "PSNR (dB) ↑", [](const SweepRow& r) { return r.report.psnr.mean; }},
    {"ssim", "SSIM ↑", [](const SweepRow& r) { return r.report.ssim.mean; }},
    {"rmse", "RMSE ↓", [](const SweepRow& r) { return r.report.rmse.mean; }},
    {"fid", "FID ↓", [](const SweepRow& r) { return r.report.frechet; }},
    {"k", "Kaggle score (K) ↑", [](const SweepRow& r) { return r.report.k.mean; }},
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#e377c2"};

std::string fmt(double v) { return detail::format_double(v); }

void write_chart(const std::filesystem::path& file, const std::string& title,
                 const std::string& x_label, std::vector<Series> series) {
    const double width = 640, height = 420;
    const double left = 70, right = 610, top = 50, bottom = 370;

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (auto& s : series) {
        std::sort(s.points.begin(), s.points.end());
        for (auto& [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (x_max - x_min < 1e-12) {
        double pad = std::max(1.0, std::abs(x_min) * 0.1);
        x_min -= pad;
        x_max += pad;
    }
    if (y_max - y_min < 1e-12) {
        double pad = std::max(1e-3, std::abs(y_min) * 0.1);
        y_min -= pad;
        y_max += pad;
    }
    double x_pad = 0.04 * (x_max - x_min);
    double y_pad = 0.06 * (y_max - y_min);
    x_min -= x_pad;
    x_max += x_pad;
    y_min -= y_pad;
    y_max += y_pad;

    auto px = [&](double x) {
        return left + (x - x_min) / (x_max - x_min) * (right - left);
    };
    auto py = [&](double y) {
        return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
    };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << (width / 2) << "\" y=\"26\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    // axes
    svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
        << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
        << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        double fx = x_min + (x_max - x_min) * i / 5.0;
        double fy = y_min + (y_max - y_min) * i / 5.0;
        svg << "<line x1=\"" << px(fx) << "\" y1=\"" << bottom << "\" x2=\"" << px(fx)
            << "\" y2=\"" << (bottom + 5) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << px(fx) << "\" y=\"" << (bottom + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"11\">" << fmt(fx) << "</text>\n"
            << "<line x1=\"" << (left - 5) << "\" y1=\"" << py(fy) << "\" x2=\"" << left
            << "\" y2=\"" << py(fy) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << (left - 8) << "\" y=\"" << (py(fy) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt(fy) << "</text>\n";
    }
    svg << "<text x=\"" << ((left + right) / 2) << "\" y=\"" << (bottom + 40)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << x_label << "</text>\n";

    int color = 0;
    double legend_y = top + 6;
    for (const auto& s : series) {
        const char* stroke = kPalette[color % 8];
        std::ostringstream path;
        for (size_t i = 0; i < s.points.size(); ++i) {
            path << (i == 0 ? "" : " ") << fmt(px(s.points[i].first)) << ','
                 << fmt(py(s.points[i].second));
        }
        if (s.points.size() > 1) {
            svg << "<polyline points=\"" << path.str()
                << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"/>\n";
        }
        for (const auto& [x, y] : s.points) {
            svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
                << "\" r=\"3\" fill=\"" << stroke << "\"/>\n";
        }
        svg << "<rect x=\"" << (right - 150) << "\" y=\"" << (legend_y - 8)
            << "\" width=\"10\" height=\"10\" fill=\"" << stroke << "\"/>\n"
            << "<text x=\"" << (right - 136) << "\" y=\"" << legend_y
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
            << "</text>\n";
        legend_y += 16;
        ++color;
    }
    svg << "</svg>\n";

    std::ofstream out(file);
    out << svg.str();
}

}  // namespace

void render_plots(const std::vector<SweepRow>& rows,
                  const std::filesystem::path& out_dir, std::ostream* log) {
    if (rows.empty()) {
        if (log) *log << "render_plots: no rows, nothing to draw\n";
        return;
    }
    std::filesystem::create_directories(out_dir);

    for (const auto& column : kColumns) {
        // metric vs zeta: one series per (variant, step count)
        std::map<std::string, Series> by_zeta;
        for (const auto& row : rows) {
            if (!row.zeta) continue;
            double v = column.value(row);
            if (std::isnan(v)) continue;
            std::string key = row.variant + " T=" + std::to_string(row.step_count);
            by_zeta[key].label = key;
            by_zeta[key].points.emplace_back(*row.zeta, v);
        }
        if (!by_zeta.empty()) {
            std::vector<Series> series;
            for (auto& [_, s] : by_zeta) series.push_back(std::move(s));
            write_chart(out_dir / (std::string(column.key) + "_vs_zeta.svg"),
                        column.title, "ζ (conditioning step size)",
                        std::move(series));
        }

        // metric vs step count: one series per (variant, zeta)
        std::map<std::string, Series> by_steps;
        for (const auto& row : rows) {
            double v = column.value(row);
            if (std::isnan(v)) continue;
            std::string key = row.variant +
                              (row.zeta ? " ζ=" + detail::format_double(*row.zeta)
                                        : std::string());
            by_steps[key].label = key;
            by_steps[key].points.emplace_back(row.step_count, v);
        }
        if (!by_steps.empty()) {
            std::vector<Series> series;
            for (auto& [_, s] : by_steps) series.push_back(std::move(s));
            write_chart(out_dir / (std::string(column.key) + "_vs_steps.svg"),
                        column.title, "diffusion step count", std::move(series));
        }
    }
}

}  // namespace dps
