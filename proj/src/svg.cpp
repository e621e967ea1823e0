#include "kcb/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kcb {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 600.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

std::string render_regret_svg(const std::vector<SvgSeries>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label) {
    if (series.empty()) throw std::invalid_argument("svg: no series");
    std::size_t T = 0;
    double y_max = 0.0;
    for (const auto& s : series) {
        if (s.mean.empty() || s.se.size() != s.mean.size())
            throw std::invalid_argument("svg: series must be nonempty with matching se");
        T = std::max(T, s.mean.size());
        for (std::size_t t = 0; t < s.mean.size(); ++t)
            y_max = std::max(y_max, s.mean[t] + s.se[t]);
    }
    if (y_max <= 0.0) y_max = 1.0;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double t) { return kLeft + pw * (t / static_cast<double>(T)); };
    auto sy = [&](double v) { return kTop + ph * (1.0 - v / y_max); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    // axes + ticks
    o << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
      << "\" y2=\"" << kTop + ph << "\"/>\n";
    o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + ph << "\"/>\n</g>\n";
    o << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double xt = static_cast<double>(T) * i / 5.0;
        const double yt = y_max * i / 5.0;
        o << "<text x=\"" << num(sx(xt)) << "\" y=\"" << num(kTop + ph + 16)
          << "\" text-anchor=\"middle\">" << tick_label(xt) << "</text>\n";
        o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sy(yt) + 4)
          << "\" text-anchor=\"end\">" << tick_label(yt) << "</text>\n";
    }
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    o << "<text x=\"16\" y=\"" << kTop + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">" << y_label << "</text>\n";
    o << "</g>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
        // +-1 SE band
        o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (std::size_t t = 0; t < s.mean.size(); ++t)
            o << num(sx(static_cast<double>(t + 1))) << ","
              << num(sy(s.mean[t] + s.se[t])) << " ";
        for (std::size_t t = s.mean.size(); t-- > 0;)
            o << num(sx(static_cast<double>(t + 1))) << ","
              << num(sy(std::max(s.mean[t] - s.se[t], 0.0))) << " ";
        o << "\"/>\n";
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t t = 0; t < s.mean.size(); ++t)
            o << num(sx(static_cast<double>(t + 1))) << "," << num(sy(s.mean[t])) << " ";
        o << "\"/>\n";
        // legend entry
        const double ly = kTop + 14.0 + 18.0 * static_cast<double>(si);
        o << "<line x1=\"" << kLeft + 10 << "\" y1=\"" << num(ly) << "\" x2=\"" << kLeft + 34
          << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << kLeft + 40 << "\" y=\"" << num(ly + 4)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

void write_regret_svg(const std::string& path, const std::vector<SvgSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label) {
    const std::string body = render_regret_svg(series, title, x_label, y_label);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
}

} // namespace kcb
