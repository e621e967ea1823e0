#pragma once

#include <string>
#include <vector>

namespace kcb {

struct SvgSeries {
    std::string label;
    std::vector<double> mean;
    std::vector<double> se;  // same length as mean; band is mean +- se
};

// Static line plot with +-1 SE bands, one polyline per series. Output bytes
// depend only on the inputs.
std::string render_regret_svg(const std::vector<SvgSeries>& series, const std::string& title,
                              const std::string& x_label, const std::string& y_label);

void write_regret_svg(const std::string& path, const std::vector<SvgSeries>& series,
                      const std::string& title, const std::string& x_label,
                      const std::string& y_label);

} // namespace kcb
