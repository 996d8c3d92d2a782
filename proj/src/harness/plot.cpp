#include <algorithm>
#include <cmath>
#include <cstdio>

#include "harness.hpp"

namespace cwss::harness {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 150, kTop = 30, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const BenchSummary& s) {
  // Objective values can reach zero, so the log axis is floored.
  constexpr double kFloor = 1e-16;
  double lo = INFINITY, hi = -INFINITY;
  std::size_t kmax = 1;
  for (const auto& st : s.strategies) {
    kmax = std::max(kmax, st.curve_mean.size());
    for (std::size_t k = 0; k < st.curve_mean.size(); ++k) {
      const double up = st.curve_mean[k] + st.curve_std[k];
      const double dn = st.curve_mean[k] - st.curve_std[k];
      if (std::isfinite(up)) hi = std::max(hi, std::max(up, kFloor));
      if (std::isfinite(st.curve_mean[k])) lo = std::min(lo, std::max(st.curve_mean[k], kFloor));
      if (std::isfinite(dn) && dn > kFloor) lo = std::min(lo, dn);
    }
  }
  if (!(lo < hi)) {
    lo = 1e-3;
    hi = 1.0;
  }
  const double ylo = std::floor(std::log10(lo));
  const double yhi = std::max(ylo + 1, std::ceil(std::log10(hi)));
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const double xspan = static_cast<double>(std::max<std::size_t>(1, kmax - 1));

  auto px = [&](double k) { return kLeft + pw * k / xspan; };
  auto py = [&](double v) {
    const double l = std::log10(std::clamp(v, std::pow(10.0, ylo), std::pow(10.0, yhi)));
    return kTop + ph * (yhi - l) / (yhi - ylo);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (double e = ylo; e <= yhi; e += 1.0) {
    const double y = py(std::pow(10.0, e));
    svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kLeft + pw) +
           "\" y2=\"" + fmt(y) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(y + 4) +
           "\" text-anchor=\"end\">1e" + std::to_string(static_cast<int>(e)) + "</text>\n";
  }
  const int xticks = 5;
  for (int t = 0; t <= xticks; ++t) {
    const double k = std::round(xspan * t / xticks);
    svg += "<text x=\"" + fmt(px(k)) + "\" y=\"" + fmt(kTop + ph + 16) +
           "\" text-anchor=\"middle\">" + std::to_string(static_cast<long>(k)) + "</text>\n";
  }
  svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) +
         "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fmt(kLeft + pw / 2) + "\" y=\"" + fmt(kHeight - 12) +
         "\" text-anchor=\"middle\">iteration</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt(kTop + ph / 2) + ")\">objective (mean, ±1 std)</text>\n";

  for (std::size_t si = 0; si < s.strategies.size(); ++si) {
    const auto& st = s.strategies[si];
    const char* color = kColors[si % std::size(kColors)];
    if (st.curve_mean.empty()) continue;
    std::string band, line;
    for (std::size_t k = 0; k < st.curve_mean.size(); ++k)
      band += (k ? " " : "") + fmt(px(k)) + "," + fmt(py(st.curve_mean[k] + st.curve_std[k]));
    for (std::size_t k = st.curve_mean.size(); k-- > 0;)
      band += " " + fmt(px(k)) + "," + fmt(py(std::max(st.curve_mean[k] - st.curve_std[k], kFloor)));
    for (std::size_t k = 0; k < st.curve_mean.size(); ++k)
      line += (k ? " " : "") + fmt(px(k)) + "," + fmt(py(std::max(st.curve_mean[k], kFloor)));
    svg += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    const double ly = kTop + 14 + 16 * static_cast<double>(si);
    svg += "<line x1=\"" + fmt(kLeft + pw + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
           fmt(kLeft + pw + 32) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(kLeft + pw + 38) + "\" y=\"" + fmt(ly) + "\">BFGS-" +
           escape(st.name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace cwss::harness
