#include "survkit/figures.hpp"

#include <algorithm>
#include <cmath>

#include "survkit/numfmt.hpp"

namespace survkit::figures {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string coord(double v) { return num_fixed(v, 2); }

// step = {1,2,5} * 10^k covering [0, hi] with ~target ticks
std::vector<double> nice_ticks(double hi, int target) {
    if (!(hi > 0.0)) return {0.0, 1.0};
    double raw = hi / target;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw) { step = mag * m; break; }
    }
    std::vector<double> ticks;
    for (double t = 0.0; t <= hi + step * 1e-9; t += step) ticks.push_back(t);
    return ticks;
}

struct Canvas {
    std::string body;
    double width, height;

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double sw = 1.0, const std::string& extra = "") {
        body += "  <line x1=\"" + coord(x1) + "\" y1=\"" + coord(y1) + "\" x2=\"" + coord(x2) +
                "\" y2=\"" + coord(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
                coord(sw) + "\"" + extra + "/>\n";
    }
    void path(const std::string& d, const std::string& stroke, double sw,
              const std::string& fill = "none", const std::string& extra = "") {
        body += "  <path d=\"" + d + "\" stroke=\"" + stroke + "\" stroke-width=\"" + coord(sw) +
                "\" fill=\"" + fill + "\"" + extra + "/>\n";
    }
    void polygon(const std::string& points, const std::string& fill, const std::string& extra) {
        body += "  <polygon points=\"" + points + "\" fill=\"" + fill + "\" stroke=\"none\"" +
                extra + "/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& extra = "") {
        body += "  <rect x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" width=\"" + coord(w) +
                "\" height=\"" + coord(h) + "\" fill=\"" + fill + "\"" + extra + "/>\n";
    }
    void circle(double cx, double cy, double r, const std::string& fill) {
        body += "  <circle cx=\"" + coord(cx) + "\" cy=\"" + coord(cy) + "\" r=\"" + coord(r) +
                "\" fill=\"" + fill + "\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size, const std::string& anchor,
              const std::string& fill = "#333333", const std::string& extra = "") {
        body += "  <text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" font-size=\"" +
                std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
                "\" font-family=\"Helvetica, Arial, sans-serif\"" + extra + ">" + esc(s) +
                "</text>\n";
    }
    std::string str() const {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
               "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
               coord(width) + "\" height=\"" + coord(height) + "\" viewBox=\"0 0 " + coord(width) +
               " " + coord(height) + "\">\n" + "  <rect x=\"0\" y=\"0\" width=\"" + coord(width) +
               "\" height=\"" + coord(height) + "\" fill=\"#ffffff\"/>\n" + body + "</svg>\n";
    }
};

}  // namespace

std::string km_panel(const std::vector<KmSeries>& series, const std::string& title,
                     const std::string& subtitle) {
    const double ml = 64, mr = 24, mt = 48, mb = 52;
    const double pw = 640, ph = 360;
    const double risk_row_h = 18;
    const double risk_block = 24 + risk_row_h * static_cast<double>(series.size());

    Canvas c;
    c.width = ml + pw + mr;
    c.height = mt + ph + mb + risk_block;

    double tmax = 0.0;
    for (const auto& s : series) tmax = std::max(tmax, s.curve.max_observed_time);
    if (tmax <= 0.0) tmax = 1.0;
    auto xticks = nice_ticks(tmax, 8);
    double xhi = std::max(tmax, xticks.back());

    auto px = [&](double t) { return ml + pw * (t / xhi); };
    auto py = [&](double s) { return mt + ph * (1.0 - s); };

    // frame + grid
    for (double yv = 0.0; yv <= 1.0001; yv += 0.25) {
        c.line(ml, py(yv), ml + pw, py(yv), "#dddddd", 0.5);
        c.text(ml - 8, py(yv) + 4, num_fixed(yv, 2), 11, "end");
    }
    for (double t : xticks) {
        c.line(px(t), mt + ph, px(t), mt + ph + 4, "#333333", 1.0);
        c.text(px(t), mt + ph + 18, num_compact(t), 11, "middle");
    }
    c.line(ml, mt, ml, mt + ph, "#333333", 1.0);
    c.line(ml, mt + ph, ml + pw, mt + ph, "#333333", 1.0);

    c.text(ml + pw / 2, mt - 24, title, 15, "middle", "#111111");
    if (!subtitle.empty()) c.text(ml + pw / 2, mt - 8, subtitle, 11, "middle", "#555555");
    c.text(ml + pw / 2, mt + ph + 36, "time (months)", 12, "middle");
    c.text(16, mt + ph / 2, "survival probability", 12, "middle",
           "#333333", " transform=\"rotate(-90 16 " + coord(mt + ph / 2) + ")\"");

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& curve = series[si].curve;
        const std::string color = kPalette[si % kPaletteSize];

        // confidence band as a step polygon (upper forward, lower backward)
        if (!curve.event_times.empty()) {
            std::string pts;
            double prev_u = 1.0;
            pts += coord(px(0)) + "," + coord(py(1.0)) + " ";
            for (std::size_t i = 0; i < curve.event_times.size(); ++i) {
                double x = px(curve.event_times[i]);
                pts += coord(x) + "," + coord(py(prev_u)) + " ";
                pts += coord(x) + "," + coord(py(curve.ci_upper[i])) + " ";
                prev_u = curve.ci_upper[i];
            }
            pts += coord(px(curve.max_observed_time)) + "," + coord(py(prev_u)) + " ";
            double prev_l = curve.ci_lower.back();
            pts += coord(px(curve.max_observed_time)) + "," + coord(py(prev_l)) + " ";
            for (std::size_t i = curve.event_times.size(); i-- > 0;) {
                double x = px(curve.event_times[i]);
                pts += coord(x) + "," + coord(py(curve.ci_lower[i])) + " ";
                double next_l = i > 0 ? curve.ci_lower[i - 1] : 1.0;
                pts += coord(x) + "," + coord(py(next_l)) + " ";
            }
            pts += coord(px(0)) + "," + coord(py(1.0));
            c.polygon(pts, color, " fill-opacity=\"0.12\"");
        }

        // survival step path
        std::string d = "M " + coord(px(0)) + " " + coord(py(1.0));
        double prev = 1.0;
        for (std::size_t i = 0; i < curve.event_times.size(); ++i) {
            d += " H " + coord(px(curve.event_times[i]));
            d += " V " + coord(py(curve.survival[i]));
            prev = curve.survival[i];
        }
        d += " H " + coord(px(curve.max_observed_time));
        (void)prev;
        c.path(d, color, 1.8);
    }

    // legend
    double lx = ml + 12, ly = mt + 14;
    for (std::size_t si = 0; si < series.size(); ++si) {
        const std::string color = kPalette[si % kPaletteSize];
        c.line(lx, ly - 4, lx + 22, ly - 4, color, 2.5);
        c.text(lx + 28, ly, series[si].label, 11, "start");
        ly += 16;
    }

    // number-at-risk table
    double ry = mt + ph + mb;
    c.text(ml, ry + 10, "number at risk", 11, "start", "#111111");
    for (std::size_t si = 0; si < series.size(); ++si) {
        const std::string color = kPalette[si % kPaletteSize];
        double yy = ry + 24 + risk_row_h * static_cast<double>(si);
        c.text(ml - 8, yy, series[si].label, 10, "end", color);
        for (double t : xticks) {
            std::size_t at_risk = 0;
            for (double obs : series[si].times)
                if (obs >= t) ++at_risk;
            c.text(px(t), yy, std::to_string(at_risk), 10, "middle");
        }
    }

    return c.str();
}

std::string forest_plot(const HazardRatioTable& table, const std::string& title) {
    const double ml = 150, mr = 170, mt = 56, mb = 44;
    const double pw = 420;
    const double row_h = 28;
    const double ph = row_h * static_cast<double>(table.size());

    Canvas c;
    c.width = ml + pw + mr;
    c.height = mt + ph + mb;

    // log-scaled axis range covering every interval, ref line at 1
    double lo = 1.0, hi = 1.0;
    for (const auto& r : table) {
        lo = std::min(lo, std::max(r.ci_lower, 1e-4));
        hi = std::max(hi, std::min(r.ci_upper, 1e4));
    }
    lo = std::min(lo * 0.9, 0.9);
    hi = std::max(hi * 1.1, 1.1);
    double llo = std::log(lo), lhi = std::log(hi);
    auto px = [&](double v) {
        double cl = std::clamp(v, lo, hi);
        return ml + pw * (std::log(cl) - llo) / (lhi - llo);
    };

    c.text(ml + pw / 2, mt - 30, title, 15, "middle", "#111111");
    c.text(ml + pw / 2, mt + ph + 32, "hazard ratio (log scale)", 12, "middle");

    // candidate ticks on the log axis
    for (double t : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        if (t < lo || t > hi) continue;
        c.line(px(t), mt, px(t), mt + ph, "#eeeeee", 0.5);
        c.line(px(t), mt + ph, px(t), mt + ph + 4, "#333333", 1.0);
        c.text(px(t), mt + ph + 16, num_compact(t), 11, "middle");
    }
    c.line(px(1.0), mt, px(1.0), mt + ph, "#888888", 1.0, " stroke-dasharray=\"4 3\"");
    c.line(ml, mt + ph, ml + pw, mt + ph, "#333333", 1.0);

    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& r = table[i];
        double y = mt + row_h * (static_cast<double>(i) + 0.5);
        c.text(ml - 10, y + 4, r.variable, 11, "end");
        c.line(px(r.ci_lower), y, px(r.ci_upper), y, "#1f77b4", 1.6);
        c.line(px(r.ci_lower), y - 4, px(r.ci_lower), y + 4, "#1f77b4", 1.6);
        c.line(px(r.ci_upper), y - 4, px(r.ci_upper), y + 4, "#1f77b4", 1.6);
        c.circle(px(r.hazard_ratio), y, 3.5, "#d62728");
        std::string annot = num_fixed(r.hazard_ratio, 3) + " (" + num_fixed(r.ci_lower, 3) +
                            " - " + num_fixed(r.ci_upper, 3) + ")";
        c.text(ml + pw + 10, y + 4, annot, 10, "start");
    }
    return c.str();
}

std::string log_odds_histogram(const LogOddsHistogram& hist, const std::string& title) {
    const double ml = 64, mr = 24, mt = 48, mb = 52;
    const double pw = 560, ph = 320;

    Canvas c;
    c.width = ml + pw + mr;
    c.height = mt + ph + mb;

    double xlo = hist.bin_edges.front();
    double xhi = hist.bin_edges.back();
    std::size_t cmax = 1;
    for (std::size_t n : hist.counts) cmax = std::max(cmax, n);
    auto ymax_ticks = nice_ticks(static_cast<double>(cmax), 5);
    double ymax = std::max(static_cast<double>(cmax), ymax_ticks.back());

    auto px = [&](double v) { return ml + pw * (v - xlo) / (xhi - xlo); };
    auto py = [&](double n) { return mt + ph * (1.0 - n / ymax); };

    c.text(ml + pw / 2, mt - 24, title, 15, "middle", "#111111");
    c.text(ml + pw / 2, mt - 8,
           "mean " + num_fixed(hist.mean, 3) + ", sd " + num_fixed(hist.sd, 3) + ", n " +
               std::to_string(hist.n_scored),
           11, "middle", "#555555");

    for (double t : ymax_ticks) {
        c.line(ml, py(t), ml + pw, py(t), "#dddddd", 0.5);
        c.text(ml - 8, py(t) + 4, num_compact(t), 11, "end");
    }
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        double x0 = px(hist.bin_edges[i]);
        double x1 = px(hist.bin_edges[i + 1]);
        double y = py(static_cast<double>(hist.counts[i]));
        c.rect(x0, y, x1 - x0, mt + ph - y, "#1f77b4",
               " fill-opacity=\"0.75\" stroke=\"#ffffff\" stroke-width=\"0.5\"");
    }
    c.line(ml, mt + ph, ml + pw, mt + ph, "#333333", 1.0);
    c.line(ml, mt, ml, mt + ph, "#333333", 1.0);
    // a handful of x labels across the range
    for (int i = 0; i <= 4; ++i) {
        double v = xlo + (xhi - xlo) * i / 4.0;
        c.line(px(v), mt + ph, px(v), mt + ph + 4, "#333333", 1.0);
        c.text(px(v), mt + ph + 18, num_fixed(v, 2), 11, "middle");
    }
    c.text(ml + pw / 2, mt + ph + 36, "log odds of survival", 12, "middle");
    c.text(16, mt + ph / 2, "patients", 12, "middle", "#333333",
           " transform=\"rotate(-90 16 " + coord(mt + ph / 2) + ")\"");
    return c.str();
}

}  // namespace survkit::figures
