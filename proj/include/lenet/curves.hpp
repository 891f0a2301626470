#ifndef LENET_CURVES_HPP
#define LENET_CURVES_HPP

// Training-curve log (CSV) and its two-panel SVG rendering.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lenet/train.hpp"

namespace lenet {

inline constexpr std::string_view kCurvesHeader = "epoch,train_loss,train_acc,val_loss,val_acc";

inline std::string format_g6(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string curves_csv(const std::vector<EpochRecord>& records)
{
    std::string out(kCurvesHeader);
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.epoch) + ',' + format_g6(r.train_loss) + ',' + format_g6(r.train_acc) + ',' +
               format_g6(r.val_loss) + ',' + format_g6(r.val_acc) + '\n';
    }
    return out;
}

inline std::vector<EpochRecord> parse_curves_csv(std::string_view text)
{
    auto fail = [](std::size_t line, const std::string& why) {
        throw Error(ErrorKind::MalformedInput, "curves CSV line " + std::to_string(line) + ": " + why);
    };
    std::vector<EpochRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1) {
            if (line != kCurvesHeader) fail(1, "expected header '" + std::string(kCurvesHeader) + "'");
            continue;
        }
        if (line.empty()) continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 5) fail(line_no, "expected 5 fields, got " + std::to_string(fields.size()));

        EpochRecord r;
        auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), r.epoch);
        if (ec != std::errc{} || p != fields[0].data() + fields[0].size()) fail(line_no, "bad epoch");
        double* targets[] = {&r.train_loss, &r.train_acc, &r.val_loss, &r.val_acc};
        for (std::size_t i = 0; i < 4; ++i) {
            const auto f = fields[i + 1];
            auto [q, ec2] = std::from_chars(f.data(), f.data() + f.size(), *targets[i]);
            if (ec2 != std::errc{} || q != f.data() + f.size()) fail(line_no, "bad number '" + std::string(f) + "'");
        }
        records.push_back(r);
    }
    if (line_no == 0) fail(0, "empty file");
    if (records.empty()) fail(line_no, "no data rows");
    return records;
}

namespace detail {

struct Panel {
    double x, y, w, h;
};

inline std::string svg_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string label_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline void range_of(const std::vector<double>& a, const std::vector<double>& b, double& lo, double& hi)
{
    lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
    hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    if (hi - lo <= 0.0) {
        const double pad = lo == 0.0 ? 0.5 : 0.05 * std::abs(lo);
        lo -= pad;
        hi += pad;
    }
}

inline void draw_panel(std::ostringstream& os, const Panel& p, const std::string& title, const std::string& ylabel,
                       const std::vector<double>& epochs, const std::vector<double>& train,
                       const std::vector<double>& val)
{
    double x_lo = epochs.empty() ? 0.0 : epochs.front(), x_hi = epochs.empty() ? 1.0 : epochs.back();
    if (x_hi - x_lo <= 0.0) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    double y_lo = 0.0, y_hi = 1.0;
    if (!train.empty()) range_of(train, val, y_lo, y_hi);
    auto px = [&](double e) { return p.x + (e - x_lo) / (x_hi - x_lo) * p.w; };
    auto py = [&](double v) { return p.y + p.h - (v - y_lo) / (y_hi - y_lo) * p.h; };

    os << "  <g>\n";
    os << "    <text x=\"" << svg_num(p.x + p.w / 2) << "\" y=\"" << svg_num(p.y - 12)
       << "\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    os << "    <rect x=\"" << svg_num(p.x) << "\" y=\"" << svg_num(p.y) << "\" width=\"" << svg_num(p.w) << "\" height=\""
       << svg_num(p.h) << "\" fill=\"none\" stroke=\"#000\"/>\n";
    os << "    <text x=\"" << svg_num(p.x + p.w / 2) << "\" y=\"" << svg_num(p.y + p.h + 34)
       << "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";
    os << "    <text x=\"" << svg_num(p.x - 44) << "\" y=\"" << svg_num(p.y + p.h / 2) << "\" text-anchor=\"middle\""
       << " font-size=\"12\" transform=\"rotate(-90 " << svg_num(p.x - 44) << ' ' << svg_num(p.y + p.h / 2) << ")\">"
       << ylabel << "</text>\n";
    // Min/max tick labels.
    os << "    <text x=\"" << svg_num(p.x) << "\" y=\"" << svg_num(p.y + p.h + 16)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << label_num(x_lo) << "</text>\n";
    os << "    <text x=\"" << svg_num(p.x + p.w) << "\" y=\"" << svg_num(p.y + p.h + 16)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << label_num(x_hi) << "</text>\n";
    os << "    <text x=\"" << svg_num(p.x - 6) << "\" y=\"" << svg_num(p.y + p.h)
       << "\" text-anchor=\"end\" font-size=\"10\">" << label_num(y_lo) << "</text>\n";
    os << "    <text x=\"" << svg_num(p.x - 6) << "\" y=\"" << svg_num(p.y + 10)
       << "\" text-anchor=\"end\" font-size=\"10\">" << label_num(y_hi) << "</text>\n";

    auto polyline = [&](const std::vector<double>& ys, const char* cls, const char* color, const char* dash) {
        os << "    <polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (dash) os << " stroke-dasharray=\"" << dash << '"';
        os << " points=\"";
        for (std::size_t i = 0; i < ys.size(); ++i) {
            if (i) os << ' ';
            os << svg_num(px(epochs[i])) << ',' << svg_num(py(ys[i]));
        }
        os << "\"/>\n";
    };
    if (!epochs.empty()) {
        polyline(train, "train", "#d95f02", "2,3");
        polyline(val, "validation", "#1b9e77", nullptr);
    }
    os << "  </g>\n";
}

} // namespace detail

/// Loss (left) and accuracy (right) against epoch; training dotted, validation solid.
/// With no records the panels are drawn empty.
inline std::string render_curves_svg(const std::vector<EpochRecord>& records)
{
    std::vector<double> epochs, tl, ta, vl, va;
    for (const auto& r : records) {
        epochs.push_back(static_cast<double>(r.epoch));
        tl.push_back(r.train_loss);
        ta.push_back(r.train_acc);
        vl.push_back(r.val_loss);
        va.push_back(r.val_acc);
    }
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"920\" height=\"400\" viewBox=\"0 0 920 400\">\n";
    os << "  <rect width=\"920\" height=\"400\" fill=\"#fff\"/>\n";
    detail::draw_panel(os, {70, 40, 360, 280}, "(a) loss", "loss", epochs, tl, vl);
    detail::draw_panel(os, {530, 40, 360, 280}, "(b) accuracy", "accuracy", epochs, ta, va);
    os << "  <g font-size=\"12\">\n";
    os << "    <line x1=\"300\" y1=\"375\" x2=\"330\" y2=\"375\" stroke=\"#d95f02\" stroke-width=\"1.5\" "
          "stroke-dasharray=\"2,3\"/>\n";
    os << "    <text x=\"336\" y=\"379\">training</text>\n";
    os << "    <line x1=\"450\" y1=\"375\" x2=\"480\" y2=\"375\" stroke=\"#1b9e77\" stroke-width=\"1.5\"/>\n";
    os << "    <text x=\"486\" y=\"379\">validation</text>\n";
    os << "  </g>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace lenet

#endif
